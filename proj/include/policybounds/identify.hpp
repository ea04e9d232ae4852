#ifndef POLICYBOUNDS_IDENTIFY_HPP
#define POLICYBOUNDS_IDENTIFY_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "policybounds/lp.hpp"
#include "policybounds/model.hpp"

namespace policybounds {

/// Bijective map (z, y0, y1, d0, d1) -> LP column for the stacked marginals
/// pi_z(y0, y1, d0, d1). Columns [0, 4*ny^2*K) are pi; aux columns follow.
struct PiIndex {
  std::size_t K = 0;
  std::size_t ny = 0;

  int operator()(std::size_t z, std::size_t i0, std::size_t i1, int d0,
                 int d1) const {
    return static_cast<int>((((z * ny + i0) * ny + i1) << 2) |
                            (static_cast<std::size_t>(d0) << 1) |
                            static_cast<std::size_t>(d1));
  }
  int num_pi() const { return static_cast<int>(4 * ny * ny * K); }
};

/// Bound-computation context: data, resolved policy rates and the column map.
struct IdentifyProblem {
  const DataDistribution* data = nullptr;
  PolicySpec policy;
  std::vector<double> rates;  // alpha_{1,z}, resolved against data
  RestrictionSet restrictions;
  PiIndex idx;

  const DataDistribution& dist() const { return *data; }
};

IdentifyProblem make_identify_problem(const DataDistribution& data,
                                      const PolicySpec& policy,
                                      const RestrictionSet& restrictions);

struct BoundsDiagnostics {
  int data_rows = 0;
  int margin_rows = 0;
  int mass_rows = 0;
  int quota_rows = 0;
  int restriction_rows = 0;
  int pi_columns = 0;
  int aux_columns = 0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;

  int structural_rows() const {
    return data_rows + margin_rows + mass_rows + quota_rows;
  }
  int total_rows() const { return structural_rows() + restriction_rows; }
};

/// Identified set for theta = E[Y(D(Z,1))] in outcome units. An infeasible
/// LP means the maintained assumptions are rejected by the data; that is a
/// first-class result (empty set), not an error.
struct BoundsResult {
  double lower = std::nan("");
  double upper = std::nan("");
  lp::SolveStatus lower_status = lp::SolveStatus::NumericalFailure;
  lp::SolveStatus upper_status = lp::SolveStatus::NumericalFailure;
  std::optional<Eigen::VectorXd> argmin;  // optimizing pi, when requested
  std::optional<Eigen::VectorXd> argmax;
  BoundsDiagnostics diagnostics;
  std::vector<std::string> warnings;

  bool both_optimal() const {
    return lower_status == lp::SolveStatus::Optimal &&
           upper_status == lp::SolveStatus::Optimal;
  }
  bool empty() const {
    return lower_status == lp::SolveStatus::Infeasible ||
           upper_status == lp::SolveStatus::Infeasible;
  }
  bool failed() const {
    return lower_status == lp::SolveStatus::NumericalFailure ||
           upper_status == lp::SolveStatus::NumericalFailure;
  }
  double width() const { return upper - lower; }
};

/// Compiles the identification conditions plus restrictions into one LP.
/// The constraint set is direction-independent; sense picks the endpoint.
lp::LPProblem build_identify_lp(const IdentifyProblem& ctx, lp::Sense sense,
                                BoundsDiagnostics* diag = nullptr,
                                std::vector<std::string>* warnings = nullptr);

BoundsResult identified_set(const DataDistribution& data,
                            const PolicySpec& policy,
                            const RestrictionSet& restrictions,
                            bool keep_argopt = false);

/// Closed-form fast path for universal release with binary Y and Y(0) = 0:
/// the intersection of judge intervals [P(Y=1,D=1|z), 1 - P(Y=0,D=1|z)].
BoundsResult intersection_bounds_universal(const DataDistribution& data);

}  // namespace policybounds

#endif  // POLICYBOUNDS_IDENTIFY_HPP
