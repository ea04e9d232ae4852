#ifndef POLICYBOUNDS_ORACLE_HPP
#define POLICYBOUNDS_ORACLE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "policybounds/identify.hpp"
#include "policybounds/model.hpp"

namespace policybounds::oracle {

/// Full response map of one latent type: d[z][a] = D(z, a).
struct ResponseType {
  std::vector<std::array<std::uint8_t, 2>> d;

  int d0(std::size_t z) const { return d[z][0]; }
  int d1(std::size_t z) const { return d[z][1]; }
};

struct TypeFilters {
  bool policy_monotonicity = false;  // D(z,1) >= D(z,0) for all z
  bool iv_monotonicity = false;      // status-quo decisions threshold in a
                                     // common leniency order
  bool policy_invariance = false;    // both arms threshold, d1 >= d0
};

struct TypeSpace {
  std::size_t K = 0;
  TypeFilters filters;
  std::vector<ResponseType> types;
};

/// Judge indices sorted most lenient first (rate descending, ties by id).
std::vector<std::size_t> leniency_order(const DataDistribution& data);
std::vector<std::size_t> leniency_order(const std::vector<double>& rates,
                                        const std::vector<std::string>& ids);

/// Exhaustive response-type enumeration, exponential in K (hard cap).
/// status_quo_order / counterfactual_order are leniency orders used by the
/// IVMonotonicity and PolicyInvariance filters (identity order if empty).
TypeSpace enumerate_types(std::size_t K, const TypeFilters& filters,
                          const std::vector<std::size_t>& status_quo_order = {},
                          const std::vector<std::size_t>& counterfactual_order = {},
                          std::size_t cap = 8);

struct TypeLPOptions {
  /// Replace per-judge quota rows with one aggregate P*(D(Z,1)=1) = alpha row.
  std::optional<double> average_quota;
  /// Encode P*(D(z,1)=1 | D(z_max,0)=1) = 1 for all z as joint constraints.
  bool strong_encouragement = false;
};

/// Brute-force reference: LP over joint masses m(type, y0, y1). Joint
/// restrictions (disagreement bounds) are imposed directly on type masses.
BoundsResult solve_type_lp(const DataDistribution& data,
                           const PolicySpec& policy,
                           const RestrictionSet& restrictions,
                           const TypeSpace& typespace,
                           const TypeLPOptions& options = {});

/// Closed-form step-function bounds on the cdf of Y(1) | policy complier
/// under an average quota alpha with Y(0) = 0, plus the implied bounds on
/// the complier mean and on theta.
struct CdfBounds {
  std::vector<double> grid;
  std::vector<double> lb, ub;       // complier cdf bounds at grid points
  double complier_mean_lb = 0.0;    // expectation of ub cdf
  double complier_mean_ub = 0.0;    // expectation of lb cdf
  double theta_lb = 0.0;
  double theta_ub = 0.0;
  bool point_identified = false;    // alpha <= status-quo rate
};

CdfBounds closed_form_cdf_bounds(const DataDistribution& data, double alpha);

}  // namespace policybounds::oracle

#endif  // POLICYBOUNDS_ORACLE_HPP
