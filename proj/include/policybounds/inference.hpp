#ifndef POLICYBOUNDS_INFERENCE_HPP
#define POLICYBOUNDS_INFERENCE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "policybounds/effects.hpp"
#include "policybounds/identify.hpp"
#include "policybounds/model.hpp"

namespace policybounds::inference {

/// Simultaneous band over the data moments: per-judge cell probabilities
/// (ordered judge-major, within judge y-major with released before detained)
/// plus the three aggregate moments (group outcome gap, the two group
/// release rates).
struct MomentBand {
  Eigen::VectorXd estimates;
  Eigen::VectorXd ses;
  Eigen::VectorXd agg_estimates;  // empty when aggregates are disabled
  Eigen::VectorXd agg_ses;
  double cv_cells = 0.0;
  double cv_agg = 0.0;
  double level_cells = 0.0;
  double level_agg = 0.0;
};

struct BandConfig {
  double level_cells = 0.99;
  double level_agg = 0.96;
  int draws = 20000;
  std::uint64_t seed = 0;
  bool use_aggregates = true;
  bool pc_effect = false;  // report the policy-complier ratio instead of theta
  // replaces the multinomial cell ses (same ordering as MomentBand), for
  // covariate-adjusted inputs
  std::optional<std::vector<double>> external_ses;
};

/// Level-quantile of max over moments of |standardized Gaussian draw| (or of
/// the signed draw when one_sided), simulated blockwise: moments in different
/// blocks are independent. Deterministic for a fixed seed.
double supt_critical_value(const std::vector<Eigen::MatrixXd>& corr_blocks,
                           double level, int draws, std::uint64_t seed,
                           bool one_sided = false);

struct CIResult {
  double lower = std::nan("");
  double upper = std::nan("");
  double level = 0.0;
  std::string method;
  int draws = 0;
  std::uint64_t seed = 0;
  bool empty = false;  // model rejected at this level
  std::vector<std::string> warnings;
};

/// Multinomial moment band for the given data, with sup-t critical values.
MomentBand compute_moment_band(const DataDistribution& data,
                               const BandConfig& cfg);

/// Projection CI: the identified-set LP with the data-match equalities
/// relaxed to the simultaneous band, plus banded aggregate-moment rows.
CIResult ci_projection(const DataDistribution& data, const PolicySpec& policy,
                       const RestrictionSet& restrictions,
                       const BandConfig& cfg);

/// Universal-release CI for binary Y with Y(0) = 0: a joint one-sided band
/// over the 2K judge moments, intersected across judges.
CIResult ci_universal_intersection(const DataDistribution& data, double level,
                                   int draws, std::uint64_t seed);

struct DeltaCIConfig {
  double level_first = 0.955;
  double level_second = 0.995;
  int draws = 20000;
  std::uint64_t seed = 0;
  int grid_n = 100;
};

/// Two-step CI for the disparate impact parameter: a joint first-step
/// confidence set for the race-specific universal-release means, then a
/// union of delta-method intervals over a grid of points inside it.
CIResult ci_delta_two_step(const DataDistribution& data_black,
                           const DataDistribution& data_white,
                           double case_share_black, const DeltaCIConfig& cfg);

}  // namespace policybounds::inference

#endif  // POLICYBOUNDS_INFERENCE_HPP
