#ifndef POLICYBOUNDS_EFFECTS_HPP
#define POLICYBOUNDS_EFFECTS_HPP

#include <string>
#include <vector>

#include "policybounds/identify.hpp"
#include "policybounds/lp.hpp"
#include "policybounds/model.hpp"

namespace policybounds {

/// Average treatment effect for policy compliers, E[Y(1)-Y(0) | D(Z,1)>D(Z,0)].
struct PCEffectResult {
  double lower = std::nan("");
  double upper = std::nan("");
  double complier_mass = 0.0;  // E[D(Z,1)] - E[D]
  bool defined = false;        // false when the complier mass is (near) zero
  lp::SolveStatus lower_status = lp::SolveStatus::NumericalFailure;
  lp::SolveStatus upper_status = lp::SolveStatus::NumericalFailure;
  std::vector<std::string> warnings;

  bool both_optimal() const {
    return lower_status == lp::SolveStatus::Optimal &&
           upper_status == lp::SolveStatus::Optimal;
  }
  bool empty() const {
    return lower_status == lp::SolveStatus::Infeasible ||
           upper_status == lp::SolveStatus::Infeasible;
  }
};

/// Affine functional a'x + offset over the columns of an LPProblem.
struct AffineFunctional {
  std::vector<std::pair<int, double>> terms;
  double offset = 0.0;
};

struct FractionalResult {
  double lower = std::nan("");
  double upper = std::nan("");
  lp::SolveStatus lower_status = lp::SolveStatus::NumericalFailure;
  lp::SolveStatus upper_status = lp::SolveStatus::NumericalFailure;
  double denominator_min = std::nan("");
  double denominator_max = std::nan("");
  std::vector<std::string> warnings;

  bool both_optimal() const {
    return lower_status == lp::SolveStatus::Optimal &&
           upper_status == lp::SolveStatus::Optimal;
  }
};

/// Sharp bounds on numerator(x) / denominator(x) over the feasible set of
/// `base` (its objective is ignored). The denominator must stay positive; an
/// auxiliary LP certifies this, and a denominator that can reach zero makes
/// the corresponding side unbounded. Solved via the Charnes-Cooper
/// substitution u = t*x, t = 1/denominator(x), with t capped at
/// 1/min-denominator.
FractionalResult fractional_bounds(const lp::LPProblem& base,
                                   const AffineFunctional& numerator,
                                   const AffineFunctional& denominator,
                                   double denom_tol = 1e-10);

/// PC effect by dividing theta endpoints by the (constant) complier mass.
PCEffectResult pc_effect_from_theta(const BoundsResult& theta_bounds,
                                    const DataDistribution& data,
                                    const PolicySpec& policy);

/// PC effect as a linear-fractional program over the same feasible set as
/// identified_set. With per-judge quota rows the denominator is pinned and
/// this reduces to pc_effect_from_theta; it stays sharp when the feasible
/// set leaves the counterfactual rates free (band relaxations, rate ranges).
PCEffectResult pc_effect_fractional(const DataDistribution& data,
                                    const PolicySpec& policy,
                                    const RestrictionSet& restrictions);

/// Observed joints and case share for one race cell, inputs to Delta.
struct RaceMoments {
  double p_d1_y1 = 0.0;  // P(D=1, Y=1 | R=r)
  double p_d1_y0 = 0.0;  // P(D=1, Y=0 | R=r)
  double case_share = 0.5;
};

/// Aggregates a binary-outcome distribution into Delta inputs.
RaceMoments race_moments(const DataDistribution& data, double case_share);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct DisparateImpact {
  Interval delta;
  Interval fpr_b, fpr_w, tpr_b, tpr_w;
  std::vector<std::string> warnings;
};

/// Delta = (1-E[Y(1)])*(TPR_b - TPR_w) + E[Y(1)]*(FPR_b - FPR_w), optimized
/// over (e_b, e_w) in the given rectangle on a grid_n x grid_n grid, where
/// e_r = E[Y(1)|R=r]. The aggregate E[Y(1)] weights races by case share.
DisparateImpact disparate_impact(const Interval& ey1_b, const Interval& ey1_w,
                                 const RaceMoments& black,
                                 const RaceMoments& white, int grid_n = 100);

/// Point-identified effect of reallocating all cases to the target group:
/// E[Y | Z in target] - E[Y].
double reallocation_effect(const DataDistribution& data, int target_group);

/// Benchmark under homogeneous effects: the aggregate-data IV slope
/// (share-weighted regression of judge mean outcome on release rate) times
/// the policy's change in the aggregate release rate. Display only.
double tsls_benchmark(const DataDistribution& data, const PolicySpec& policy);

}  // namespace policybounds

#endif  // POLICYBOUNDS_EFFECTS_HPP
