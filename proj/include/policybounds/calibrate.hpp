#ifndef POLICYBOUNDS_CALIBRATE_HPP
#define POLICYBOUNDS_CALIBRATE_HPP

#include <string>
#include <vector>

namespace policybounds::calibrate {

/// Standard normal cdf and its inverse.
double norm_cdf(double x);
double norm_quantile(double p);

/// P(X <= a, Y <= b) for a standard bivariate normal pair with correlation
/// rho. Absolute error <= 1e-10; |rho| = 1 handled analytically.
double bvn_orthant(double rho, double a, double b);

/// Correlated-signal model of judge decisions: judge z releases case u when
/// its signal V_z is below the threshold Phi^{-1}(rate_z). Signals share a
/// common correlation rho across judges.
struct SignalModel {
  double rho = 0.0;
  double quota = 0.5;                // counterfactual rate for group-0 judges
  std::vector<double> rates;         // status-quo release rates, in (0, 1)
  std::vector<int> group;            // 0 = quota group Q, 1 = benchmark Q^c
  std::vector<double> caseloads;     // pair weights
  // The source derivation divides every pair term by the quota, valid when
  // the benchmark rates equal the quota; by default we divide by the
  // benchmark judge's actual rate instead.
  bool divide_by_quota = false;
};

/// Average disagreement probability implied by the signal model: the
/// caseload-weighted mean over pairs (z in Q, z' in Q^c) of
/// P(V_z > Phi^{-1}(q), V_{z'} <= Phi^{-1}(rate_{z'})) / P(release by z').
double dp_from_rho(const SignalModel& model);

/// Inverts dp_from_rho by bisection (it is strictly decreasing in rho).
double rho_from_dp(const SignalModel& model_sans_rho, double target_dp);

/// OD_bar = delta_te * DP_bar * q and its inverse.
double od_from_dp(double delta_te, double dp_bar, double q);
double dp_from_od(double delta_te, double od_bar, double q);

/// Joint voting behavior of one judge pair on shared cases.
struct PairStat {
  std::string pair_id;
  double rate_a = 0.0;
  double rate_b = 0.0;
  double joint_rate = 0.0;  // both release
  long n_cases = 0;
};

/// Signal correlation implied by panel votes: per pair, the rho solving
/// bvn_orthant(rho, Phi^{-1}(rate_a), Phi^{-1}(rate_b)) = joint_rate,
/// averaged with case weights. Pairs whose joint rate violates the Frechet
/// bounds of the marginals are skipped with a warning.
double rho_from_panel_votes(const std::vector<PairStat>& pairs,
                            std::vector<std::string>* warnings = nullptr);

/// Parses the pair_stats CSV (columns pair_id, rate_a, rate_b, joint_rate,
/// n_cases). Throws std::runtime_error with row diagnostics on bad input.
std::vector<PairStat> parse_pair_stats_csv(const std::string& path);

}  // namespace policybounds::calibrate

#endif  // POLICYBOUNDS_CALIBRATE_HPP
