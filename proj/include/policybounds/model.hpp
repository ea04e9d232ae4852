#ifndef POLICYBOUNDS_MODEL_HPP
#define POLICYBOUNDS_MODEL_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace policybounds {

// Default tolerance for probability validation. Ingested rates typically come
// from regressions and carry rounding noise, so violations smaller than this
// are repaired (clipped and renormalized) rather than rejected.
inline constexpr double kProbTol = 1e-9;

/// Sorted finite support of the outcome variable.
class OutcomeGrid {
 public:
  OutcomeGrid() = default;
  explicit OutcomeGrid(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double span() const { return max() - min(); }

  /// Index of an exact grid value, or nullopt.
  std::optional<std::size_t> index_of(double y, double tol = 1e-12) const;

  static OutcomeGrid binary() { return OutcomeGrid({0.0, 1.0}); }

 private:
  std::vector<double> values_;  // strictly increasing, non-empty
};

/// One judge cell: share, caseload, quota-group tag and the conditional pmf
/// of (Y, D) given Z = this judge. pmf is indexed by (grid index, d).
struct JudgeCell {
  std::string id;
  double share = 0.0;   // P(Z = z)
  long n_cases = 1;
  int group = 0;        // 0 = quota group Q, 1 = benchmark group Q^c
  // pmf[y_index][d], sums to 1 within tolerance
  std::vector<std::array<double, 2>> pmf;

  double release_rate() const;       // E[D | Z=z]
  double prob(std::size_t yi, int d) const { return pmf[yi][d]; }
};

/// Observed judge-level joint pmf P(Y=y, D=d | Z=z) with judge shares.
struct DataDistribution {
  std::vector<JudgeCell> judges;
  OutcomeGrid grid;

  std::size_t num_judges() const { return judges.size(); }
  double aggregate_release_rate() const;  // E[D]
  double aggregate_mean_outcome() const;  // E[Y]
  /// Judges with the given group tag.
  std::vector<std::size_t> group_members(int group) const;
  /// Index of the most lenient judge (ties broken by judge id).
  std::size_t most_lenient() const;
};

struct ValidationIssue {
  bool fatal = false;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool repaired = false;

  bool ok() const;
  bool has_fatal() const;
  std::string summary() const;
};

/// Checks all invariants; repairable violations (tiny negative entries,
/// shares off by < tol) are fixed in place and flagged in the report.
ValidationReport validate_instance(DataDistribution& data, double tol = kProbTol);

/// Merges judges with fewer than min_cases cases into a single synthetic
/// judge (caseload-weighted pmf), one per group when within_group is set.
DataDistribution pool_judges(const DataDistribution& data, long min_cases,
                             bool within_group = true);

enum class RoundDirection { Up, Down };

/// Moves outcome mass to the nearest target grid point at or above (Up) /
/// below (Down). Up yields a conservative upper-bound instance, Down a
/// conservative lower-bound instance.
DataDistribution discretize_outcome(const DataDistribution& data,
                                    const OutcomeGrid& target_grid,
                                    RoundDirection direction);

/// Counterfactual treatment-rate specification.
struct PolicySpec {
  enum class Kind { Universal, Quota, PerJudge, StatusQuo, Reallocation };
  Kind kind = Kind::StatusQuo;
  double quota = 0.0;                     // Kind::Quota
  std::vector<double> per_judge_rates;    // Kind::PerJudge
  int reallocation_group = 1;             // Kind::Reallocation target

  static PolicySpec universal() { return {Kind::Universal, 0, {}, 1}; }
  static PolicySpec status_quo() { return {Kind::StatusQuo, 0, {}, 1}; }
  static PolicySpec with_quota(double q) { return {Kind::Quota, q, {}, 1}; }
  static PolicySpec per_judge(std::vector<double> rates) {
    return {Kind::PerJudge, 0, std::move(rates), 1};
  }
  static PolicySpec reallocation(int target_group) {
    return {Kind::Reallocation, 0, {}, target_group};
  }

  /// Resolves alpha_{1,z} for every judge against the data. A quota q
  /// resolves as max{E[D|Z=z], q}: judges above the quota keep their
  /// status-quo rates.
  std::vector<double> resolve_rates(const DataDistribution& data) const;
};

// --- Restriction vocabulary -------------------------------------------------

struct PolicyMonotonicity {};               // D(z,1) >= D(z,0) for all z
struct KnownY0 { double value = 0.0; };     // Y(0) == value a.s.
struct KnownY1 { double value = 0.0; };     // Y(1) == value a.s.
struct MonotoneTreatmentResponse {};        // Y(1) >= Y(0)
struct PCBound {                            // policy-complier outcome bounds,
  std::vector<std::size_t> judges;          // empty = every judge in group Q
};
struct TreatmentEffectCap { double cap = 1.0; };  // E[Y(1)-Y(0)|complier] <= c
struct PairwiseDisagreement {
  std::size_t z = 0, z_prime = 0;
  int a = 1, a_prime = 1;
  double delta = 1.0;
};
struct AverageDisagreement {
  double dp_bar = 1.0;
  bool caseload_weighted = true;
};
struct OutcomeDisparity { double od_bar = 0.0; };

using RestrictionSpec =
    std::variant<PolicyMonotonicity, KnownY0, KnownY1, MonotoneTreatmentResponse,
                 PCBound, TreatmentEffectCap, PairwiseDisagreement,
                 AverageDisagreement, OutcomeDisparity>;

struct RestrictionSet {
  std::vector<RestrictionSpec> items;

  RestrictionSet& add(RestrictionSpec spec) {
    items.push_back(std::move(spec));
    return *this;
  }
  bool has_policy_monotonicity() const;
  std::optional<double> known_y0() const;
};

}  // namespace policybounds

#endif  // POLICYBOUNDS_MODEL_HPP
