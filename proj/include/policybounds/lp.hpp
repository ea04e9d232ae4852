#ifndef POLICYBOUNDS_LP_HPP
#define POLICYBOUNDS_LP_HPP

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace policybounds::lp {

inline constexpr double kFeasTol = 1e-8;
inline constexpr double kOptTol = 1e-7;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEq, Eq, GreaterEq };
enum class Sense { Minimize, Maximize };

/// Sparse constraint row: sorted unique column indices with coefficients.
struct Row {
  std::vector<std::pair<int, double>> terms;
  Relation relation = Relation::Eq;
  double rhs = 0.0;
};

/// Generic LP over variables with bounds [lo, hi] (defaults [0, +inf)).
///
/// min/max c'x + offset  s.t.  rows, lo <= x <= hi.
struct LPProblem {
  Sense sense = Sense::Maximize;
  std::vector<double> objective;
  double objective_offset = 0.0;
  std::vector<Row> rows;
  std::vector<double> lower;  // per-variable lo
  std::vector<double> upper;  // per-variable hi
  std::vector<std::string> names;  // optional, for dumps

  int num_vars() const { return static_cast<int>(objective.size()); }

  /// Appends n variables with bounds [lo, hi]; returns the first new index.
  int add_vars(int n, double lo = 0.0, double hi = kInf,
               const std::string& name_prefix = "");
  void add_row(Row row) { rows.push_back(std::move(row)); }
  void add_row(std::vector<std::pair<int, double>> terms, Relation rel, double rhs);

  /// Debug dump in CPLEX-LP-like text format with deterministic naming.
  std::string dump() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct LPSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  Eigen::VectorXd primal;
  double feasibility_residual = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Dense two-phase simplex (Dantzig pricing with Bland anti-cycling).
LPSolution solve(const LPProblem& p);

/// Solves min and max of the objective over the same constraint set.
std::pair<LPSolution, LPSolution> solve_pair(const LPProblem& p);

const char* status_name(SolveStatus s);

}  // namespace policybounds::lp

#endif  // POLICYBOUNDS_LP_HPP
