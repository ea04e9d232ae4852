#include "policybounds/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace policybounds::lp {

int LPProblem::add_vars(int n, double lo, double hi, const std::string& name_prefix) {
  int first = num_vars();
  objective.resize(first + n, 0.0);
  lower.resize(first + n, lo);
  upper.resize(first + n, hi);
  if (!name_prefix.empty()) {
    names.resize(first + n);
    for (int i = 0; i < n; ++i) names[first + i] = name_prefix + std::to_string(i);
  } else if (!names.empty()) {
    names.resize(first + n);
  }
  return first;
}

void LPProblem::add_row(std::vector<std::pair<int, double>> terms, Relation rel,
                        double rhs) {
  Row r;
  r.terms = std::move(terms);
  r.relation = rel;
  r.rhs = rhs;
  rows.push_back(std::move(r));
}

std::string LPProblem::dump() const {
  auto var_name = [&](int j) {
    if (j < static_cast<int>(names.size()) && !names[j].empty()) return names[j];
    return "x" + std::to_string(j);
  };
  std::ostringstream os;
  os << (sense == Sense::Maximize ? "Maximize\n obj:" : "Minimize\n obj:");
  for (int j = 0; j < num_vars(); ++j)
    if (objective[j] != 0.0)
      os << (objective[j] >= 0 ? " +" : " ") << objective[j] << " " << var_name(j);
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << " c" << i << ":";
    for (const auto& [j, a] : rows[i].terms)
      os << (a >= 0 ? " +" : " ") << a << " " << var_name(j);
    switch (rows[i].relation) {
      case Relation::LessEq: os << " <= "; break;
      case Relation::Eq: os << " = "; break;
      case Relation::GreaterEq: os << " >= "; break;
    }
    os << rows[i].rhs << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < num_vars(); ++j)
    os << " " << lower[j] << " <= " << var_name(j) << " <= " << upper[j] << "\n";
  os << "End\n";
  return os.str();
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;

// Dense two-phase tableau simplex over shifted variables u = x - lo >= 0.
// Artificial columns are implicit: they start as the identity basis of their
// row and are dropped once they leave the basis.
class Simplex {
 public:
  explicit Simplex(const LPProblem& p) : prob_(p) { build(); }

  SolveStatus phase1();
  // Optimizes c over the current feasible basis (Minimize form internally).
  SolveStatus phase2(const Eigen::VectorXd& min_cost);

  Eigen::VectorXd extract_primal() const;
  int iterations() const { return iterations_; }
  int num_cols() const { return n_; }

 private:
  void build();
  void pivot(int row, int col);
  int price(const Eigen::RowVectorXd& cost, bool bland) const;
  int ratio_test(int col) const;
  SolveStatus iterate(Eigen::RowVectorXd& cost);

  const LPProblem& prob_;
  Eigen::MatrixXd T_;        // m x n tableau (structural + slack columns)
  Eigen::VectorXd rhs_;      // m
  std::vector<int> basis_;   // basis_[i] < n_: stored column; >= n_: artificial
  int m_ = 0, n_ = 0, n_struct_ = 0;
  int iterations_ = 0;
};

void Simplex::build() {
  const int nv = prob_.num_vars();
  n_struct_ = nv;
  for (int j = 0; j < nv; ++j)
    if (!std::isfinite(prob_.lower[j]))
      throw std::invalid_argument("lp::solve: free variables not supported");

  // Rows: user rows plus one per finite upper bound.
  std::vector<Row> all_rows = prob_.rows;
  for (int j = 0; j < nv; ++j) {
    if (std::isfinite(prob_.upper[j])) {
      Row r;
      r.terms = {{j, 1.0}};
      r.relation = Relation::LessEq;
      r.rhs = prob_.upper[j];
      all_rows.push_back(std::move(r));
    }
  }
  m_ = static_cast<int>(all_rows.size());

  // Shift rhs by lower bounds, normalize rhs >= 0, count slack columns.
  std::vector<double> rhs(m_);
  std::vector<int> sign(m_, 1);
  std::vector<Relation> rel(m_);
  int n_slack = 0;
  for (int i = 0; i < m_; ++i) {
    double b = all_rows[i].rhs;
    for (const auto& [j, a] : all_rows[i].terms) b -= a * prob_.lower[j];
    rel[i] = all_rows[i].relation;
    if (b < 0) {
      sign[i] = -1;
      b = -b;
      if (rel[i] == Relation::LessEq) rel[i] = Relation::GreaterEq;
      else if (rel[i] == Relation::GreaterEq) rel[i] = Relation::LessEq;
    }
    rhs[i] = b;
    if (rel[i] != Relation::Eq) ++n_slack;
  }
  n_ = nv + n_slack;

  T_ = Eigen::MatrixXd::Zero(m_, n_);
  rhs_ = Eigen::Map<Eigen::VectorXd>(rhs.data(), m_);
  basis_.assign(m_, -1);

  int slack = nv;
  for (int i = 0; i < m_; ++i) {
    for (const auto& [j, a] : all_rows[i].terms) T_(i, j) += sign[i] * a;
    if (rel[i] == Relation::LessEq) {
      T_(i, slack) = 1.0;
      basis_[i] = slack++;
    } else if (rel[i] == Relation::GreaterEq) {
      T_(i, slack) = -1.0;
      ++slack;
      basis_[i] = n_ + i;  // artificial
    } else {
      basis_[i] = n_ + i;  // artificial
    }
  }
}

void Simplex::pivot(int row, int col) {
  double piv = T_(row, col);
  Eigen::RowVectorXd prow = T_.row(row) / piv;
  double prhs = rhs_(row) / piv;
  Eigen::VectorXd colv = T_.col(col);
  colv(row) = 0.0;
  T_.noalias() -= colv * prow;
  rhs_.noalias() -= colv * prhs;
  T_.row(row) = prow;
  rhs_(row) = prhs;
  // clean tiny negatives from roundoff
  if (rhs_(row) < 0 && rhs_(row) > -kPivotTol) rhs_(row) = 0;
  basis_[row] = col;
  ++iterations_;
}

int Simplex::price(const Eigen::RowVectorXd& cost, bool bland) const {
  if (bland) {
    for (int j = 0; j < n_; ++j)
      if (cost(j) < -kCostTol) return j;
    return -1;
  }
  int best = -1;
  double best_val = -kCostTol;
  for (int j = 0; j < n_; ++j) {
    if (cost(j) < best_val) {
      best_val = cost(j);
      best = j;
    }
  }
  return best;
}

int Simplex::ratio_test(int col) const {
  int leave = -1;
  double best = kInf;
  for (int i = 0; i < m_; ++i) {
    double a = T_(i, col);
    if (a > kPivotTol) {
      double ratio = rhs_(i) / a;
      if (ratio < best - 1e-12 ||
          (ratio < best + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
        best = ratio;
        leave = i;
      }
    }
  }
  return leave;
}

SolveStatus Simplex::iterate(Eigen::RowVectorXd& cost) {
  const int bland_after = 2000 + 20 * m_;
  const int max_iters = 500 * (m_ + n_) + 200000;
  int local_iters = 0;
  while (true) {
    if (++local_iters > max_iters) return SolveStatus::NumericalFailure;
    bool bland = local_iters > bland_after;
    int enter = price(cost, bland);
    if (enter < 0) return SolveStatus::Optimal;
    int leave = ratio_test(enter);
    if (leave < 0) return SolveStatus::Unbounded;
    double centry = cost(enter);
    Eigen::RowVectorXd prow = T_.row(leave) / T_(leave, enter);
    pivot(leave, enter);
    cost.noalias() -= centry * prow;
    cost(enter) = 0.0;
  }
}

SolveStatus Simplex::phase1() {
  // reduced costs of minimizing the sum of (implicit) artificials
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(n_);
  double z = 0.0;
  bool any_artificial = false;
  for (int i = 0; i < m_; ++i) {
    if (basis_[i] >= n_) {
      cost -= T_.row(i);
      z += rhs_(i);
      any_artificial = true;
    }
  }
  if (any_artificial) {
    SolveStatus st = iterate(cost);
    if (st == SolveStatus::Unbounded || st == SolveStatus::NumericalFailure)
      return SolveStatus::NumericalFailure;
    z = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_) z += rhs_(i);
    if (z > kPhase1Tol) return SolveStatus::Infeasible;
    // Drive leftover zero-level artificials out of the basis when possible.
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= n_) {
        int col = -1;
        for (int j = 0; j < n_; ++j)
          if (std::abs(T_(i, j)) > 1e-7) { col = j; break; }
        if (col >= 0) pivot(i, col);
        // else: redundant row; the artificial stays basic at level zero.
      }
    }
  }
  return SolveStatus::Optimal;
}

SolveStatus Simplex::phase2(const Eigen::VectorXd& min_cost) {
  Eigen::RowVectorXd cost = min_cost.transpose();
  cost.conservativeResize(n_);
  for (int j = n_struct_; j < n_; ++j) cost(j) = 0.0;
  // reduce against the current basis
  for (int i = 0; i < m_; ++i) {
    if (basis_[i] < n_ && std::abs(cost(basis_[i])) > 0) {
      cost.noalias() -= cost(basis_[i]) * T_.row(i);
      cost(basis_[i]) = 0.0;
    }
  }
  return iterate(cost);
}

Eigen::VectorXd Simplex::extract_primal() const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(prob_.num_vars());
  for (int i = 0; i < m_; ++i)
    if (basis_[i] < n_struct_) x(basis_[i]) = rhs_(i);
  for (int j = 0; j < prob_.num_vars(); ++j) x(j) += prob_.lower[j];
  return x;
}

double residual(const LPProblem& p, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (const auto& row : p.rows) {
    double lhs = 0.0;
    for (const auto& [j, a] : row.terms) lhs += a * x(j);
    double v = lhs - row.rhs;
    switch (row.relation) {
      case Relation::Eq: worst = std::max(worst, std::abs(v)); break;
      case Relation::LessEq: worst = std::max(worst, v); break;
      case Relation::GreaterEq: worst = std::max(worst, -v); break;
    }
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    worst = std::max(worst, p.lower[j] - x(j));
    if (std::isfinite(p.upper[j])) worst = std::max(worst, x(j) - p.upper[j]);
  }
  return worst;
}

LPSolution finish(const LPProblem& p, const Simplex& sx, SolveStatus st) {
  LPSolution sol;
  sol.status = st;
  sol.iterations = sx.iterations();
  if (st != SolveStatus::Optimal) return sol;
  sol.primal = sx.extract_primal();
  double obj = p.objective_offset;
  for (int j = 0; j < p.num_vars(); ++j) obj += p.objective[j] * sol.primal(j);
  sol.objective = obj;
  sol.feasibility_residual = residual(p, sol.primal);
  if (sol.feasibility_residual > 100 * kFeasTol)
    sol.status = SolveStatus::NumericalFailure;
  return sol;
}

Eigen::VectorXd min_cost_vector(const LPProblem& p) {
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(),
                                                        p.num_vars());
  if (p.sense == Sense::Maximize) c = -c;
  return c;
}

}  // namespace

LPSolution solve(const LPProblem& p) {
  for (const auto& row : p.rows) {
    for (const auto& [j, a] : row.terms) {
      (void)a;
      if (j < 0 || j >= p.num_vars())
        throw std::invalid_argument("lp::solve: row references unknown column");
    }
    if (!std::isfinite(row.rhs))
      throw std::invalid_argument("lp::solve: non-finite rhs");
  }
  Simplex sx(p);
  SolveStatus st = sx.phase1();
  if (st != SolveStatus::Optimal) {
    LPSolution sol;
    sol.status = st;
    sol.iterations = sx.iterations();
    return sol;
  }
  st = sx.phase2(min_cost_vector(p));
  return finish(p, sx, st);
}

std::pair<LPSolution, LPSolution> solve_pair(const LPProblem& p) {
  Simplex sx(p);
  SolveStatus st = sx.phase1();
  if (st != SolveStatus::Optimal) {
    LPSolution sol;
    sol.status = st;
    sol.iterations = sx.iterations();
    return {sol, sol};
  }
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(),
                                                        p.num_vars());
  LPProblem pmin = p;
  pmin.sense = Sense::Minimize;
  LPSolution lo = finish(pmin, sx, sx.phase2(c));
  // warm start the max from the min-optimal basis
  LPProblem pmax = p;
  pmax.sense = Sense::Maximize;
  LPSolution hi = finish(pmax, sx, sx.phase2(-c));
  return {lo, hi};
}

}  // namespace policybounds::lp
