#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "policybounds/lp.hpp"
#include "support/simplex_oracle.hpp"

using namespace policybounds;
using lp::LPProblem;
using lp::Relation;
using lp::Sense;
using lp::SolveStatus;

TEST_CASE("max x subject to x <= 3") {
  LPProblem p;
  p.sense = Sense::Maximize;
  p.add_vars(1);
  p.objective[0] = 1.0;
  p.add_row({{0, 1.0}}, Relation::LessEq, 3.0);
  auto s = lp::solve(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.primal(0) == doctest::Approx(3.0));
  CHECK(s.feasibility_residual <= lp::kFeasTol);
}

TEST_CASE("max x+y subject to x+y = 1") {
  LPProblem p;
  p.add_vars(2);
  p.objective = {1.0, 1.0};
  p.add_row({{0, 1.0}, {1, 1.0}}, Relation::Eq, 1.0);
  auto s = lp::solve(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("solve_pair on a box variable") {
  LPProblem p;
  p.add_vars(1, 0.0, 1.0);
  p.objective = {1.0};
  auto [lo, hi] = lp::solve_pair(p);
  REQUIRE(lo.optimal());
  REQUIRE(hi.optimal());
  CHECK(lo.objective == doctest::Approx(0.0));
  CHECK(hi.objective == doctest::Approx(1.0));
}

TEST_CASE("solve_pair with an equality-pinned variable") {
  LPProblem p;
  p.add_vars(1);
  p.objective = {2.0};
  p.add_row({{0, 1.0}}, Relation::Eq, 0.25);
  auto [lo, hi] = lp::solve_pair(p);
  REQUIRE(lo.optimal());
  REQUIRE(hi.optimal());
  CHECK(lo.objective == doctest::Approx(hi.objective));
  CHECK(hi.objective == doctest::Approx(0.5));
}

TEST_CASE("infeasible system is flagged, not mislabeled") {
  LPProblem p;
  p.add_vars(1);
  p.objective = {1.0};
  p.add_row({{0, 1.0}}, Relation::GreaterEq, 2.0);
  p.add_row({{0, 1.0}}, Relation::LessEq, 1.0);
  auto s = lp::solve(p);
  CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded ray detected") {
  LPProblem p;
  p.add_vars(1);
  p.objective = {1.0};
  auto s = lp::solve(p);
  CHECK(s.status == SolveStatus::Unbounded);
}

TEST_CASE("nonzero lower bounds are handled by shifting") {
  LPProblem p;
  p.add_vars(2, 0.5, 2.0);
  p.objective = {1.0, -1.0};
  p.add_row({{0, 1.0}, {1, 1.0}}, Relation::LessEq, 3.0);
  auto s = lp::solve(p);
  REQUIRE(s.optimal());
  CHECK(s.primal(0) == doctest::Approx(2.0));
  CHECK(s.primal(1) == doctest::Approx(0.5));
  CHECK(s.objective == doctest::Approx(1.5));
}

TEST_CASE("solution residuals stay within the feasibility tolerance") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 8;
    LPProblem p;
    p.add_vars(n, 0.0, 1.0);
    for (int j = 0; j < n; ++j) p.objective[j] = coef(rng);
    std::vector<double> x0(n);
    for (auto& v : x0) v = 0.5 * unit(rng);
    for (int i = 0; i < 6; ++i) {
      std::vector<std::pair<int, double>> terms;
      double lhs = 0;
      for (int j = 0; j < n; ++j) {
        double a = coef(rng);
        terms.push_back({j, a});
        lhs += a * x0[j];
      }
      p.add_row(terms, i % 2 ? Relation::LessEq : Relation::Eq,
                i % 2 ? lhs + 0.1 : lhs);
    }
    auto [lo, hi] = lp::solve_pair(p);
    REQUIRE(lo.optimal());
    REQUIRE(hi.optimal());
    CHECK(lo.feasibility_residual <= lp::kFeasTol);
    CHECK(hi.feasibility_residual <= lp::kFeasTol);
    CHECK(lo.objective <= hi.objective + lp::kOptTol);
  }
}

TEST_CASE("random dense LPs match an independent textbook simplex") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = 50;
  const int n_eq = 10, n_le = 20;  // plus 50 cap rows = 80 rows total

  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> c(n), x0(n);
    for (auto& v : c) v = coef(rng);
    for (auto& v : x0) v = unit(rng);

    LPProblem p;
    p.add_vars(n);
    p.objective = c;
    std::vector<testsupport::OracleRow> orows;

    auto push = [&](const std::vector<double>& a, Relation rel, double b) {
      std::vector<std::pair<int, double>> terms;
      for (int j = 0; j < n; ++j)
        if (a[j] != 0.0) terms.push_back({j, a[j]});
      p.add_row(terms, rel, b);
      testsupport::OracleRow r;
      r.a = a;
      r.rel = rel == Relation::LessEq ? -1 : (rel == Relation::Eq ? 0 : 1);
      r.b = b;
      orows.push_back(std::move(r));
    };

    for (int i = 0; i < n_eq + n_le; ++i) {
      std::vector<double> a(n);
      double lhs = 0;
      for (int j = 0; j < n; ++j) {
        a[j] = coef(rng);
        lhs += a[j] * x0[j];
      }
      if (i < n_eq) push(a, Relation::Eq, lhs);
      else push(a, Relation::LessEq, lhs + 0.2 * unit(rng));
    }
    for (int j = 0; j < n; ++j) {
      std::vector<double> a(n, 0.0);
      a[j] = 1.0;
      push(a, Relation::LessEq, 2.0);
    }

    p.sense = Sense::Maximize;
    auto mine = lp::solve(p);
    auto ref = testsupport::TextbookSimplex().maximize(c, orows);
    REQUIRE(ref.status == testsupport::OracleStatus::Optimal);
    REQUIRE(mine.optimal());
    CHECK(mine.objective == doctest::Approx(ref.objective).epsilon(1e-7));
  }
}

TEST_CASE("scaling the objective scales the optimum") {
  LPProblem p;
  p.add_vars(3, 0.0, 1.0);
  p.objective = {0.3, -0.2, 0.9};
  p.add_row({{0, 1.0}, {1, 1.0}, {2, 1.0}}, Relation::LessEq, 1.5);
  auto base = lp::solve(p);
  REQUIRE(base.optimal());
  for (double& v : p.objective) v *= 4.0;
  auto scaled = lp::solve(p);
  REQUIRE(scaled.optimal());
  CHECK(scaled.objective == doctest::Approx(4.0 * base.objective));
}

TEST_CASE("dump emits a readable deterministic LP text") {
  LPProblem p;
  p.add_vars(2, 0.0, 1.0, "pi");
  p.objective = {1.0, 0.5};
  p.add_row({{0, 1.0}, {1, 1.0}}, Relation::Eq, 1.0);
  std::string text = p.dump();
  CHECK(text.find("pi0") != std::string::npos);
  CHECK(text.find("= 1") != std::string::npos);
  CHECK(p.dump() == text);
}

TEST_CASE("rows referencing unknown columns are rejected") {
  LPProblem p;
  p.add_vars(1);
  p.objective = {1.0};
  p.add_row({{3, 1.0}}, Relation::Eq, 1.0);
  CHECK_THROWS(lp::solve(p));
}
