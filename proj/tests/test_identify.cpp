#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "policybounds/identify.hpp"
#include "policybounds/oracle.hpp"
#include "support/instance_gen.hpp"

using namespace policybounds;
namespace po = policybounds::oracle;

namespace {

DataDistribution two_judges(double p11a, double p01a, double p11b, double p01b) {
  // binary Y; p11 = P(Y=1,D=1), p01 = P(Y=0,D=1); remainder on (Y=0,D=0)
  DataDistribution d;
  d.grid = OutcomeGrid::binary();
  auto mk = [](std::string id, double p11, double p01) {
    JudgeCell j;
    j.id = std::move(id);
    j.share = 0.5;
    j.n_cases = 1000;
    j.pmf = {{1.0 - p11 - p01, p01}, {0.0, p11}};
    return j;
  };
  d.judges.push_back(mk("a", p11a, p01a));
  d.judges.push_back(mk("b", p11b, p01b));
  return d;
}

}  // namespace

TEST_CASE("LP dimensions for K=1, binary Y, no restrictions") {
  testsupport::GenOptions opt;
  opt.K = 1;
  std::mt19937 rng(1);
  auto inst = testsupport::random_instance(rng, opt);
  auto ctx = make_identify_problem(inst.data, PolicySpec::universal(), {});
  BoundsDiagnostics diag;
  auto p = build_identify_lp(ctx, lp::Sense::Maximize, &diag);

  CHECK(p.num_vars() == 16);
  CHECK(diag.data_rows == 4);
  CHECK(diag.margin_rows == 0);
  CHECK(diag.mass_rows == 1);
  CHECK(diag.quota_rows == 1);
  CHECK(diag.restriction_rows == 0);
}

TEST_CASE("condition-2 block adds |Y|^2 rows per extra judge") {
  testsupport::GenOptions opt;
  opt.K = 2;
  std::mt19937 rng(2);
  auto inst = testsupport::random_instance(rng, opt);
  auto ctx = make_identify_problem(inst.data, PolicySpec::universal(), {});
  BoundsDiagnostics diag;
  build_identify_lp(ctx, lp::Sense::Maximize, &diag);
  CHECK(diag.margin_rows == 4);
}

TEST_CASE("constraint count matches the formula with per-judge mass rows") {
  // published count 2|Y|K + |Y|^2(K-1) + 4|Y|^2K + 1 counts nonnegativity as
  // constraints and a single normalization; we carry 4|Y|^2K variable bounds
  // and K mass rows instead
  const std::size_t K = 3, ny = 2;
  testsupport::GenOptions opt;
  opt.K = K;
  opt.ny = ny;
  std::mt19937 rng(3);
  auto inst = testsupport::random_instance(rng, opt);
  auto ctx = make_identify_problem(inst.data, PolicySpec::universal(), {});
  BoundsDiagnostics diag;
  auto p = build_identify_lp(ctx, lp::Sense::Maximize, &diag);

  int formula = 2 * ny * K + ny * ny * (K - 1) + 4 * ny * ny * K + 1;
  CHECK(formula == 69);
  int ours = diag.data_rows + diag.margin_rows + diag.pi_columns +
             diag.mass_rows;
  CHECK(ours == formula - 1 + static_cast<int>(K));
  CHECK(p.num_vars() == diag.pi_columns);
}

TEST_CASE("status quo policy with policy monotonicity pins theta at E[Y]") {
  std::mt19937 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 2;
    opt.truth_filters.policy_monotonicity = true;
    auto inst = testsupport::random_instance(rng, opt);
    RestrictionSet rs;
    rs.add(PolicyMonotonicity{});
    auto res = identified_set(inst.data, PolicySpec::status_quo(), rs);
    REQUIRE(res.both_optimal());
    double ey = inst.data.aggregate_mean_outcome();
    CHECK(res.lower == doctest::Approx(ey).epsilon(1e-7));
    CHECK(res.upper == doctest::Approx(ey).epsilon(1e-7));
  }
}

TEST_CASE("intersection fast path examples") {
  // judge A interval [0.2, 0.7], judge B interval [0.25, 0.5]
  auto d = two_judges(0.2, 0.3, 0.25, 0.5);
  auto res = intersection_bounds_universal(d);
  REQUIRE(res.both_optimal());
  CHECK(res.lower == doctest::Approx(0.25));
  CHECK(res.upper == doctest::Approx(0.5));

  // one judge releasing everyone with misconduct rate m: point {m}
  DataDistribution all;
  all.grid = OutcomeGrid::binary();
  JudgeCell j;
  j.id = "a";
  j.share = 1.0;
  j.n_cases = 10;
  j.pmf = {{0.0, 0.7}, {0.0, 0.3}};
  all.judges.push_back(j);
  auto pt = intersection_bounds_universal(all);
  REQUIRE(pt.both_optimal());
  CHECK(pt.lower == doctest::Approx(0.3));
  CHECK(pt.upper == doctest::Approx(0.3));

  // disjoint judge intervals reject the model
  auto bad = intersection_bounds_universal(two_judges(0.6, 0.1, 0.1, 0.7));
  CHECK(bad.empty());
}

TEST_CASE("universal release with known Y(0)=0 equals the intersection") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 2 + rep % 3;
    opt.known_y0_zero = true;
    auto inst = testsupport::random_instance(rng, opt);
    RestrictionSet rs;
    rs.add(KnownY0{0.0});
    auto via_lp = identified_set(inst.data, PolicySpec::universal(), rs);
    auto fast = intersection_bounds_universal(inst.data);
    REQUIRE(via_lp.both_optimal());
    REQUIRE(fast.both_optimal());
    CHECK(via_lp.lower == doctest::Approx(fast.lower).epsilon(1e-7));
    CHECK(via_lp.upper == doctest::Approx(fast.upper).epsilon(1e-7));
  }
}

TEST_CASE("quota policy bounds match the type enumeration oracle") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 15; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 3;
    opt.ny = 2;
    opt.truth_filters.policy_monotonicity = true;
    auto inst = testsupport::random_instance(rng, opt);

    double q = unit(rng);
    auto policy = PolicySpec::with_quota(q);
    RestrictionSet rs;
    rs.add(PolicyMonotonicity{});

    auto mine = identified_set(inst.data, policy, rs);
    po::TypeFilters pm;
    pm.policy_monotonicity = true;
    auto ref = po::solve_type_lp(inst.data, policy, rs,
                                 po::enumerate_types(3, pm));
    REQUIRE(mine.lower_status == ref.lower_status);
    if (mine.both_optimal()) {
      CHECK(mine.lower == doctest::Approx(ref.lower).epsilon(1e-6));
      CHECK(mine.upper == doctest::Approx(ref.upper).epsilon(1e-6));
    }
  }
}

TEST_CASE("nested restriction sets weakly shrink the bounds") {
  std::mt19937 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 2;
    opt.truth_filters.policy_monotonicity = true;
    auto inst = testsupport::random_instance(rng, opt);
    auto policy = PolicySpec::per_judge(inst.true_cf_rates);

    RestrictionSet base;
    auto loose = identified_set(inst.data, policy, base);

    RestrictionSet more = base;
    more.add(PolicyMonotonicity{});
    auto tight = identified_set(inst.data, policy, more);

    REQUIRE(loose.both_optimal());
    REQUIRE(tight.both_optimal());
    CHECK(tight.lower >= loose.lower - 1e-8);
    CHECK(tight.upper <= loose.upper + 1e-8);
  }
}

TEST_CASE("adding a tiny-share unconstrained judge barely moves the bounds") {
  std::mt19937 rng(17);
  testsupport::GenOptions opt;
  opt.K = 2;
  auto inst = testsupport::random_instance(rng, opt);
  auto base = identified_set(inst.data, PolicySpec::universal(), {});
  REQUIRE(base.both_optimal());

  const double eps = 1e-6;
  DataDistribution bigger = inst.data;
  for (auto& j : bigger.judges) j.share *= 1.0 - eps;
  // a clone of an existing judge adds no information, only its eps share
  JudgeCell extra = inst.data.judges[0];
  extra.id = "tiny";
  extra.share = eps;
  extra.n_cases = 1;
  bigger.judges.push_back(extra);

  auto shifted = identified_set(bigger, PolicySpec::universal(), {});
  REQUIRE(shifted.both_optimal());
  CHECK(std::abs(shifted.lower - base.lower) <= 1e-4);
  CHECK(std::abs(shifted.upper - base.upper) <= 1e-4);
}

TEST_CASE("sharpness against the full type LP at K<=4, |Y|<=3") {
  std::mt19937 rng(19);
  for (int rep = 0; rep < 12; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 2 + rep % 3;
    opt.ny = 2 + rep % 2;
    auto inst = testsupport::random_instance(rng, opt);
    auto policy = PolicySpec::per_judge(inst.true_cf_rates);

    auto mine = identified_set(inst.data, policy, {});
    auto ref = po::solve_type_lp(inst.data, policy, {},
                                 po::enumerate_types(opt.K, {}));
    REQUIRE(mine.both_optimal());
    REQUIRE(ref.both_optimal());
    CHECK(mine.lower == doctest::Approx(ref.lower).epsilon(1e-6));
    CHECK(mine.upper == doctest::Approx(ref.upper).epsilon(1e-6));
  }
}

TEST_CASE("infeasible rates reject the model instead of erroring") {
  auto d = two_judges(0.2, 0.3, 0.25, 0.5);
  RestrictionSet rs;
  rs.add(PolicyMonotonicity{});
  // ask the lenient judge to release fewer than under the status quo
  auto res = identified_set(d, PolicySpec::per_judge({0.1, 0.1}), rs);
  CHECK(res.empty());
}
