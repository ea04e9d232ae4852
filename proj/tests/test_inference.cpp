#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "policybounds/calibrate.hpp"
#include "policybounds/inference.hpp"
#include "support/instance_gen.hpp"

using namespace policybounds;
namespace inf = policybounds::inference;

namespace {

Eigen::MatrixXd identity_block(int n) {
  return Eigen::MatrixXd::Identity(n, n);
}

testsupport::GeneratedInstance make_instance(unsigned seed, std::size_t K = 2) {
  std::mt19937 rng(seed);
  testsupport::GenOptions opt;
  opt.K = K;
  opt.truth_filters.policy_monotonicity = true;
  return testsupport::random_instance(rng, opt);
}

}  // namespace

TEST_CASE("sup-t critical value recovers normal quantiles") {
  double cv1 = inf::supt_critical_value({identity_block(1)}, 0.95, 20000, 7);
  CHECK(std::abs(cv1 - 1.96) < 0.03);

  // two independent moments: Sidak-adjusted two-sided quantile
  double cv2 = inf::supt_critical_value({identity_block(2)}, 0.95, 20000, 7);
  double sidak =
      calibrate::norm_quantile(1.0 - 0.5 * (1.0 - std::sqrt(0.95)));
  CHECK(std::abs(cv2 - sidak) < 0.03);

  double one_sided =
      inf::supt_critical_value({identity_block(1)}, 0.95, 20000, 7, true);
  CHECK(std::abs(one_sided - 1.645) < 0.03);
}

TEST_CASE("perfect correlation collapses to the single-moment quantile") {
  Eigen::MatrixXd corr = Eigen::MatrixXd::Ones(3, 3);
  double cv = inf::supt_critical_value({corr}, 0.95, 20000, 11);
  double single = inf::supt_critical_value({identity_block(1)}, 0.95, 20000, 11);
  CHECK(std::abs(cv - single) < 0.03);
}

TEST_CASE("sup-t cv grows with independent moments, shrinks with correlation") {
  double prev = 0.0;
  for (int m : {1, 2, 4, 8}) {
    double cv = inf::supt_critical_value({identity_block(m)}, 0.95, 20000, 13);
    CHECK(cv > prev);
    prev = cv;
  }
  double looser = prev;
  for (double rho : {0.3, 0.6, 0.9}) {
    Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(8, 8, rho);
    corr.diagonal().setOnes();
    double cv = inf::supt_critical_value({corr}, 0.95, 20000, 13);
    CHECK(cv < looser + 1e-12);
    looser = cv;
  }
}

TEST_CASE("sup-t cv is bit-identical for a fixed seed") {
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(4, 4, 0.4);
  corr.diagonal().setOnes();
  double a = inf::supt_critical_value({corr, identity_block(2)}, 0.99, 5000, 99);
  double b = inf::supt_critical_value({corr, identity_block(2)}, 0.99, 5000, 99);
  CHECK(a == b);
  double c = inf::supt_critical_value({corr, identity_block(2)}, 0.99, 5000, 98);
  CHECK(a != c);
}

TEST_CASE("non-psd correlation input throws") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS(inf::supt_critical_value({bad}, 0.95, 1000, 1));
}

TEST_CASE("zero standard errors reduce the projection CI to the plug-in set") {
  auto instance = make_instance(101);
  auto policy = PolicySpec::per_judge(instance.true_cf_rates);
  RestrictionSet rs;
  rs.add(PolicyMonotonicity{});

  auto plug = identified_set(instance.data, policy, rs);
  REQUIRE(plug.both_optimal());

  inf::BandConfig cfg;
  cfg.seed = 5;
  cfg.external_ses =
      std::vector<double>(2 * instance.data.grid.size() *
                              instance.data.num_judges(),
                          0.0);
  auto ci = inf::ci_projection(instance.data, policy, rs, cfg);
  REQUIRE_FALSE(ci.empty);
  CHECK(ci.lower == doctest::Approx(plug.lower).epsilon(1e-6));
  CHECK(ci.upper == doctest::Approx(plug.upper).epsilon(1e-6));
}

TEST_CASE("projection CI contains the plug-in set and widens with the ses") {
  for (unsigned seed : {31u, 32u, 33u}) {
    auto instance = make_instance(seed);
    auto policy = PolicySpec::per_judge(instance.true_cf_rates);
    RestrictionSet rs;
    rs.add(PolicyMonotonicity{});

    auto plug = identified_set(instance.data, policy, rs);
    REQUIRE(plug.both_optimal());

    inf::BandConfig cfg;
    cfg.seed = 17;
    auto ci = inf::ci_projection(instance.data, policy, rs, cfg);
    REQUIRE_FALSE(ci.empty);
    CHECK(ci.lower <= plug.lower + 1e-7);
    CHECK(ci.upper >= plug.upper - 1e-7);

    inf::BandConfig wide = cfg;
    std::vector<double> ses;
    {
      auto band = inf::compute_moment_band(instance.data, cfg);
      for (int i = 0; i < band.ses.size(); ++i) ses.push_back(10.0 * band.ses[i]);
    }
    wide.external_ses = ses;
    auto ci10 = inf::ci_projection(instance.data, policy, rs, wide);
    REQUIRE_FALSE(ci10.empty);
    CHECK(ci10.lower <= ci.lower + 1e-9);
    CHECK(ci10.upper >= ci.upper - 1e-9);
  }
}

TEST_CASE("projection CI is deterministic for a fixed seed") {
  auto instance = make_instance(57);
  auto policy = PolicySpec::per_judge(instance.true_cf_rates);
  RestrictionSet rs;
  rs.add(PolicyMonotonicity{});
  inf::BandConfig cfg;
  cfg.seed = 1234;
  auto a = inf::ci_projection(instance.data, policy, rs, cfg);
  auto b = inf::ci_projection(instance.data, policy, rs, cfg);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("universal intersection CI: single judge band arithmetic") {
  DataDistribution d;
  d.grid = OutcomeGrid::binary();
  JudgeCell j;
  j.id = "a";
  j.share = 1.0;
  j.n_cases = 400;
  j.pmf = {{0.3, 0.1}, {0.2, 0.4}};
  d.judges.push_back(j);

  auto ci = inf::ci_universal_intersection(d, 0.95, 20000, 3);
  REQUIRE_FALSE(ci.empty);
  // plug-in interval [0.4, 0.9] padded by cv * multinomial se on each side
  CHECK(ci.lower < 0.4);
  CHECK(ci.upper > 0.9);
  double se11 = std::sqrt(0.4 * 0.6 / 400.0);
  CHECK(0.4 - ci.lower > 1.5 * se11);
  CHECK(0.4 - ci.lower < 2.5 * se11);
}

TEST_CASE("universal intersection CI contains the plug-in intersection") {
  std::mt19937 rng(71);
  for (int rep = 0; rep < 10; ++rep) {
    testsupport::GenOptions opt;
    opt.K = 3;
    opt.known_y0_zero = true;
    auto instance = testsupport::random_instance(rng, opt);
    auto plug = intersection_bounds_universal(instance.data);
    auto ci = inf::ci_universal_intersection(instance.data, 0.95, 4000, 9);
    if (plug.both_optimal()) {
      REQUIRE_FALSE(ci.empty);
      CHECK(ci.lower <= plug.lower + 1e-9);
      CHECK(ci.upper >= plug.upper - 1e-9);
    }
  }
}

TEST_CASE("delta two-step CI is centered near zero for symmetric races") {
  std::mt19937 rng(83);
  testsupport::GenOptions opt;
  opt.K = 2;
  opt.known_y0_zero = true;
  auto instance = testsupport::random_instance(rng, opt);

  inf::DeltaCIConfig cfg;
  cfg.seed = 21;
  cfg.grid_n = 40;
  auto ci = inf::ci_delta_two_step(instance.data, instance.data, 0.5, cfg);
  REQUIRE_FALSE(ci.empty);
  CHECK(ci.lower < 0.0);
  CHECK(ci.upper > 0.0);
  CHECK(std::abs(ci.lower + ci.upper) < 0.05);
}

TEST_CASE("delta two-step endpoints are stable under grid refinement") {
  std::mt19937 rng(89);
  testsupport::GenOptions opt;
  opt.K = 2;
  opt.known_y0_zero = true;
  auto black = testsupport::random_instance(rng, opt);
  auto white = testsupport::random_instance(rng, opt);

  inf::DeltaCIConfig coarse;
  coarse.seed = 33;
  coarse.grid_n = 100;
  auto a = inf::ci_delta_two_step(black.data, white.data, 0.6, coarse);
  inf::DeltaCIConfig fine = coarse;
  fine.grid_n = 200;
  auto b = inf::ci_delta_two_step(black.data, white.data, 0.6, fine);
  REQUIRE_FALSE(a.empty);
  REQUIRE_FALSE(b.empty);
  CHECK(std::abs(a.lower - b.lower) < 1e-3);
  CHECK(std::abs(a.upper - b.upper) < 1e-3);
}

TEST_CASE("near-degenerate first step collapses to one delta interval") {
  // a judge releasing everyone point-identifies E[Y(1)]; a huge caseload
  // shrinks the sampling band, so the first-step rectangle is near a point
  DataDistribution d;
  d.grid = OutcomeGrid::binary();
  JudgeCell j;
  j.id = "a";
  j.share = 1.0;
  j.n_cases = 200000000L;
  j.pmf = {{0.0, 0.7}, {0.0, 0.3}};
  d.judges.push_back(j);

  inf::DeltaCIConfig cfg;
  cfg.seed = 41;
  cfg.grid_n = 1;
  auto one = inf::ci_delta_two_step(d, d, 0.5, cfg);
  inf::DeltaCIConfig many = cfg;
  many.grid_n = 50;
  auto grid = inf::ci_delta_two_step(d, d, 0.5, many);
  REQUIRE_FALSE(one.empty);
  CHECK(std::abs(one.lower - grid.lower) < 1e-3);
  CHECK(std::abs(one.upper - grid.upper) < 1e-3);
}
