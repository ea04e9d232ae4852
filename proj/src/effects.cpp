#include "policybounds/effects.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace policybounds {

namespace {

constexpr double kMassTol = 1e-12;

lp::LPProblem with_objective(const lp::LPProblem& base,
                             const AffineFunctional& f, lp::Sense sense) {
  lp::LPProblem p = base;
  p.sense = sense;
  std::fill(p.objective.begin(), p.objective.end(), 0.0);
  for (const auto& [j, v] : f.terms) p.objective[j] += v;
  p.objective_offset = f.offset;
  return p;
}

double mean_outcome_given_z(const JudgeCell& j, const OutcomeGrid& grid) {
  double m = 0.0;
  for (std::size_t yi = 0; yi < grid.size(); ++yi)
    m += grid[yi] * (j.pmf[yi][0] + j.pmf[yi][1]);
  return m;
}

}  // namespace

FractionalResult fractional_bounds(const lp::LPProblem& base,
                                   const AffineFunctional& numerator,
                                   const AffineFunctional& denominator,
                                   double denom_tol) {
  FractionalResult res;

  // certify the denominator's range over the feasible set first
  auto [dmin, dmax] = lp::solve_pair(with_objective(base, denominator,
                                                    lp::Sense::Maximize));
  if (!dmin.optimal() || !dmax.optimal()) {
    res.lower_status = dmin.status;
    res.upper_status = dmax.status;
    return res;
  }
  res.denominator_min = dmin.objective;
  res.denominator_max = dmax.objective;

  if (dmin.objective <= denom_tol) {
    // the ratio diverges where the denominator vanishes; the divergent side
    // is the sign the numerator can take on the low-denominator region
    lp::LPProblem region = with_objective(base, numerator, lp::Sense::Maximize);
    lp::Row cap;
    cap.terms = denominator.terms;
    cap.relation = lp::Relation::LessEq;
    cap.rhs = denom_tol - denominator.offset;
    region.add_row(std::move(cap));
    auto [nlo, nhi] = lp::solve_pair(region);
    res.lower_status = (nlo.optimal() && nlo.objective < -denom_tol)
                           ? lp::SolveStatus::Unbounded
                           : lp::SolveStatus::NumericalFailure;
    res.upper_status = (nhi.optimal() && nhi.objective > denom_tol)
                           ? lp::SolveStatus::Unbounded
                           : lp::SolveStatus::NumericalFailure;
    res.warnings.push_back(
        "fractional_bounds: denominator can reach zero over the feasible set");
    return res;
  }

  // Charnes-Cooper: u = t*x, t = 1/denominator(x). Row a'x rel b becomes
  // a'u - b*t rel 0; variable bounds become rows against t; the denominator
  // normalizes to 1. Objective values are the ratio itself.
  const int n = base.num_vars();
  const double T = 1.0 / dmin.objective;

  lp::LPProblem cc;
  cc.sense = lp::Sense::Maximize;
  cc.add_vars(n, 0.0, lp::kInf, "u");
  const int t_col = cc.add_vars(1, 0.0, T, "t");

  for (const auto& row : base.rows) {
    lp::Row r;
    r.terms = row.terms;
    if (row.rhs != 0.0) r.terms.push_back({t_col, -row.rhs});
    r.relation = row.relation;
    r.rhs = 0.0;
    cc.add_row(std::move(r));
  }
  for (int j = 0; j < n; ++j) {
    if (base.lower[j] != 0.0)
      cc.add_row({{j, 1.0}, {t_col, -base.lower[j]}}, lp::Relation::GreaterEq,
                 0.0);
    if (std::isfinite(base.upper[j]))
      cc.add_row({{j, 1.0}, {t_col, -base.upper[j]}}, lp::Relation::LessEq,
                 0.0);
  }
  lp::Row norm;
  norm.terms = denominator.terms;
  norm.terms.push_back({t_col, denominator.offset});
  norm.relation = lp::Relation::Eq;
  norm.rhs = 1.0;
  cc.add_row(std::move(norm));

  for (const auto& [j, v] : numerator.terms) cc.objective[j] += v;
  cc.objective[t_col] += numerator.offset;

  auto [lo, hi] = lp::solve_pair(cc);
  res.lower_status = lo.status;
  res.upper_status = hi.status;
  if (lo.optimal()) res.lower = lo.objective;
  if (hi.optimal()) res.upper = hi.objective;
  return res;
}

PCEffectResult pc_effect_from_theta(const BoundsResult& theta_bounds,
                                    const DataDistribution& data,
                                    const PolicySpec& policy) {
  PCEffectResult res;
  res.lower_status = theta_bounds.lower_status;
  res.upper_status = theta_bounds.upper_status;

  auto rates = policy.resolve_rates(data);
  double cf_rate = 0.0;
  for (std::size_t z = 0; z < data.num_judges(); ++z)
    cf_rate += data.judges[z].share * rates[z];
  res.complier_mass = cf_rate - data.aggregate_release_rate();

  if (std::abs(res.complier_mass) <= kMassTol) {
    res.warnings.push_back(
        "pc_effect_from_theta: zero complier mass, PC effect undefined");
    return res;
  }
  res.defined = true;
  if (!theta_bounds.both_optimal()) return res;

  const double ey = data.aggregate_mean_outcome();
  double a = (theta_bounds.lower - ey) / res.complier_mass;
  double b = (theta_bounds.upper - ey) / res.complier_mass;
  res.lower = std::min(a, b);
  res.upper = std::max(a, b);
  return res;
}

PCEffectResult pc_effect_fractional(const DataDistribution& data,
                                    const PolicySpec& policy,
                                    const RestrictionSet& restrictions) {
  IdentifyProblem ctx = make_identify_problem(data, policy, restrictions);
  PCEffectResult res;
  lp::LPProblem p =
      build_identify_lp(ctx, lp::Sense::Maximize, nullptr, &res.warnings);

  AffineFunctional num;
  num.offset = -data.aggregate_mean_outcome();
  for (int j = 0; j < ctx.idx.num_pi(); ++j)
    if (p.objective[j] != 0.0) num.terms.push_back({j, p.objective[j]});

  AffineFunctional den;
  den.offset = -data.aggregate_release_rate();
  for (std::size_t z = 0; z < ctx.idx.K; ++z)
    for (std::size_t i0 = 0; i0 < ctx.idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < ctx.idx.ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          den.terms.push_back(
              {ctx.idx(z, i0, i1, d0, 1), data.judges[z].share});

  auto frac = fractional_bounds(p, num, den);
  res.lower = frac.lower;
  res.upper = frac.upper;
  res.lower_status = frac.lower_status;
  res.upper_status = frac.upper_status;
  res.defined = std::isfinite(frac.denominator_min) &&
                frac.denominator_min > kMassTol;
  res.complier_mass = frac.denominator_min;
  for (auto& w : frac.warnings) res.warnings.push_back(std::move(w));
  if (!res.defined && !res.empty())
    res.warnings.push_back(
        "pc_effect_fractional: complier mass not bounded away from zero");
  return res;
}

RaceMoments race_moments(const DataDistribution& data, double case_share) {
  if (data.grid.size() != 2 || data.grid[0] != 0.0 || data.grid[1] != 1.0)
    throw std::invalid_argument("race_moments: requires binary Y in {0,1}");
  RaceMoments m;
  m.case_share = case_share;
  for (const auto& j : data.judges) {
    m.p_d1_y1 += j.share * j.pmf[1][1];
    m.p_d1_y0 += j.share * j.pmf[0][1];
  }
  return m;
}

DisparateImpact disparate_impact(const Interval& ey1_b, const Interval& ey1_w,
                                 const RaceMoments& black,
                                 const RaceMoments& white, int grid_n) {
  if (grid_n < 1) throw std::invalid_argument("disparate_impact: grid_n < 1");
  DisparateImpact res;

  constexpr double kEdge = 1e-9;
  auto clip_interval = [&](Interval iv, const char* label) {
    if (iv.lower < kEdge || iv.upper > 1.0 - kEdge)
      res.warnings.push_back(std::string("disparate_impact: E[Y(1)] interval "
                                         "for ") +
                             label + " touches {0,1}, clipped");
    iv.lower = std::clamp(iv.lower, kEdge, 1.0 - kEdge);
    iv.upper = std::clamp(iv.upper, kEdge, 1.0 - kEdge);
    return iv;
  };
  Interval eb = clip_interval(ey1_b, "black");
  Interval ew = clip_interval(ey1_w, "white");

  const double wsum = black.case_share + white.case_share;
  const double wb = black.case_share / wsum;
  const double ww = white.case_share / wsum;

  auto rate = [&](double joint, double denom, bool* clipped) {
    double r = joint / denom;
    if (r < 0.0 || r > 1.0) *clipped = true;
    return std::clamp(r, 0.0, 1.0);
  };

  auto grid_point = [&](const Interval& iv, int i) {
    if (grid_n == 1) return 0.5 * (iv.lower + iv.upper);
    return iv.lower + (iv.upper - iv.lower) * i / (grid_n - 1);
  };

  bool clipped = false;
  bool first = true;
  for (int i = 0; i < grid_n; ++i) {
    double e_b = grid_point(eb, i);
    double fpr_b = rate(black.p_d1_y1, e_b, &clipped);
    double tpr_b = rate(black.p_d1_y0, 1.0 - e_b, &clipped);
    for (int k = 0; k < grid_n; ++k) {
      double e_w = grid_point(ew, k);
      double fpr_w = rate(white.p_d1_y1, e_w, &clipped);
      double tpr_w = rate(white.p_d1_y0, 1.0 - e_w, &clipped);
      double ebar = wb * e_b + ww * e_w;
      double delta =
          (1.0 - ebar) * (tpr_b - tpr_w) + ebar * (fpr_b - fpr_w);
      if (first) {
        res.delta = {delta, delta};
        res.fpr_b = {fpr_b, fpr_b};
        res.fpr_w = {fpr_w, fpr_w};
        res.tpr_b = {tpr_b, tpr_b};
        res.tpr_w = {tpr_w, tpr_w};
        first = false;
      } else {
        res.delta.lower = std::min(res.delta.lower, delta);
        res.delta.upper = std::max(res.delta.upper, delta);
        res.fpr_b.lower = std::min(res.fpr_b.lower, fpr_b);
        res.fpr_b.upper = std::max(res.fpr_b.upper, fpr_b);
        res.fpr_w.lower = std::min(res.fpr_w.lower, fpr_w);
        res.fpr_w.upper = std::max(res.fpr_w.upper, fpr_w);
        res.tpr_b.lower = std::min(res.tpr_b.lower, tpr_b);
        res.tpr_b.upper = std::max(res.tpr_b.upper, tpr_b);
        res.tpr_w.lower = std::min(res.tpr_w.lower, tpr_w);
        res.tpr_w.upper = std::max(res.tpr_w.upper, tpr_w);
      }
    }
  }
  if (clipped)
    res.warnings.push_back(
        "disparate_impact: FPR or TPR left [0,1] on part of the grid, clipped");
  return res;
}

double reallocation_effect(const DataDistribution& data, int target_group) {
  auto members = data.group_members(target_group);
  if (members.empty())
    throw std::invalid_argument("reallocation_effect: empty target group");
  double wsum = 0.0, ysum = 0.0;
  for (auto z : members) {
    const auto& j = data.judges[z];
    wsum += j.share;
    ysum += j.share * mean_outcome_given_z(j, data.grid);
  }
  return ysum / wsum - data.aggregate_mean_outcome();
}

double tsls_benchmark(const DataDistribution& data, const PolicySpec& policy) {
  double rbar = data.aggregate_release_rate();
  double ybar = data.aggregate_mean_outcome();
  double var = 0.0, cov = 0.0;
  for (const auto& j : data.judges) {
    double dr = j.release_rate() - rbar;
    var += j.share * dr * dr;
    cov += j.share * dr * (mean_outcome_given_z(j, data.grid) - ybar);
  }
  if (var <= 1e-14)
    throw std::invalid_argument("tsls_benchmark: no first-stage variation");

  auto rates = policy.resolve_rates(data);
  double cf_rate = 0.0;
  for (std::size_t z = 0; z < data.num_judges(); ++z)
    cf_rate += data.judges[z].share * rates[z];
  return (cov / var) * (cf_rate - rbar);
}

}  // namespace policybounds
