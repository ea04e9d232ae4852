#include "policybounds/identify.hpp"

#include <chrono>
#include <sstream>
#include <stdexcept>

#include "policybounds/restrictions.hpp"

namespace policybounds {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string pi_name(std::size_t z, std::size_t i0, std::size_t i1, int d0,
                    int d1) {
  std::ostringstream os;
  os << "pi[" << z << "][" << i0 << "][" << i1 << "][" << d0 << "][" << d1
     << "]";
  return os.str();
}

}  // namespace

IdentifyProblem make_identify_problem(const DataDistribution& data,
                                      const PolicySpec& policy,
                                      const RestrictionSet& restrictions) {
  if (data.judges.empty())
    throw std::invalid_argument("identify: no judges in data");
  IdentifyProblem ctx;
  ctx.data = &data;
  ctx.policy = policy;
  ctx.rates = policy.resolve_rates(data);
  ctx.restrictions = restrictions;
  ctx.idx = PiIndex{data.num_judges(), data.grid.size()};
  return ctx;
}

lp::LPProblem build_identify_lp(const IdentifyProblem& ctx, lp::Sense sense,
                                BoundsDiagnostics* diag,
                                std::vector<std::string>* warnings) {
  const auto& data = ctx.dist();
  const auto& idx = ctx.idx;
  const auto& y = data.grid;
  const std::size_t K = idx.K, ny = idx.ny;

  lp::LPProblem p;
  p.sense = sense;
  p.add_vars(idx.num_pi(), 0.0, lp::kInf, "pi");
  for (std::size_t z = 0; z < K; ++z)
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1)
            p.names[idx(z, i0, i1, d0, d1)] = pi_name(z, i0, i1, d0, d1);

  // theta = sum_z P(Z=z) sum (d1 y1 + (1-d1) y0) pi_z
  for (std::size_t z = 0; z < K; ++z)
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1)
            p.objective[idx(z, i0, i1, d0, d1)] =
                data.judges[z].share * (d1 ? y[i1] : y[i0]);

  // condition 1: match the observable data. The observed (Y, D) under the
  // status quo is (y_{d0}, d0).
  for (std::size_t z = 0; z < K; ++z) {
    for (std::size_t yi = 0; yi < ny; ++yi) {
      lp::Row released;  // P(Y=y, D=1 | Z=z): observed outcome is y1
      for (std::size_t i0 = 0; i0 < ny; ++i0)
        for (int d1 = 0; d1 < 2; ++d1)
          released.terms.push_back({idx(z, i0, yi, 1, d1), 1.0});
      released.relation = lp::Relation::Eq;
      released.rhs = data.judges[z].pmf[yi][1];
      p.add_row(std::move(released));

      lp::Row detained;  // P(Y=y, D=0 | Z=z): observed outcome is y0
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d1 = 0; d1 < 2; ++d1)
          detained.terms.push_back({idx(z, yi, i1, 0, d1), 1.0});
      detained.relation = lp::Relation::Eq;
      detained.rhs = data.judges[z].pmf[yi][0];
      p.add_row(std::move(detained));
    }
  }
  if (diag) diag->data_rows = static_cast<int>(2 * ny * K);

  // condition 2: common (Y(0), Y(1)) margin, anchored to the first judge
  for (std::size_t z = 1; z < K; ++z) {
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1) {
        lp::Row row;
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1) {
            row.terms.push_back({idx(z, i0, i1, d0, d1), 1.0});
            row.terms.push_back({idx(0, i0, i1, d0, d1), -1.0});
          }
        row.relation = lp::Relation::Eq;
        row.rhs = 0.0;
        p.add_row(std::move(row));
      }
  }
  if (diag) diag->margin_rows = static_cast<int>(ny * ny * (K - 1));

  // condition 3: each pi_z is a pmf (one mass row per judge; see docs for the
  // equivalence with the single aggregate normalization)
  for (std::size_t z = 0; z < K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1)
            row.terms.push_back({idx(z, i0, i1, d0, d1), 1.0});
    row.relation = lp::Relation::Eq;
    row.rhs = 1.0;
    p.add_row(std::move(row));
  }
  if (diag) diag->mass_rows = static_cast<int>(K);

  // counterfactual rates: sum_{y0,y1,d0} pi_z(.,.,.,1) = alpha_{1,z}
  for (std::size_t z = 0; z < K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          row.terms.push_back({idx(z, i0, i1, d0, 1), 1.0});
    row.relation = lp::Relation::Eq;
    row.rhs = ctx.rates[z];
    p.add_row(std::move(row));
  }
  if (diag) {
    diag->quota_rows = static_cast<int>(K);
    diag->pi_columns = idx.num_pi();
  }

  apply_restrictions(p, ctx, diag, warnings);
  return p;
}

BoundsResult identified_set(const DataDistribution& data,
                            const PolicySpec& policy,
                            const RestrictionSet& restrictions,
                            bool keep_argopt) {
  IdentifyProblem ctx = make_identify_problem(data, policy, restrictions);
  BoundsResult res;

  double t0 = now_seconds();
  lp::LPProblem p = build_identify_lp(ctx, lp::Sense::Maximize,
                                      &res.diagnostics, &res.warnings);
  res.diagnostics.build_seconds = now_seconds() - t0;

  t0 = now_seconds();
  auto [lo, hi] = lp::solve_pair(p);
  res.diagnostics.solve_seconds = now_seconds() - t0;

  res.lower_status = lo.status;
  res.upper_status = hi.status;
  if (lo.optimal()) res.lower = lo.objective;
  if (hi.optimal()) res.upper = hi.objective;
  if (keep_argopt) {
    if (lo.optimal()) res.argmin = lo.primal;
    if (hi.optimal()) res.argmax = hi.primal;
  }
  return res;
}

BoundsResult intersection_bounds_universal(const DataDistribution& data) {
  if (data.grid.size() != 2 || data.grid[0] != 0.0 || data.grid[1] != 1.0)
    throw std::invalid_argument(
        "intersection_bounds_universal: requires binary Y in {0,1}");
  BoundsResult res;
  double lo = 0.0, hi = 1.0;
  for (const auto& j : data.judges) {
    lo = std::max(lo, j.pmf[1][1]);        // P(Y=1, D=1 | Z=z)
    hi = std::min(hi, 1.0 - j.pmf[0][1]);  // 1 - P(Y=0, D=1 | Z=z)
  }
  if (lo <= hi + 1e-12) {
    res.lower = lo;
    res.upper = hi;
    res.lower_status = res.upper_status = lp::SolveStatus::Optimal;
  } else {
    res.lower_status = res.upper_status = lp::SolveStatus::Infeasible;
  }
  return res;
}

}  // namespace policybounds
