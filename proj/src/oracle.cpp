#include "policybounds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "policybounds/lp.hpp"

namespace policybounds::oracle {

namespace {

constexpr double kMassTol = 1e-12;

// does the released set {z : released[z] = 1} form a prefix of the order?
bool is_threshold_pattern(const std::vector<int>& released,
                          const std::vector<std::size_t>& order) {
  bool seen_zero = false;
  for (std::size_t r = 0; r < order.size(); ++r) {
    int v = released[order[r]];
    if (v == 0) seen_zero = true;
    else if (seen_zero) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> leniency_order(const std::vector<double>& rates,
                                        const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(rates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rates[a] != rates[b]) return rates[a] > rates[b];
    return ids[a] < ids[b];
  });
  return order;
}

std::vector<std::size_t> leniency_order(const DataDistribution& data) {
  std::vector<double> rates;
  std::vector<std::string> ids;
  for (const auto& j : data.judges) {
    rates.push_back(j.release_rate());
    ids.push_back(j.id);
  }
  return leniency_order(rates, ids);
}

TypeSpace enumerate_types(std::size_t K, const TypeFilters& filters,
                          const std::vector<std::size_t>& status_quo_order,
                          const std::vector<std::size_t>& counterfactual_order,
                          std::size_t cap) {
  if (K == 0) throw std::invalid_argument("enumerate_types: K must be >= 1");
  if (K > cap) {
    std::ostringstream os;
    os << "enumerate_types: K=" << K << " exceeds the enumeration cap " << cap;
    throw std::invalid_argument(os.str());
  }
  std::vector<std::size_t> sq = status_quo_order, cf = counterfactual_order;
  if (sq.empty()) {
    sq.resize(K);
    std::iota(sq.begin(), sq.end(), 0);
  }
  if (cf.empty()) cf = sq;

  TypeSpace space;
  space.K = K;
  space.filters = filters;

  std::vector<int> d0(K), d1(K);
  const std::size_t total = std::size_t{1} << (2 * K);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    bool ok = true;
    for (std::size_t z = 0; z < K; ++z) {
      d0[z] = static_cast<int>((c >> 1) & 1);
      d1[z] = static_cast<int>(c & 1);
      c >>= 2;
      if ((filters.policy_monotonicity || filters.policy_invariance) &&
          d0[z] > d1[z]) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if ((filters.iv_monotonicity || filters.policy_invariance) &&
        !is_threshold_pattern(d0, sq))
      continue;
    if (filters.policy_invariance && !is_threshold_pattern(d1, cf)) continue;

    ResponseType t;
    t.d.resize(K);
    for (std::size_t z = 0; z < K; ++z)
      t.d[z] = {static_cast<std::uint8_t>(d0[z]),
                static_cast<std::uint8_t>(d1[z])};
    space.types.push_back(std::move(t));
  }
  return space;
}

BoundsResult solve_type_lp(const DataDistribution& data,
                           const PolicySpec& policy,
                           const RestrictionSet& restrictions,
                           const TypeSpace& typespace,
                           const TypeLPOptions& options) {
  const std::size_t K = data.num_judges();
  if (typespace.K != K)
    throw std::invalid_argument("solve_type_lp: typespace K mismatch");
  const std::size_t ny = data.grid.size();
  const auto& y = data.grid;
  const auto& types = typespace.types;
  const std::size_t T = types.size();
  std::vector<double> rates = policy.resolve_rates(data);

  auto var = [&](std::size_t t, std::size_t i0, std::size_t i1) {
    return static_cast<int>((t * ny + i0) * ny + i1);
  };

  lp::LPProblem p;
  p.add_vars(static_cast<int>(T * ny * ny), 0.0, lp::kInf, "m");

  // theta objective: per type, share-weighted counterfactual outcome
  for (std::size_t t = 0; t < T; ++t) {
    double c0 = 0.0, c1 = 0.0;  // weight on y0 and y1
    for (std::size_t z = 0; z < K; ++z) {
      if (types[t].d1(z)) c1 += data.judges[z].share;
      else c0 += data.judges[z].share;
    }
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        p.objective[var(t, i0, i1)] = c0 * y[i0] + c1 * y[i1];
  }

  // match the observable data
  for (std::size_t z = 0; z < K; ++z) {
    for (std::size_t yi = 0; yi < ny; ++yi) {
      lp::Row released, detained;
      for (std::size_t t = 0; t < T; ++t) {
        if (types[t].d0(z)) {
          for (std::size_t i0 = 0; i0 < ny; ++i0)
            released.terms.push_back({var(t, i0, yi), 1.0});
        } else {
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            detained.terms.push_back({var(t, yi, i1), 1.0});
        }
      }
      released.relation = detained.relation = lp::Relation::Eq;
      released.rhs = data.judges[z].pmf[yi][1];
      detained.rhs = data.judges[z].pmf[yi][0];
      p.add_row(std::move(released));
      p.add_row(std::move(detained));
    }
  }

  // total mass
  {
    lp::Row row;
    for (int j = 0; j < p.num_vars(); ++j) row.terms.push_back({j, 1.0});
    row.relation = lp::Relation::Eq;
    row.rhs = 1.0;
    p.add_row(std::move(row));
  }

  // counterfactual rates
  if (options.average_quota) {
    lp::Row row;
    for (std::size_t t = 0; t < T; ++t) {
      double w = 0.0;
      for (std::size_t z = 0; z < K; ++z)
        if (types[t].d1(z)) w += data.judges[z].share;
      if (w == 0.0) continue;
      for (std::size_t i0 = 0; i0 < ny; ++i0)
        for (std::size_t i1 = 0; i1 < ny; ++i1)
          row.terms.push_back({var(t, i0, i1), w});
    }
    row.relation = lp::Relation::Eq;
    row.rhs = *options.average_quota;
    p.add_row(std::move(row));
  } else {
    for (std::size_t z = 0; z < K; ++z) {
      lp::Row row;
      for (std::size_t t = 0; t < T; ++t) {
        if (!types[t].d1(z)) continue;
        for (std::size_t i0 = 0; i0 < ny; ++i0)
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            row.terms.push_back({var(t, i0, i1), 1.0});
      }
      row.relation = lp::Relation::Eq;
      row.rhs = rates[z];
      p.add_row(std::move(row));
    }
  }

  if (options.strong_encouragement) {
    std::size_t zmax = data.most_lenient();
    for (std::size_t z = 0; z < K; ++z) {
      lp::Row row;
      for (std::size_t t = 0; t < T; ++t) {
        if (!(types[t].d0(zmax) == 1 && types[t].d1(z) == 0)) continue;
        for (std::size_t i0 = 0; i0 < ny; ++i0)
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            row.terms.push_back({var(t, i0, i1), 1.0});
      }
      if (row.terms.empty()) continue;
      row.relation = lp::Relation::Eq;
      row.rhs = 0.0;
      p.add_row(std::move(row));
    }
  }

  // zero-mass helper over a predicate on (type, y0, y1)
  auto zero_cells = [&](auto&& pred) {
    lp::Row row;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i0 = 0; i0 < ny; ++i0)
        for (std::size_t i1 = 0; i1 < ny; ++i1)
          if (pred(t, i0, i1)) row.terms.push_back({var(t, i0, i1), 1.0});
    if (row.terms.empty()) return;
    row.relation = lp::Relation::Eq;
    row.rhs = 0.0;
    p.add_row(std::move(row));
  };

  BoundsResult res;

  auto group_weights = [&](int group) {
    auto members = data.group_members(group);
    std::vector<std::pair<std::size_t, double>> out;
    double tot = 0.0;
    for (auto z : members) tot += data.judges[z].share;
    for (auto z : members) out.push_back({z, data.judges[z].share / tot});
    return out;
  };

  for (const auto& spec : restrictions.items) {
    if (std::holds_alternative<PolicyMonotonicity>(spec)) {
      zero_cells([&](std::size_t t, std::size_t, std::size_t) {
        for (std::size_t z = 0; z < K; ++z)
          if (types[t].d0(z) > types[t].d1(z)) return true;
        return false;
      });
    } else if (const auto* k0 = std::get_if<KnownY0>(&spec)) {
      auto pin = data.grid.index_of(k0->value);
      if (!pin) throw std::invalid_argument("KnownY0: value not on the grid");
      zero_cells([&](std::size_t, std::size_t i0, std::size_t) {
        return i0 != *pin;
      });
    } else if (const auto* k1 = std::get_if<KnownY1>(&spec)) {
      auto pin = data.grid.index_of(k1->value);
      if (!pin) throw std::invalid_argument("KnownY1: value not on the grid");
      zero_cells([&](std::size_t, std::size_t, std::size_t i1) {
        return i1 != *pin;
      });
    } else if (std::holds_alternative<MonotoneTreatmentResponse>(spec)) {
      zero_cells([&](std::size_t, std::size_t i0, std::size_t i1) {
        return y[i1] < y[i0];
      });
    } else if (const auto* pc = std::get_if<PCBound>(&spec)) {
      std::vector<std::size_t> judges = pc->judges;
      if (judges.empty()) judges = data.group_members(0);
      for (auto z : judges) {
        double a0 = data.judges[z].release_rate();
        double a1 = rates[z];
        double m = a1 - a0;
        if (m <= kMassTol) {
          res.warnings.push_back("PCBound: no compliers for judge " +
                                 data.judges[z].id + "; skipped");
          continue;
        }
        if (a0 > kMassTol) {
          lp::Row row;  // m E[Y1 1{d0=1}] - a0 E[Y1 1{complier}] <= 0
          for (std::size_t t = 0; t < T; ++t) {
            double coef = 0.0;
            if (types[t].d0(z)) coef += m;
            if (types[t].d0(z) == 0 && types[t].d1(z) == 1) coef -= a0;
            if (coef == 0.0) continue;
            for (std::size_t i0 = 0; i0 < ny; ++i0)
              for (std::size_t i1 = 0; i1 < ny; ++i1)
                if (y[i1] != 0.0)
                  row.terms.push_back({var(t, i0, i1), coef * y[i1]});
          }
          row.relation = lp::Relation::LessEq;
          row.rhs = 0.0;
          p.add_row(std::move(row));
        }
        if (a1 < 1.0 - kMassTol) {
          lp::Row row;  // (1-a1) E[Y1 1{complier}] - m E[Y1 1{d1=0}] <= 0
          for (std::size_t t = 0; t < T; ++t) {
            double coef = 0.0;
            if (types[t].d0(z) == 0 && types[t].d1(z) == 1) coef += 1.0 - a1;
            if (types[t].d1(z) == 0) coef -= m;
            if (coef == 0.0) continue;
            for (std::size_t i0 = 0; i0 < ny; ++i0)
              for (std::size_t i1 = 0; i1 < ny; ++i1)
                if (y[i1] != 0.0)
                  row.terms.push_back({var(t, i0, i1), coef * y[i1]});
          }
          row.relation = lp::Relation::LessEq;
          row.rhs = 0.0;
          p.add_row(std::move(row));
        }
      }
    } else if (const auto* te = std::get_if<TreatmentEffectCap>(&spec)) {
      for (std::size_t z = 0; z < K; ++z) {
        lp::Row row;
        for (std::size_t t = 0; t < T; ++t) {
          if (!(types[t].d0(z) == 0 && types[t].d1(z) == 1)) continue;
          for (std::size_t i0 = 0; i0 < ny; ++i0)
            for (std::size_t i1 = 0; i1 < ny; ++i1) {
              double coef = y[i1] - y[i0] - te->cap;
              if (coef != 0.0) row.terms.push_back({var(t, i0, i1), coef});
            }
        }
        if (row.terms.empty()) continue;
        row.relation = lp::Relation::LessEq;
        row.rhs = 0.0;
        p.add_row(std::move(row));
      }
    } else if (const auto* od = std::get_if<OutcomeDisparity>(&spec)) {
      auto wq = group_weights(0);
      auto wc = group_weights(1);
      if (wq.empty() || wc.empty())
        throw std::invalid_argument("OutcomeDisparity: empty judge group");
      for (double sign : {1.0, -1.0}) {
        lp::Row row;
        for (std::size_t t = 0; t < T; ++t) {
          double c0 = 0.0, c1 = 0.0;
          for (const auto& [z, w] : wq) {
            if (types[t].d1(z)) c1 += sign * w;
            else c0 += sign * w;
          }
          for (const auto& [z, w] : wc) {
            if (types[t].d1(z)) c1 -= sign * w;
            else c0 -= sign * w;
          }
          for (std::size_t i0 = 0; i0 < ny; ++i0)
            for (std::size_t i1 = 0; i1 < ny; ++i1) {
              double coef = c0 * y[i0] + c1 * y[i1];
              if (coef != 0.0) row.terms.push_back({var(t, i0, i1), coef});
            }
        }
        row.relation = lp::Relation::LessEq;
        row.rhs = od->od_bar;
        p.add_row(std::move(row));
      }
    } else if (const auto* pw = std::get_if<PairwiseDisagreement>(&spec)) {
      // joint form: P*(D(z,a)=0, D(z',a')=1) <= delta P*(D(z',a')=1)
      lp::Row row;
      for (std::size_t t = 0; t < T; ++t) {
        int da = pw->a ? types[t].d1(pw->z) : types[t].d0(pw->z);
        int dap = pw->a_prime ? types[t].d1(pw->z_prime)
                              : types[t].d0(pw->z_prime);
        double coef = 0.0;
        if (da == 0 && dap == 1) coef += 1.0;
        if (dap == 1) coef -= pw->delta;
        if (coef == 0.0) continue;
        for (std::size_t i0 = 0; i0 < ny; ++i0)
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            row.terms.push_back({var(t, i0, i1), coef});
      }
      row.relation = lp::Relation::LessEq;
      row.rhs = 0.0;
      p.add_row(std::move(row));
    } else if (const auto* av = std::get_if<AverageDisagreement>(&spec)) {
      auto members_q = data.group_members(0);
      auto members_c = data.group_members(1);
      if (members_q.empty() || members_c.empty())
        throw std::invalid_argument("AverageDisagreement: empty judge group");
      auto weights = [&](const std::vector<std::size_t>& zs) {
        std::vector<std::pair<std::size_t, double>> out;
        double tot = 0.0;
        for (auto z : zs)
          tot += av->caseload_weighted ? data.judges[z].share : 1.0;
        for (auto z : zs)
          out.push_back(
              {z, (av->caseload_weighted ? data.judges[z].share : 1.0) / tot});
        return out;
      };
      auto wq = weights(members_q);
      auto wc = weights(members_c);
      lp::Row row;
      for (std::size_t t = 0; t < T; ++t) {
        double coef = 0.0;
        for (const auto& [z, w] : wq)
          for (const auto& [zp, wp] : wc)
            if (types[t].d1(z) == 0 && types[t].d1(zp) == 1) coef += w * wp;
        for (const auto& [zp, wp] : wc)
          if (types[t].d1(zp) == 1) coef -= av->dp_bar * wp;
        if (coef == 0.0) continue;
        for (std::size_t i0 = 0; i0 < ny; ++i0)
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            row.terms.push_back({var(t, i0, i1), coef});
      }
      row.relation = lp::Relation::LessEq;
      row.rhs = 0.0;
      p.add_row(std::move(row));
    }
  }

  auto [lo, hi] = lp::solve_pair(p);
  res.lower_status = lo.status;
  res.upper_status = hi.status;
  if (lo.optimal()) res.lower = lo.objective;
  if (hi.optimal()) res.upper = hi.objective;
  return res;
}

CdfBounds closed_form_cdf_bounds(const DataDistribution& data, double alpha) {
  const auto& y = data.grid;
  const std::size_t ny = y.size();
  const std::size_t zmax = data.most_lenient();
  const double amax = data.judges[zmax].release_rate();
  const double a0 = data.aggregate_release_rate();

  CdfBounds out;
  out.grid = y.values();
  out.lb.assign(ny, 0.0);
  out.ub.assign(ny, 1.0);

  // observed mean outcome among released, E[Y 1{D=1}]
  double eyd = 0.0;
  for (const auto& j : data.judges)
    for (std::size_t yi = 0; yi < ny; ++yi) eyd += j.share * y[yi] * j.pmf[yi][1];

  if (alpha <= a0 + kMassTol) {
    // no compliers: theta is point identified at E[Y] = E[Y 1{D=1}]
    out.point_identified = true;
    out.theta_lb = out.theta_ub = eyd;
    return out;
  }

  auto clip01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };

  // cdf of Y given D=1 at z_max and pooled, evaluated on the grid
  double czmax = 0.0, cpool = 0.0;
  for (std::size_t yi = 0; yi < ny; ++yi) {
    czmax += data.judges[zmax].pmf[yi][1];
    double inc = 0.0;
    for (const auto& j : data.judges) inc += j.share * j.pmf[yi][1];
    cpool += inc;

    double p_zmax = amax > 0 ? czmax / amax : 1.0;
    double p_pool = a0 > 0 ? cpool / a0 : 1.0;

    double f_lb_y1 = p_zmax * amax;
    double f_ub_y1 = p_zmax * amax + 1.0 - amax;

    double f_lb_d0, f_ub_d0;
    if (a0 < 1.0 - kMassTol) {
      f_lb_d0 = clip01((f_lb_y1 - a0 * p_pool) / (1.0 - a0));
      f_ub_d0 = clip01((f_ub_y1 - a0 * p_pool) / (1.0 - a0));
    } else {
      f_lb_d0 = 0.0;
      f_ub_d0 = 1.0;
    }

    double r = (1.0 - a0) / (alpha - a0);
    out.lb[yi] = clip01(r * f_lb_d0 - (1.0 - alpha) / (alpha - a0));
    out.ub[yi] = clip01(r * f_ub_d0);
  }
  // cdfs must reach 1 at the top of the support
  out.lb[ny - 1] = out.ub[ny - 1] = 1.0;

  auto mean_from_cdf = [&](const std::vector<double>& F) {
    double e = y.max();
    for (std::size_t i = 0; i + 1 < ny; ++i) e -= (y[i + 1] - y[i]) * F[i];
    return e;
  };
  out.complier_mean_lb = mean_from_cdf(out.ub);
  out.complier_mean_ub = mean_from_cdf(out.lb);
  out.theta_lb = eyd + (alpha - a0) * out.complier_mean_lb;
  out.theta_ub = eyd + (alpha - a0) * out.complier_mean_ub;
  return out;
}

}  // namespace policybounds::oracle
