#include "policybounds/restrictions.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace policybounds {

namespace {

constexpr double kMassTol = 1e-12;

std::size_t grid_index_or_throw(const OutcomeGrid& grid, double v,
                                const char* what) {
  auto idx = grid.index_of(v);
  if (!idx) {
    std::ostringstream os;
    os << what << ": value " << v << " is not an outcome grid point";
    throw std::invalid_argument(os.str());
  }
  return *idx;
}

void check_judge(const IdentifyProblem& ctx, std::size_t z, const char* what) {
  if (z >= ctx.dist().num_judges()) {
    std::ostringstream os;
    os << what << ": unknown judge index " << z;
    throw std::invalid_argument(os.str());
  }
}

// terms of pi(y0=i0, y1=i1, D(z,a)=1), i.e. the sum over the other policy arm
void append_released_cell(std::vector<std::pair<int, double>>& terms,
                          const PiIndex& idx, std::size_t z, std::size_t i0,
                          std::size_t i1, int a, double coef) {
  for (int other = 0; other < 2; ++other) {
    int d0 = a == 0 ? 1 : other;
    int d1 = a == 1 ? 1 : other;
    terms.push_back({idx(z, i0, i1, d0, d1), coef});
  }
}

// normalized share weights over a judge group
std::vector<std::pair<std::size_t, double>> group_weights(
    const DataDistribution& data, int group, bool weighted) {
  auto members = data.group_members(group);
  std::vector<std::pair<std::size_t, double>> out;
  if (members.empty()) return out;
  double total = 0.0;
  for (auto z : members) total += weighted ? data.judges[z].share : 1.0;
  for (auto z : members)
    out.push_back({z, (weighted ? data.judges[z].share : 1.0) / total});
  return out;
}

ConstraintBlock compile_policy_monotonicity(const IdentifyProblem& ctx) {
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  for (std::size_t z = 0; z < idx.K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < idx.ny; ++i1)
        row.terms.push_back({idx(z, i0, i1, 1, 0), 1.0});
    row.relation = lp::Relation::Eq;
    row.rhs = 0.0;
    b.rows.push_back(std::move(row));
  }
  return b;
}

ConstraintBlock compile_known_value(const IdentifyProblem& ctx, double value,
                                    bool arm1) {
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  std::size_t pin = grid_index_or_throw(ctx.dist().grid, value,
                                        arm1 ? "KnownY1" : "KnownY0");
  for (std::size_t z = 0; z < idx.K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
        if ((arm1 ? i1 : i0) == pin) continue;
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1)
            row.terms.push_back({idx(z, i0, i1, d0, d1), 1.0});
      }
    row.relation = lp::Relation::Eq;
    row.rhs = 0.0;
    b.rows.push_back(std::move(row));
  }
  return b;
}

ConstraintBlock compile_mtr(const IdentifyProblem& ctx) {
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  const auto& y = ctx.dist().grid;
  for (std::size_t z = 0; z < idx.K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
        if (y[i1] >= y[i0]) continue;
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1)
            row.terms.push_back({idx(z, i0, i1, d0, d1), 1.0});
      }
    if (row.terms.empty()) continue;
    row.relation = lp::Relation::Eq;
    row.rhs = 0.0;
    b.rows.push_back(std::move(row));
  }
  return b;
}

ConstraintBlock compile_pc_bound(const IdentifyProblem& ctx,
                                 const PCBound& spec) {
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  const auto& data = ctx.dist();
  const auto& y = data.grid;

  std::vector<std::size_t> judges = spec.judges;
  if (judges.empty()) judges = data.group_members(0);
  for (auto z : judges) {
    check_judge(ctx, z, "PCBound");
    double a0 = data.judges[z].release_rate();
    double a1 = ctx.rates[z];
    double m = a1 - a0;
    if (m <= kMassTol) {
      std::ostringstream os;
      os << "PCBound: judge " << data.judges[z].id
         << " has no policy compliers (alpha1 <= alpha0); constraint skipped";
      b.warnings.push_back(os.str());
      continue;
    }
    // E[Y(1) | D(z,0)=1] <= E[Y(1) | complier], multiplied through by the
    // (known) masses alpha0 and m
    if (a0 > kMassTol) {
      lp::Row row;
      for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
        for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
          append_released_cell(row.terms, idx, z, i0, i1, 0, m * y[i1]);
          row.terms.push_back({idx(z, i0, i1, 0, 1), -a0 * y[i1]});
        }
      row.relation = lp::Relation::LessEq;
      row.rhs = 0.0;
      b.rows.push_back(std::move(row));
    }
    // E[Y(1) | complier] <= E[Y(1) | D(z,1)=0]
    if (a1 < 1.0 - kMassTol) {
      lp::Row row;
      for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
        for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
          row.terms.push_back({idx(z, i0, i1, 0, 1), (1.0 - a1) * y[i1]});
          for (int d0 = 0; d0 < 2; ++d0)
            row.terms.push_back({idx(z, i0, i1, d0, 0), -m * y[i1]});
        }
      row.relation = lp::Relation::LessEq;
      row.rhs = 0.0;
      b.rows.push_back(std::move(row));
    }
  }
  return b;
}

ConstraintBlock compile_te_cap(const IdentifyProblem& ctx,
                               const TreatmentEffectCap& spec) {
  // E[(Y(1)-Y(0)-c) 1{complier}] <= 0 per judge; exact without assuming the
  // complier mass equals alpha1-alpha0
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  const auto& y = ctx.dist().grid;
  for (std::size_t z = 0; z < idx.K; ++z) {
    lp::Row row;
    for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
        double coef = y[i1] - y[i0] - spec.cap;
        if (coef != 0.0) row.terms.push_back({idx(z, i0, i1, 0, 1), coef});
      }
    if (row.terms.empty()) continue;
    row.relation = lp::Relation::LessEq;
    row.rhs = 0.0;
    b.rows.push_back(std::move(row));
  }
  return b;
}

ConstraintBlock compile_outcome_disparity(const IdentifyProblem& ctx,
                                          const OutcomeDisparity& spec) {
  ConstraintBlock b;
  const auto& idx = ctx.idx;
  const auto& data = ctx.dist();
  const auto& y = data.grid;
  auto wq = group_weights(data, 0, true);
  auto wc = group_weights(data, 1, true);
  if (wq.empty() || wc.empty())
    throw std::invalid_argument(
        "OutcomeDisparity: both judge groups must be nonempty");

  // counterfactual mean within a group: sum_z w_z sum (d1 y1 + (1-d1) y0) pi_z
  auto accumulate = [&](std::vector<std::pair<int, double>>& terms,
                        const std::vector<std::pair<std::size_t, double>>& ws,
                        double sign) {
    for (const auto& [z, w] : ws)
      for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
        for (std::size_t i1 = 0; i1 < idx.ny; ++i1)
          for (int d0 = 0; d0 < 2; ++d0)
            for (int d1 = 0; d1 < 2; ++d1) {
              double coef = sign * w * (d1 ? y[i1] : y[i0]);
              if (coef != 0.0)
                terms.push_back({idx(z, i0, i1, d0, d1), coef});
            }
  };
  for (double sign : {1.0, -1.0}) {
    lp::Row row;
    accumulate(row.terms, wq, sign);
    accumulate(row.terms, wc, -sign);
    row.relation = lp::Relation::LessEq;
    row.rhs = spec.od_bar;
    b.rows.push_back(std::move(row));
  }
  return b;
}

// Fréchet eta block for one judge pair: |Y|^2 fresh columns with the two cap
// rows each. Returns the per-pair sum of eta terms for the caller's floor row.
void add_eta_pair(ConstraintBlock& b, const IdentifyProblem& ctx,
                  std::size_t z, std::size_t zp, int a, int ap, int& next_col,
                  std::vector<std::pair<int, double>>& floor_terms,
                  double floor_weight) {
  const auto& idx = ctx.idx;
  for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
    for (std::size_t i1 = 0; i1 < idx.ny; ++i1) {
      int eta = next_col++;
      b.new_aux_columns += 1;
      {
        std::ostringstream os;
        os << "eta_z" << z << "_z" << zp << "_y" << i0 << "_" << i1;
        b.aux_names.push_back(os.str());
      }
      lp::Row cap1;
      cap1.terms.push_back({eta, 1.0});
      append_released_cell(cap1.terms, idx, z, i0, i1, a, -1.0);
      cap1.relation = lp::Relation::LessEq;
      cap1.rhs = 0.0;
      b.rows.push_back(std::move(cap1));

      lp::Row cap2;
      cap2.terms.push_back({eta, 1.0});
      append_released_cell(cap2.terms, idx, zp, i0, i1, ap, -1.0);
      cap2.relation = lp::Relation::LessEq;
      cap2.rhs = 0.0;
      b.rows.push_back(std::move(cap2));

      floor_terms.push_back({eta, floor_weight});
    }
}

ConstraintBlock compile_pairwise(const IdentifyProblem& ctx,
                                 const PairwiseDisagreement& spec,
                                 int base_aux_col) {
  ConstraintBlock b;
  check_judge(ctx, spec.z, "PairwiseDisagreement");
  check_judge(ctx, spec.z_prime, "PairwiseDisagreement");
  if (spec.delta < 0.0 || spec.delta > 1.0)
    throw std::invalid_argument("PairwiseDisagreement: delta outside [0,1]");

  int next_col = base_aux_col;
  lp::Row floor;
  add_eta_pair(b, ctx, spec.z, spec.z_prime, spec.a, spec.a_prime, next_col,
               floor.terms, 1.0);
  // sum eta >= (1-delta) pi(D(z',a')=1)
  const auto& idx = ctx.idx;
  for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
    for (std::size_t i1 = 0; i1 < idx.ny; ++i1)
      append_released_cell(floor.terms, idx, spec.z_prime, i0, i1,
                           spec.a_prime, -(1.0 - spec.delta));
  floor.relation = lp::Relation::GreaterEq;
  floor.rhs = 0.0;
  b.rows.push_back(std::move(floor));
  return b;
}

ConstraintBlock compile_average(const IdentifyProblem& ctx,
                                const AverageDisagreement& spec,
                                int base_aux_col) {
  ConstraintBlock b;
  if (spec.dp_bar < 0.0 || spec.dp_bar > 1.0)
    throw std::invalid_argument("AverageDisagreement: DP bar outside [0,1]");
  const auto& data = ctx.dist();
  auto wq = group_weights(data, 0, spec.caseload_weighted);
  auto wc = group_weights(data, 1, spec.caseload_weighted);
  if (wq.empty() || wc.empty())
    throw std::invalid_argument(
        "AverageDisagreement: both judge groups must be nonempty");

  int next_col = base_aux_col;
  lp::Row floor;
  for (const auto& [z, w] : wq)
    for (const auto& [zp, wp] : wc)
      add_eta_pair(b, ctx, z, zp, 1, 1, next_col, floor.terms, w * wp);
  // weighted eta mass >= (1 - DPbar) * P(D(Z_{Qc},1)=1)
  const auto& idx = ctx.idx;
  for (const auto& [zp, wp] : wc)
    for (std::size_t i0 = 0; i0 < idx.ny; ++i0)
      for (std::size_t i1 = 0; i1 < idx.ny; ++i1)
        append_released_cell(floor.terms, idx, zp, i0, i1, 1,
                             -(1.0 - spec.dp_bar) * wp);
  floor.relation = lp::Relation::GreaterEq;
  floor.rhs = 0.0;
  b.rows.push_back(std::move(floor));
  return b;
}

bool is_disagreement(const RestrictionSpec& spec) {
  return std::holds_alternative<PairwiseDisagreement>(spec) ||
         std::holds_alternative<AverageDisagreement>(spec);
}

}  // namespace

ConstraintBlock compile_restriction(const RestrictionSpec& spec,
                                    const IdentifyProblem& ctx,
                                    int base_aux_col) {
  if (is_disagreement(spec)) return compile_disagreement(spec, ctx, base_aux_col);
  return std::visit(
      [&](const auto& s) -> ConstraintBlock {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolicyMonotonicity>)
          return compile_policy_monotonicity(ctx);
        else if constexpr (std::is_same_v<T, KnownY0>)
          return compile_known_value(ctx, s.value, false);
        else if constexpr (std::is_same_v<T, KnownY1>)
          return compile_known_value(ctx, s.value, true);
        else if constexpr (std::is_same_v<T, MonotoneTreatmentResponse>)
          return compile_mtr(ctx);
        else if constexpr (std::is_same_v<T, PCBound>)
          return compile_pc_bound(ctx, s);
        else if constexpr (std::is_same_v<T, TreatmentEffectCap>)
          return compile_te_cap(ctx, s);
        else if constexpr (std::is_same_v<T, OutcomeDisparity>)
          return compile_outcome_disparity(ctx, s);
        else
          throw std::logic_error("unhandled restriction kind");
      },
      spec);
}

ConstraintBlock compile_disagreement(const RestrictionSpec& spec,
                                     const IdentifyProblem& ctx,
                                     int base_aux_col) {
  if (!ctx.restrictions.has_policy_monotonicity())
    throw std::invalid_argument(
        "disagreement bounds require PolicyMonotonicity: the coupling "
        "argument behind the Fréchet eta-linearization is only valid for "
        "marginals consistent with it; add PolicyMonotonicity to the "
        "restriction set");
  if (const auto* p = std::get_if<PairwiseDisagreement>(&spec))
    return compile_pairwise(ctx, *p, base_aux_col);
  if (const auto* a = std::get_if<AverageDisagreement>(&spec))
    return compile_average(ctx, *a, base_aux_col);
  throw std::invalid_argument("compile_disagreement: not a disagreement spec");
}

void apply_restrictions(lp::LPProblem& p, const IdentifyProblem& ctx,
                        BoundsDiagnostics* diag,
                        std::vector<std::string>* warnings) {
  for (const auto& spec : ctx.restrictions.items) {
    ConstraintBlock block = compile_restriction(spec, ctx, p.num_vars());
    if (block.new_aux_columns > 0) {
      int first = p.add_vars(block.new_aux_columns, 0.0, 1.0);
      for (int i = 0; i < block.new_aux_columns; ++i)
        if (static_cast<std::size_t>(i) < block.aux_names.size())
          p.names[first + i] = block.aux_names[i];
    }
    for (auto& row : block.rows) p.add_row(std::move(row));
    if (diag) {
      diag->restriction_rows += static_cast<int>(block.rows.size());
      diag->aux_columns += block.new_aux_columns;
    }
    if (warnings)
      warnings->insert(warnings->end(), block.warnings.begin(),
                       block.warnings.end());
  }
}

}  // namespace policybounds
