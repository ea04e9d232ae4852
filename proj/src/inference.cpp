#include "policybounds/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "policybounds/calibrate.hpp"
#include "policybounds/restrictions.hpp"

namespace policybounds::inference {

namespace {

constexpr double kSeTol = 1e-14;

/// Deterministic standard normals: mt19937_64 bits through Box-Muller, so
/// results do not depend on the standard library's distribution internals.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.141592653589793 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() { return (rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& corr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument(
        "supt_critical_value: correlation block is not positive semidefinite");
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd m = corr;
    if (jitter > 0.0)
      m += jitter * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = (jitter == 0.0) ? 1e-12 : jitter * 100.0;
  }
  throw std::invalid_argument(
      "supt_critical_value: correlation block is not positive semidefinite");
}

/// Multinomial covariance of the 2*ny cell probabilities of one judge.
Eigen::MatrixXd cell_covariance(const JudgeCell& j, std::size_t ny) {
  Eigen::VectorXd p(2 * ny);
  for (std::size_t yi = 0; yi < ny; ++yi) {
    p[2 * yi] = j.pmf[yi][1];      // released cell
    p[2 * yi + 1] = j.pmf[yi][0];  // detained cell
  }
  double n = static_cast<double>(std::max<long>(j.n_cases, 1));
  Eigen::MatrixXd cov =
      (Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose()) / n;
  return cov;
}

Eigen::MatrixXd correlation_of(const Eigen::MatrixXd& cov) {
  Eigen::VectorXd se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  for (int i = 0; i < cov.rows(); ++i)
    for (int k = 0; k < cov.cols(); ++k)
      if (i != k && se[i] > kSeTol && se[k] > kSeTol)
        corr(i, k) = cov(i, k) / (se[i] * se[k]);
  return corr;
}

/// Correlation blocks per judge, restricted to cells with positive variance.
std::vector<Eigen::MatrixXd> judge_corr_blocks(const DataDistribution& data) {
  std::vector<Eigen::MatrixXd> blocks;
  const std::size_t ny = data.grid.size();
  for (const auto& j : data.judges) {
    Eigen::MatrixXd cov = cell_covariance(j, ny);
    std::vector<int> live;
    for (int i = 0; i < cov.rows(); ++i)
      if (cov(i, i) > kSeTol) live.push_back(i);
    if (live.empty()) continue;
    Eigen::MatrixXd sub(live.size(), live.size());
    for (std::size_t a = 0; a < live.size(); ++a)
      for (std::size_t b = 0; b < live.size(); ++b)
        sub(a, b) = cov(live[a], live[b]);
    blocks.push_back(correlation_of(sub));
  }
  return blocks;
}

/// Coefficients of the three aggregate moments on one judge's cells, in the
/// (released, detained) x y ordering used throughout.
Eigen::MatrixXd aggregate_coeffs(const DataDistribution& data, std::size_t z,
                                 double share_q, double share_qc) {
  const std::size_t ny = data.grid.size();
  const auto& j = data.judges[z];
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * ny, 3);
  double wq = (j.group == 0) ? j.share / share_q : 0.0;
  double wqc = (j.group == 1) ? j.share / share_qc : 0.0;
  for (std::size_t yi = 0; yi < ny; ++yi) {
    double y = data.grid[yi];
    // outcome gap E[Y|Q] - E[Y|Q^c] loads on both released and detained cells
    c(2 * yi, 0) = wq * y - wqc * y;
    c(2 * yi + 1, 0) = wq * y - wqc * y;
    // the group release rates load on released cells only
    c(2 * yi, 1) = wq;
    c(2 * yi, 2) = wqc;
  }
  return c;
}

double two_sided_quantile(double level) {
  return calibrate::norm_quantile(1.0 - 0.5 * (1.0 - level));
}

struct RaceAggregate {
  double p11 = 0.0;  // P(D=1, Y=1 | R=r)
  double p10 = 0.0;  // P(D=1, Y=0 | R=r)
  double var11 = 0.0, var10 = 0.0, cov = 0.0;
};

RaceAggregate race_aggregate(const DataDistribution& data) {
  RaceAggregate r;
  for (const auto& j : data.judges) {
    double n = static_cast<double>(std::max<long>(j.n_cases, 1));
    double a = j.pmf[1][1], b = j.pmf[0][1];
    r.p11 += j.share * a;
    r.p10 += j.share * b;
    r.var11 += j.share * j.share * a * (1.0 - a) / n;
    r.var10 += j.share * j.share * b * (1.0 - b) / n;
    r.cov += j.share * j.share * (-a * b) / n;
  }
  return r;
}

void require_binary(const DataDistribution& data, const char* who) {
  if (data.grid.size() != 2 || data.grid[0] != 0.0 || data.grid[1] != 1.0)
    throw std::invalid_argument(std::string(who) +
                                ": requires binary Y in {0,1}");
}

/// One-sided joint band over the (p11, p01) judge moments; returns the
/// intersected interval endpoints.
struct IntersectionBand {
  double lower = 0.0;
  double upper = 1.0;
};

IntersectionBand banded_intersection(const DataDistribution& data, double cv) {
  IntersectionBand res;
  res.lower = 0.0;
  res.upper = 1.0;
  for (const auto& j : data.judges) {
    double n = static_cast<double>(std::max<long>(j.n_cases, 1));
    double p11 = j.pmf[1][1], p01 = j.pmf[0][1];
    double se11 = std::sqrt(std::max(0.0, p11 * (1.0 - p11) / n));
    double se01 = std::sqrt(std::max(0.0, p01 * (1.0 - p01) / n));
    res.lower = std::max(res.lower, p11 - cv * se11);
    res.upper = std::min(res.upper, 1.0 - p01 + cv * se01);
  }
  return res;
}

}  // namespace

double supt_critical_value(const std::vector<Eigen::MatrixXd>& corr_blocks,
                           double level, int draws, std::uint64_t seed,
                           bool one_sided) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("supt_critical_value: level outside (0, 1)");
  if (draws < 1)
    throw std::invalid_argument("supt_critical_value: draws < 1");

  std::vector<Eigen::MatrixXd> lower;
  int total = 0;
  for (const auto& c : corr_blocks) {
    if (c.rows() == 0) continue;
    if (c.rows() != c.cols())
      throw std::invalid_argument("supt_critical_value: non-square block");
    lower.push_back(cholesky_with_jitter(c));
    total += static_cast<int>(c.rows());
  }
  if (total == 0) return 0.0;

  NormalSource normals(seed);
  std::vector<double> maxima(draws);
  Eigen::VectorXd u;
  for (int d = 0; d < draws; ++d) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& L : lower) {
      u.resize(L.rows());
      for (int i = 0; i < u.size(); ++i) u[i] = normals.next();
      Eigen::VectorXd z = L * u;
      for (int i = 0; i < z.size(); ++i)
        m = std::max(m, one_sided ? z[i] : std::abs(z[i]));
    }
    maxima[d] = m;
  }
  std::sort(maxima.begin(), maxima.end());
  int idx = static_cast<int>(std::ceil(level * draws)) - 1;
  idx = std::clamp(idx, 0, draws - 1);
  return maxima[idx];
}

MomentBand compute_moment_band(const DataDistribution& data,
                               const BandConfig& cfg) {
  const std::size_t K = data.num_judges();
  const std::size_t ny = data.grid.size();
  MomentBand band;
  band.level_cells = cfg.level_cells;
  band.level_agg = cfg.level_agg;

  band.estimates.resize(2 * ny * K);
  band.ses.resize(2 * ny * K);
  for (std::size_t z = 0; z < K; ++z) {
    const auto& j = data.judges[z];
    double n = static_cast<double>(std::max<long>(j.n_cases, 1));
    for (std::size_t yi = 0; yi < ny; ++yi) {
      std::size_t base = (z * ny + yi) * 2;
      band.estimates[base] = j.pmf[yi][1];
      band.estimates[base + 1] = j.pmf[yi][0];
      band.ses[base] = std::sqrt(j.pmf[yi][1] * (1.0 - j.pmf[yi][1]) / n);
      band.ses[base + 1] = std::sqrt(j.pmf[yi][0] * (1.0 - j.pmf[yi][0]) / n);
    }
  }
  if (cfg.external_ses) {
    if (cfg.external_ses->size() != static_cast<std::size_t>(band.ses.size()))
      throw std::invalid_argument(
          "compute_moment_band: external se length mismatch");
    for (int i = 0; i < band.ses.size(); ++i)
      band.ses[i] = (*cfg.external_ses)[i];
  }

  band.cv_cells = supt_critical_value(judge_corr_blocks(data), cfg.level_cells,
                                      cfg.draws, cfg.seed);

  if (cfg.use_aggregates) {
    double share_q = 0.0, share_qc = 0.0;
    for (const auto& j : data.judges)
      (j.group == 0 ? share_q : share_qc) += j.share;
    if (share_q > 0.0 && share_qc > 0.0) {
      Eigen::Vector3d est = Eigen::Vector3d::Zero();
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t z = 0; z < K; ++z) {
        Eigen::MatrixXd c = aggregate_coeffs(data, z, share_q, share_qc);
        Eigen::VectorXd cells(2 * ny);
        for (std::size_t yi = 0; yi < ny; ++yi) {
          cells[2 * yi] = data.judges[z].pmf[yi][1];
          cells[2 * yi + 1] = data.judges[z].pmf[yi][0];
        }
        est += c.transpose() * cells;
        cov += c.transpose() * cell_covariance(data.judges[z], ny) * c;
      }
      band.agg_estimates = est;
      band.agg_ses = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
      band.cv_agg = supt_critical_value({correlation_of(cov)}, cfg.level_agg,
                                        cfg.draws, cfg.seed + 1);
    }
  }
  return band;
}

CIResult ci_projection(const DataDistribution& data, const PolicySpec& policy,
                       const RestrictionSet& restrictions,
                       const BandConfig& cfg) {
  CIResult res;
  res.draws = cfg.draws;
  res.seed = cfg.seed;
  res.method = cfg.pc_effect ? "projection-pc" : "projection";

  MomentBand band = compute_moment_band(data, cfg);
  bool with_agg = band.agg_estimates.size() == 3;
  res.level = cfg.level_cells + (with_agg ? cfg.level_agg - 1.0 : 0.0);
  if (cfg.use_aggregates && !with_agg)
    res.warnings.push_back(
        "ci_projection: a quota group is empty, aggregate moments dropped");

  IdentifyProblem ctx = make_identify_problem(data, policy, restrictions);
  BoundsDiagnostics diag;
  lp::LPProblem p =
      build_identify_lp(ctx, lp::Sense::Maximize, &diag, &res.warnings);
  const std::size_t K = ctx.idx.K, ny = ctx.idx.ny;

  // relax each data-match equality into the simultaneous band
  for (std::size_t z = 0; z < K; ++z) {
    for (std::size_t yi = 0; yi < ny; ++yi) {
      // row order within build_identify_lp: released then detained
      std::size_t moment = (z * ny + yi) * 2;
      for (int d = 0; d < 2; ++d) {
        std::size_t row_idx = (z * ny + yi) * 2 + d;
        double est = band.estimates[moment + d];
        double hw = band.cv_cells * band.ses[moment + d];
        lp::Row hi;
        hi.terms = p.rows[row_idx].terms;
        hi.relation = lp::Relation::LessEq;
        hi.rhs = est + hw;
        p.rows[row_idx].relation = lp::Relation::GreaterEq;
        p.rows[row_idx].rhs = est - hw;
        p.add_row(std::move(hi));
      }
    }
  }

  if (with_agg) {
    double share_q = 0.0, share_qc = 0.0;
    for (const auto& j : data.judges)
      (j.group == 0 ? share_q : share_qc) += j.share;
    for (int a = 0; a < 3; ++a) {
      lp::Row row;
      for (std::size_t z = 0; z < K; ++z) {
        Eigen::MatrixXd c = aggregate_coeffs(data, z, share_q, share_qc);
        // the observed cell (y, d) of pi_z(i0, i1, d0, d1) is (y_{d0}, d0)
        for (std::size_t i0 = 0; i0 < ny; ++i0)
          for (std::size_t i1 = 0; i1 < ny; ++i1)
            for (int d0 = 0; d0 < 2; ++d0) {
              std::size_t yobs = d0 ? i1 : i0;
              double coef = c(2 * yobs + (d0 ? 0 : 1), a);
              if (coef == 0.0) continue;
              for (int d1 = 0; d1 < 2; ++d1)
                row.terms.push_back({ctx.idx(z, i0, i1, d0, d1), coef});
            }
      }
      double hw = band.cv_agg * band.agg_ses[a];
      lp::Row hi;
      hi.terms = row.terms;
      hi.relation = lp::Relation::LessEq;
      hi.rhs = band.agg_estimates[a] + hw;
      row.relation = lp::Relation::GreaterEq;
      row.rhs = band.agg_estimates[a] - hw;
      p.add_row(std::move(row));
      p.add_row(std::move(hi));
    }
  }

  if (!cfg.pc_effect) {
    auto [lo, hi] = lp::solve_pair(p);
    if (lo.status == lp::SolveStatus::Infeasible ||
        hi.status == lp::SolveStatus::Infeasible) {
      res.empty = true;
      return res;
    }
    if (!lo.optimal() || !hi.optimal())
      throw std::runtime_error("ci_projection: endpoint LP failed: " +
                               std::string(lp::status_name(lo.status)) + "/" +
                               std::string(lp::status_name(hi.status)));
    res.lower = lo.objective;
    res.upper = hi.objective;
    return res;
  }

  // policy-complier ratio: numerator and denominator as pi functionals,
  // since band relaxation unpins the observed aggregates
  AffineFunctional num, den;
  for (std::size_t z = 0; z < K; ++z)
    for (std::size_t i0 = 0; i0 < ny; ++i0)
      for (std::size_t i1 = 0; i1 < ny; ++i1)
        for (int d0 = 0; d0 < 2; ++d0)
          for (int d1 = 0; d1 < 2; ++d1) {
            int col = ctx.idx(z, i0, i1, d0, d1);
            double w = data.judges[z].share;
            double y1v = d1 ? data.grid[i1] : data.grid[i0];
            double y0v = d0 ? data.grid[i1] : data.grid[i0];
            if (y1v != y0v) num.terms.push_back({col, w * (y1v - y0v)});
            if (d1 != d0) den.terms.push_back({col, w * (d1 - d0)});
          }
  auto frac = fractional_bounds(p, num, den);
  if (frac.lower_status == lp::SolveStatus::Infeasible ||
      frac.upper_status == lp::SolveStatus::Infeasible) {
    res.empty = true;
    return res;
  }
  for (auto& w : frac.warnings) res.warnings.push_back(std::move(w));
  if (!frac.both_optimal())
    throw std::runtime_error("ci_projection: fractional endpoint failed");
  res.lower = frac.lower;
  res.upper = frac.upper;
  return res;
}

CIResult ci_universal_intersection(const DataDistribution& data, double level,
                                   int draws, std::uint64_t seed) {
  require_binary(data, "ci_universal_intersection");
  CIResult res;
  res.level = level;
  res.draws = draws;
  res.seed = seed;
  res.method = "universal-intersection";

  // joint one-sided band across the 2K moments (p11, p01 per judge)
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& j : data.judges) {
    double n = static_cast<double>(std::max<long>(j.n_cases, 1));
    double p11 = j.pmf[1][1], p01 = j.pmf[0][1];
    double v11 = p11 * (1.0 - p11) / n;
    double v01 = p01 * (1.0 - p01) / n;
    std::vector<int> live;
    if (v11 > kSeTol) live.push_back(0);
    if (v01 > kSeTol) live.push_back(1);
    if (live.empty()) continue;
    if (live.size() == 1) {
      blocks.push_back(Eigen::MatrixXd::Identity(1, 1));
    } else {
      Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(2, 2);
      corr(0, 1) = corr(1, 0) = -p11 * p01 / (n * std::sqrt(v11 * v01));
      blocks.push_back(corr);
    }
  }
  double cv = supt_critical_value(blocks, level, draws, seed, true);
  auto band = banded_intersection(data, cv);
  if (band.lower > band.upper) {
    res.empty = true;
    return res;
  }
  res.lower = std::max(0.0, band.lower);
  res.upper = std::min(1.0, band.upper);
  return res;
}

CIResult ci_delta_two_step(const DataDistribution& data_black,
                           const DataDistribution& data_white,
                           double case_share_black, const DeltaCIConfig& cfg) {
  require_binary(data_black, "ci_delta_two_step");
  require_binary(data_white, "ci_delta_two_step");
  if (!(case_share_black > 0.0 && case_share_black < 1.0))
    throw std::invalid_argument("ci_delta_two_step: case share outside (0,1)");
  if (cfg.grid_n < 1)
    throw std::invalid_argument("ci_delta_two_step: grid_n < 1");

  CIResult res;
  res.level = cfg.level_first + cfg.level_second - 1.0;
  res.draws = cfg.draws;
  res.seed = cfg.seed;
  res.method = "delta-two-step";

  // step 1: one joint band across both races' judge moments
  std::vector<Eigen::MatrixXd> blocks;
  auto collect = [&](const DataDistribution& d) {
    for (const auto& j : d.judges) {
      double n = static_cast<double>(std::max<long>(j.n_cases, 1));
      double p11 = j.pmf[1][1], p01 = j.pmf[0][1];
      double v11 = p11 * (1.0 - p11) / n;
      double v01 = p01 * (1.0 - p01) / n;
      std::vector<int> live;
      if (v11 > kSeTol) live.push_back(0);
      if (v01 > kSeTol) live.push_back(1);
      if (live.empty()) continue;
      if (live.size() == 1) {
        blocks.push_back(Eigen::MatrixXd::Identity(1, 1));
      } else {
        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(2, 2);
        corr(0, 1) = corr(1, 0) = -p11 * p01 / (n * std::sqrt(v11 * v01));
        blocks.push_back(corr);
      }
    }
  };
  collect(data_black);
  collect(data_white);
  double cv = supt_critical_value(blocks, cfg.level_first, cfg.draws, cfg.seed,
                                  true);
  auto band_b = banded_intersection(data_black, cv);
  auto band_w = banded_intersection(data_white, cv);
  if (band_b.lower > band_b.upper || band_w.lower > band_w.upper) {
    res.empty = true;
    return res;
  }

  constexpr double kEdge = 1e-9;
  auto clip = [&](double v) { return std::clamp(v, kEdge, 1.0 - kEdge); };
  double lb = clip(band_b.lower), ub = clip(band_b.upper);
  double lw = clip(band_w.lower), uw = clip(band_w.upper);

  RaceAggregate ab = race_aggregate(data_black);
  RaceAggregate aw = race_aggregate(data_white);
  const double wb = case_share_black, ww = 1.0 - case_share_black;
  const double zq = two_sided_quantile(cfg.level_second);

  auto grid_point = [&](double lo, double hi, int i) {
    if (cfg.grid_n == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * i / (cfg.grid_n - 1);
  };

  double out_lo = std::numeric_limits<double>::infinity();
  double out_hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.grid_n; ++i) {
    double eb = grid_point(lb, ub, i);
    for (int k = 0; k < cfg.grid_n; ++k) {
      double ew = grid_point(lw, uw, k);
      double ebar = wb * eb + ww * ew;
      // gradients of Delta in the four observable joints, at fixed (eb, ew)
      double g_b11 = ebar / eb, g_b10 = (1.0 - ebar) / (1.0 - eb);
      double g_w11 = -ebar / ew, g_w10 = -(1.0 - ebar) / (1.0 - ew);
      double delta = g_b11 * ab.p11 + g_b10 * ab.p10 + g_w11 * aw.p11 +
                     g_w10 * aw.p10;
      double var = g_b11 * g_b11 * ab.var11 + g_b10 * g_b10 * ab.var10 +
                   2.0 * g_b11 * g_b10 * ab.cov + g_w11 * g_w11 * aw.var11 +
                   g_w10 * g_w10 * aw.var10 + 2.0 * g_w11 * g_w10 * aw.cov;
      double se = std::sqrt(std::max(0.0, var));
      out_lo = std::min(out_lo, delta - zq * se);
      out_hi = std::max(out_hi, delta + zq * se);
    }
  }
  res.lower = out_lo;
  res.upper = out_hi;
  return res;
}

}  // namespace policybounds::inference
