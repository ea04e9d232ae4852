#include "policybounds/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace policybounds::calibrate {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
// beyond this the standard normal tail is below 1e-18
constexpr double kTailCut = 9.0;

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

template <class F>
double simpson_step(const F& f, double a, double m, double b, double fa,
                    double fm, double fb, double whole, double eps,
                    int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
    return left + right + delta / 15.0;
  return simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double eps) {
  if (b <= a) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, m, b, fa, fm, fb, whole, eps, 48);
}

void check_unit_open(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0))
    throw std::invalid_argument(std::string(what) +
                                " must lie strictly inside (0, 1)");
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("norm_quantile: p outside (0, 1)");

  // Acklam's rational approximation, then one Halley step against erfc
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = norm_cdf(x) - p;
  double u = e / norm_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double bvn_orthant(double rho, double a, double b) {
  if (std::abs(rho) > 1.0 + 1e-12)
    throw std::invalid_argument("bvn_orthant: |rho| > 1");
  rho = std::clamp(rho, -1.0, 1.0);

  if (a <= -kTailCut || b <= -kTailCut) return 0.0;
  if (a >= kTailCut) return norm_cdf(b);
  if (b >= kTailCut) return norm_cdf(a);

  if (rho >= 1.0 - 1e-14) return norm_cdf(std::min(a, b));
  if (rho <= -1.0 + 1e-14)
    return std::max(0.0, norm_cdf(a) + norm_cdf(b) - 1.0);
  if (rho == 0.0) return norm_cdf(a) * norm_cdf(b);

  const double s = std::sqrt(1.0 - rho * rho);
  auto f = [&](double x) { return norm_pdf(x) * norm_cdf((b - rho * x) / s); };
  return adaptive_simpson(f, -kTailCut, a, 5e-12);
}

double dp_from_rho(const SignalModel& model) {
  const std::size_t K = model.rates.size();
  if (model.group.size() != K || model.caseloads.size() != K)
    throw std::invalid_argument("dp_from_rho: field lengths disagree");
  check_unit_open(model.quota, "quota");
  for (double r : model.rates) check_unit_open(r, "release rate");

  const double tq = norm_quantile(model.quota);
  double wsum = 0.0, acc = 0.0;
  for (std::size_t z = 0; z < K; ++z) {
    if (model.group[z] != 0) continue;
    for (std::size_t zp = 0; zp < K; ++zp) {
      if (model.group[zp] != 1) continue;
      double tzp = norm_quantile(model.rates[zp]);
      // P(V_z > tq, V_zp <= tzp) via the joint cdf
      double p = norm_cdf(tzp) - bvn_orthant(model.rho, tq, tzp);
      double divisor = model.divide_by_quota ? model.quota : model.rates[zp];
      double w = model.caseloads[z] * model.caseloads[zp];
      acc += w * std::max(0.0, p) / divisor;
      wsum += w;
    }
  }
  if (wsum <= 0.0)
    throw std::invalid_argument("dp_from_rho: one of the groups is empty");
  return acc / wsum;
}

double rho_from_dp(const SignalModel& model_sans_rho, double target_dp) {
  SignalModel m = model_sans_rho;
  m.rho = 1.0;
  double dp_hi_rho = dp_from_rho(m);  // smallest attainable dp
  m.rho = -1.0;
  double dp_lo_rho = dp_from_rho(m);  // largest attainable dp
  const double slack = 1e-10;
  if (target_dp < dp_hi_rho - slack || target_dp > dp_lo_rho + slack)
    throw std::invalid_argument("rho_from_dp: target outside attainable range");

  double lo = -1.0, hi = 1.0;  // dp is strictly decreasing in rho
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    m.rho = mid;
    if (dp_from_rho(m) > target_dp)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double od_from_dp(double delta_te, double dp_bar, double q) {
  if (delta_te < 0.0 || dp_bar < 0.0)
    throw std::invalid_argument("od_from_dp: negative inputs");
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("od_from_dp: q outside (0, 1]");
  return delta_te * dp_bar * q;
}

double dp_from_od(double delta_te, double od_bar, double q) {
  if (od_bar < 0.0) throw std::invalid_argument("dp_from_od: negative OD");
  if (delta_te <= 0.0 || q <= 0.0)
    throw std::invalid_argument("dp_from_od: division by zero");
  return od_bar / (delta_te * q);
}

double rho_from_panel_votes(const std::vector<PairStat>& pairs,
                            std::vector<std::string>* warnings) {
  double wsum = 0.0, acc = 0.0;
  for (const auto& pr : pairs) {
    auto skip = [&](const std::string& why) {
      if (warnings)
        warnings->push_back("rho_from_panel_votes: pair '" + pr.pair_id +
                            "' skipped: " + why);
    };
    if (!(pr.rate_a > 0.0 && pr.rate_a < 1.0 && pr.rate_b > 0.0 &&
          pr.rate_b < 1.0)) {
      skip("degenerate marginal release rate");
      continue;
    }
    double lo = std::max(0.0, pr.rate_a + pr.rate_b - 1.0);
    double hi = std::min(pr.rate_a, pr.rate_b);
    if (pr.joint_rate < lo - 1e-9 || pr.joint_rate > hi + 1e-9) {
      skip("joint rate violates the Frechet bounds of the marginals");
      continue;
    }
    double joint = std::clamp(pr.joint_rate, lo, hi);
    double ta = norm_quantile(pr.rate_a), tb = norm_quantile(pr.rate_b);

    // bvn_orthant is increasing in rho for fixed thresholds
    double rlo = -1.0, rhi = 1.0;
    while (rhi - rlo > 1e-10) {
      double mid = 0.5 * (rlo + rhi);
      if (bvn_orthant(mid, ta, tb) < joint)
        rlo = mid;
      else
        rhi = mid;
    }
    double w = static_cast<double>(std::max<long>(pr.n_cases, 0));
    if (w <= 0.0) {
      skip("nonpositive case count");
      continue;
    }
    acc += w * 0.5 * (rlo + rhi);
    wsum += w;
  }
  if (wsum <= 0.0)
    throw std::invalid_argument("rho_from_panel_votes: no usable pairs");
  return acc / wsum;
}

std::vector<PairStat> parse_pair_stats_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("pair_stats: cannot open '" + path + "'");

  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
  };

  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("pair_stats: empty file '" + path + "'");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  auto cols = split(header);
  const std::vector<std::string> expected = {"pair_id", "rate_a", "rate_b",
                                             "joint_rate", "n_cases"};
  std::vector<int> pos(expected.size(), -1);
  for (std::size_t e = 0; e < expected.size(); ++e) {
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (cols[c] == expected[e]) pos[e] = static_cast<int>(c);
    if (pos[e] < 0)
      throw std::runtime_error("pair_stats: missing column '" + expected[e] +
                               "' in '" + path + "'");
  }

  std::vector<PairStat> out;
  std::string line;
  for (int row = 2; std::getline(in, line); ++row) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() < cols.size())
      throw std::runtime_error("pair_stats: row " + std::to_string(row) +
                               " has too few columns");
    PairStat p;
    try {
      p.pair_id = cells[pos[0]];
      p.rate_a = std::stod(cells[pos[1]]);
      p.rate_b = std::stod(cells[pos[2]]);
      p.joint_rate = std::stod(cells[pos[3]]);
      p.n_cases = std::stol(cells[pos[4]]);
    } catch (const std::exception&) {
      throw std::runtime_error("pair_stats: row " + std::to_string(row) +
                               " has a malformed numeric field");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace policybounds::calibrate
