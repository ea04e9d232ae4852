#ifndef TEST_SUPPORT_SIMPLEX_ORACLE_HPP
#define TEST_SUPPORT_SIMPLEX_ORACLE_HPP

// Plain textbook two-phase simplex used as an independent reference for the
// library solver. Dense std::vector tableau, explicit artificial columns,
// Bland's rule throughout. Slow but simple enough to trust by inspection.
//
// Solves: max c'x  s.t.  A x {<=,=,>=} b,  x >= 0.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace testsupport {

enum class OracleStatus { Optimal, Infeasible, Unbounded };

struct OracleResult {
  OracleStatus status = OracleStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

struct OracleRow {
  std::vector<double> a;  // dense coefficients, length n
  int rel = 0;            // -1: <=, 0: =, +1: >=
  double b = 0.0;
};

class TextbookSimplex {
 public:
  OracleResult maximize(const std::vector<double>& c,
                        std::vector<OracleRow> rows) {
    n_ = c.size();
    m_ = rows.size();

    // flip rows so b >= 0
    for (auto& r : rows) {
      if (r.b < 0) {
        for (double& v : r.a) v = -v;
        r.b = -r.b;
        r.rel = -r.rel;
      }
    }

    // columns: n structural, then one slack/surplus per inequality,
    // then one artificial per row that needs it
    std::size_t n_slack = 0;
    for (const auto& r : rows)
      if (r.rel != 0) ++n_slack;
    std::size_t n_art = 0;
    for (const auto& r : rows)
      if (r.rel != -1) ++n_art;
    total_ = n_ + n_slack + n_art;

    tab_.assign(m_, std::vector<double>(total_ + 1, 0.0));
    basis_.assign(m_, 0);
    art_start_ = n_ + n_slack;

    std::size_t slack = n_, art = art_start_;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = rows[i].a[j];
      tab_[i][total_] = rows[i].b;
      if (rows[i].rel == -1) {
        tab_[i][slack] = 1.0;
        basis_[i] = slack++;
      } else if (rows[i].rel == 1) {
        tab_[i][slack] = -1.0;
        ++slack;
        tab_[i][art] = 1.0;
        basis_[i] = art++;
      } else {
        tab_[i][art] = 1.0;
        basis_[i] = art++;
      }
    }

    OracleResult res;
    if (n_art > 0) {
      std::vector<double> phase1(total_, 0.0);
      for (std::size_t j = art_start_; j < total_; ++j) phase1[j] = -1.0;
      if (!optimize(phase1, true)) {
        res.status = OracleStatus::Unbounded;  // cannot happen in phase 1
        return res;
      }
      double art_sum = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] >= art_start_) art_sum += tab_[i][total_];
      if (art_sum > 1e-7) {
        res.status = OracleStatus::Infeasible;
        return res;
      }
    }

    // artificial columns keep objective 0 but are barred from re-entering
    std::vector<double> phase2(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) phase2[j] = c[j];
    if (!optimize(phase2, false)) {
      res.status = OracleStatus::Unbounded;
      return res;
    }

    res.status = OracleStatus::Optimal;
    res.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) res.x[basis_[i]] = tab_[i][total_];
    res.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) res.objective += c[j] * res.x[j];
    return res;
  }

 private:
  // maximizes obj over the tableau with Bland's rule; false on unbounded
  bool optimize(const std::vector<double>& obj, bool allow_artificial) {
    std::size_t cols = allow_artificial ? total_ : art_start_;
    std::vector<double> red(cols);
    for (long iter = 0; iter < 2000000; ++iter) {
      for (std::size_t j = 0; j < cols; ++j) {
        red[j] = obj[j];
        for (std::size_t i = 0; i < m_; ++i)
          red[j] -= obj[basis_[i]] * tab_[i][j];
      }
      std::size_t enter = total_;
      for (std::size_t j = 0; j < cols; ++j) {
        if (red[j] > 1e-9) {
          enter = j;
          break;
        }
      }
      if (enter == total_) return true;

      std::size_t leave = m_;
      double best = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (tab_[i][enter] > 1e-9) {
          double ratio = tab_[i][total_] / tab_[i][enter];
          if (leave == m_ || ratio < best - 1e-12 ||
              (std::fabs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) return false;

      double piv = tab_[leave][enter];
      for (double& v : tab_[leave]) v /= piv;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == leave) continue;
        double f = tab_[i][enter];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j <= total_; ++j)
          tab_[i][j] -= f * tab_[leave][j];
      }
      basis_[leave] = enter;
    }
    return false;
  }

  std::size_t n_ = 0, m_ = 0, total_ = 0, art_start_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<std::size_t> basis_;
};

}  // namespace testsupport

#endif
