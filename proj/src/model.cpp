#include "policybounds/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace policybounds {

OutcomeGrid::OutcomeGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("OutcomeGrid: empty support");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1]))
      throw std::invalid_argument("OutcomeGrid: values must be strictly increasing");
  }
}

std::optional<std::size_t> OutcomeGrid::index_of(double y, double tol) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), y - tol);
  if (it != values_.end() && std::abs(*it - y) <= tol)
    return static_cast<std::size_t>(it - values_.begin());
  return std::nullopt;
}

double JudgeCell::release_rate() const {
  double r = 0.0;
  for (const auto& cell : pmf) r += cell[1];
  return r;
}

double DataDistribution::aggregate_release_rate() const {
  double r = 0.0;
  for (const auto& j : judges) r += j.share * j.release_rate();
  return r;
}

double DataDistribution::aggregate_mean_outcome() const {
  double m = 0.0;
  for (const auto& j : judges)
    for (std::size_t yi = 0; yi < grid.size(); ++yi)
      m += j.share * grid[yi] * (j.pmf[yi][0] + j.pmf[yi][1]);
  return m;
}

std::vector<std::size_t> DataDistribution::group_members(int group) const {
  std::vector<std::size_t> out;
  for (std::size_t z = 0; z < judges.size(); ++z)
    if (judges[z].group == group) out.push_back(z);
  return out;
}

std::size_t DataDistribution::most_lenient() const {
  std::size_t best = 0;
  double best_rate = judges[0].release_rate();
  for (std::size_t z = 1; z < judges.size(); ++z) {
    double r = judges[z].release_rate();
    if (r > best_rate + 1e-15 ||
        (std::abs(r - best_rate) <= 1e-15 && judges[z].id < judges[best].id)) {
      best = z;
      best_rate = r;
    }
  }
  return best;
}

bool ValidationReport::ok() const { return issues.empty() || !has_fatal(); }

bool ValidationReport::has_fatal() const {
  return std::any_of(issues.begin(), issues.end(),
                     [](const ValidationIssue& i) { return i.fatal; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& i : issues)
    os << (i.fatal ? "[fatal] " : "[repaired] ") << i.message << "\n";
  return os.str();
}

ValidationReport validate_instance(DataDistribution& data, double tol) {
  ValidationReport report;
  if (data.judges.empty()) {
    report.issues.push_back({true, "no judges"});
    return report;
  }
  if (data.grid.size() == 0) {
    report.issues.push_back({true, "empty outcome grid"});
    return report;
  }

  double share_sum = 0.0;
  for (auto& j : data.judges) {
    if (j.n_cases < 1)
      report.issues.push_back({true, "judge " + j.id + ": n_cases < 1"});
    if (j.share < -tol)
      report.issues.push_back({true, "judge " + j.id + ": negative share"});
    if (j.pmf.size() != data.grid.size()) {
      report.issues.push_back({true, "judge " + j.id + ": pmf size mismatch"});
      return report;
    }
    share_sum += j.share;

    double mass = 0.0;
    bool clipped = false;
    for (auto& cell : j.pmf) {
      for (double& p : cell) {
        if (p < -tol) {
          report.issues.push_back({true, "judge " + j.id + ": pmf entry " +
                                             std::to_string(p) + " below -tol"});
        } else if (p < 0.0) {
          p = 0.0;
          clipped = true;
        }
        mass += p;
      }
    }
    if (std::abs(mass - 1.0) > 1e-6) {
      report.issues.push_back(
          {true, "judge " + j.id + ": pmf mass " + std::to_string(mass)});
    } else if (clipped || std::abs(mass - 1.0) > 0.0) {
      if (mass > 0.0 && std::abs(mass - 1.0) > 1e-15) {
        for (auto& cell : j.pmf)
          for (double& p : cell) p /= mass;
        report.repaired = true;
      }
      if (clipped) {
        report.issues.push_back(
            {false, "judge " + j.id + ": clipped negative pmf entries"});
        report.repaired = true;
      }
    }
  }
  if (std::abs(share_sum - 1.0) > 1e-6) {
    report.issues.push_back(
        {true, "judge shares sum to " + std::to_string(share_sum)});
  } else if (std::abs(share_sum - 1.0) > 1e-15) {
    for (auto& j : data.judges) j.share /= share_sum;
    report.repaired = true;
  }
  return report;
}

DataDistribution pool_judges(const DataDistribution& data, long min_cases,
                             bool within_group) {
  DataDistribution out;
  out.grid = data.grid;

  // group tag -> pooled accumulator (tag forced to 0 when !within_group)
  std::map<int, JudgeCell> pooled;
  std::map<int, double> pooled_weight;

  for (const auto& j : data.judges) {
    if (j.n_cases >= min_cases) {
      out.judges.push_back(j);
      continue;
    }
    int tag = within_group ? j.group : 0;
    auto [it, inserted] = pooled.try_emplace(tag);
    JudgeCell& p = it->second;
    if (inserted) {
      p.id = within_group ? ("pooled_g" + std::to_string(tag)) : "pooled";
      p.group = j.group;
      p.n_cases = 0;
      p.share = 0.0;
      p.pmf.assign(data.grid.size(), {0.0, 0.0});
    }
    double w = static_cast<double>(j.n_cases);
    p.n_cases += j.n_cases;
    p.share += j.share;
    pooled_weight[tag] += w;
    for (std::size_t yi = 0; yi < data.grid.size(); ++yi) {
      p.pmf[yi][0] += w * j.pmf[yi][0];
      p.pmf[yi][1] += w * j.pmf[yi][1];
    }
  }
  for (auto& [tag, p] : pooled) {
    double w = pooled_weight[tag];
    for (auto& cell : p.pmf) {
      cell[0] /= w;
      cell[1] /= w;
    }
    out.judges.push_back(std::move(p));
  }
  return out;
}

DataDistribution discretize_outcome(const DataDistribution& data,
                                    const OutcomeGrid& target_grid,
                                    RoundDirection direction) {
  const auto& tv = target_grid.values();
  auto round_index = [&](double y) -> std::size_t {
    if (direction == RoundDirection::Up) {
      auto it = std::lower_bound(tv.begin(), tv.end(), y - 1e-12);
      if (it == tv.end())
        throw std::invalid_argument("discretize_outcome: outcome above grid span");
      return static_cast<std::size_t>(it - tv.begin());
    }
    auto it = std::upper_bound(tv.begin(), tv.end(), y + 1e-12);
    if (it == tv.begin())
      throw std::invalid_argument("discretize_outcome: outcome below grid span");
    return static_cast<std::size_t>(it - tv.begin()) - 1;
  };

  DataDistribution out;
  out.grid = target_grid;
  for (const auto& j : data.judges) {
    JudgeCell nj = j;
    nj.pmf.assign(target_grid.size(), {0.0, 0.0});
    for (std::size_t yi = 0; yi < data.grid.size(); ++yi) {
      std::size_t ti = round_index(data.grid[yi]);
      nj.pmf[ti][0] += j.pmf[yi][0];
      nj.pmf[ti][1] += j.pmf[yi][1];
    }
    out.judges.push_back(std::move(nj));
  }
  return out;
}

std::vector<double> PolicySpec::resolve_rates(const DataDistribution& data) const {
  const std::size_t K = data.num_judges();
  std::vector<double> rates(K);
  switch (kind) {
    case Kind::Universal:
      std::fill(rates.begin(), rates.end(), 1.0);
      break;
    case Kind::StatusQuo:
    case Kind::Reallocation:
      for (std::size_t z = 0; z < K; ++z) rates[z] = data.judges[z].release_rate();
      break;
    case Kind::Quota:
      for (std::size_t z = 0; z < K; ++z)
        rates[z] = std::max(data.judges[z].release_rate(), quota);
      break;
    case Kind::PerJudge:
      if (per_judge_rates.size() != K)
        throw std::invalid_argument("PolicySpec: per-judge rate count mismatch");
      rates = per_judge_rates;
      break;
  }
  for (double r : rates)
    if (r < -1e-12 || r > 1.0 + 1e-12)
      throw std::invalid_argument("PolicySpec: resolved rate outside [0,1]");
  return rates;
}

bool RestrictionSet::has_policy_monotonicity() const {
  return std::any_of(items.begin(), items.end(), [](const RestrictionSpec& s) {
    return std::holds_alternative<PolicyMonotonicity>(s);
  });
}

std::optional<double> RestrictionSet::known_y0() const {
  for (const auto& s : items)
    if (const auto* k = std::get_if<KnownY0>(&s)) return k->value;
  return std::nullopt;
}

}  // namespace policybounds
