#include "policybounds/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "policybounds/calibrate.hpp"
#include "policybounds/effects.hpp"
#include "policybounds/identify.hpp"
#include "policybounds/inference.hpp"
#include "policybounds/oracle.hpp"

namespace policybounds::runner {

namespace {

using nlohmann::json;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fnv1a_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::uint64_t h = 14695981039346656037ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

PolicySpec policy_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "universal") return PolicySpec::universal();
  if (kind == "status_quo") return PolicySpec::status_quo();
  if (kind == "quota") return PolicySpec::with_quota(j.at("q").get<double>());
  if (kind == "per_judge")
    return PolicySpec::per_judge(j.at("rates").get<std::vector<double>>());
  if (kind == "reallocation")
    return PolicySpec::reallocation(j.value("target_group", 1));
  throw std::invalid_argument("config: unknown policy kind '" + kind + "'");
}

RestrictionSet restrictions_from_json(const json& arr) {
  RestrictionSet rs;
  for (const auto& item : arr) {
    std::string type = item.at("type").get<std::string>();
    if (type == "policy_monotonicity") {
      rs.add(PolicyMonotonicity{});
    } else if (type == "known_y0") {
      rs.add(KnownY0{item.value("value", 0.0)});
    } else if (type == "known_y1") {
      rs.add(KnownY1{item.value("value", 0.0)});
    } else if (type == "mtr") {
      rs.add(MonotoneTreatmentResponse{});
    } else if (type == "pc_bound") {
      PCBound pc;
      if (item.contains("judges"))
        pc.judges = item.at("judges").get<std::vector<std::size_t>>();
      rs.add(pc);
    } else if (type == "te_cap") {
      rs.add(TreatmentEffectCap{item.at("cap").get<double>()});
    } else if (type == "pairwise_disagreement") {
      PairwiseDisagreement pd;
      pd.z = item.at("z").get<std::size_t>();
      pd.z_prime = item.at("z_prime").get<std::size_t>();
      pd.a = item.value("a", 1);
      pd.a_prime = item.value("a_prime", 1);
      pd.delta = item.at("delta").get<double>();
      rs.add(pd);
    } else if (type == "average_disagreement") {
      AverageDisagreement ad;
      ad.dp_bar = item.at("dp_bar").get<double>();
      ad.caseload_weighted = item.value("caseload_weighted", true);
      rs.add(ad);
    } else if (type == "outcome_disparity") {
      rs.add(OutcomeDisparity{item.at("od_bar").get<double>()});
    } else {
      throw std::invalid_argument("config: unknown restriction type '" + type +
                                  "'");
    }
  }
  return rs;
}

json interval_result(const std::string& name, const std::string& kind,
                     double lower, double upper, const std::string& status) {
  json r;
  r["name"] = name;
  r["kind"] = kind;
  r["lower"] = lower;
  r["upper"] = upper;
  r["status"] = status;
  return r;
}

json point_result(const std::string& name, double value) {
  json r;
  r["name"] = name;
  r["kind"] = "point";
  r["value"] = value;
  r["lower"] = value;
  r["upper"] = value;
  r["status"] = "optimal";
  return r;
}

std::string bounds_status(const BoundsResult& b) {
  if (b.both_optimal()) return "optimal";
  if (b.empty()) return "model_rejected";
  return lp::status_name(b.failed() ? lp::SolveStatus::NumericalFailure
                                    : lp::SolveStatus::Unbounded);
}

int bounds_exit(const BoundsResult& b) {
  if (b.both_optimal()) return kExitOk;
  if (b.empty()) return kExitModelRejected;
  return kExitNumericalFailure;
}

std::uint64_t required_seed(const InferenceSettings& s) {
  if (!s.seed)
    throw std::invalid_argument(
        "config: inference requested without a seed; a seed is mandatory");
  return *s.seed;
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig cfg;
  int version = doc.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion)
    throw std::invalid_argument("config: unsupported schema_version " +
                                std::to_string(version));

  static const std::set<std::string> kSubcommands = {
      "bounds",       "pc-effect", "universal-release", "quota",
      "calibrate-dp", "infer",     "oracle-check"};
  cfg.subcommand = doc.at("subcommand").get<std::string>();
  if (!kSubcommands.count(cfg.subcommand))
    throw std::invalid_argument("config: unknown subcommand '" +
                                cfg.subcommand + "'");

  cfg.dataset_path = doc.value("dataset", "");
  if (doc.contains("dataset_format")) {
    std::string f = doc.at("dataset_format").get<std::string>();
    if (f == "A")
      cfg.dataset_opts.format = dataset::Format::A;
    else if (f == "B")
      cfg.dataset_opts.format = dataset::Format::B;
    else if (f == "auto")
      cfg.dataset_opts.format = dataset::Format::Auto;
    else
      throw std::invalid_argument("config: unknown dataset_format '" + f + "'");
  }
  cfg.dataset_opts.assume_known_y0 = doc.value("known_y0", false);
  cfg.pool_min_cases = doc.value("pool_min_cases", 0L);

  if (doc.contains("policy")) cfg.policy = policy_from_json(doc.at("policy"));
  if (doc.contains("restrictions"))
    cfg.restrictions = restrictions_from_json(doc.at("restrictions"));

  if (doc.contains("inference")) {
    const auto& inf = doc.at("inference");
    cfg.inference.enabled = inf.value("enabled", true);
    cfg.inference.level_cells = inf.value("level_cells", 0.99);
    cfg.inference.level_agg = inf.value("level_agg", 0.96);
    cfg.inference.level_universal = inf.value("level_universal", 0.95);
    cfg.inference.level_first = inf.value("level_first", 0.955);
    cfg.inference.level_second = inf.value("level_second", 0.995);
    cfg.inference.draws = inf.value("draws", 20000);
    cfg.inference.grid_n = inf.value("grid_n", 100);
    cfg.inference.pc_effect = inf.value("pc_effect", false);
    if (inf.contains("seed"))
      cfg.inference.seed = inf.at("seed").get<std::uint64_t>();
  }

  if (doc.contains("calibrate")) {
    const auto& cal = doc.at("calibrate");
    if (cal.contains("rho")) cfg.calibrate.rho = cal.at("rho").get<double>();
    if (cal.contains("dp_bar"))
      cfg.calibrate.dp_bar = cal.at("dp_bar").get<double>();
    if (cal.contains("od_bar"))
      cfg.calibrate.od_bar = cal.at("od_bar").get<double>();
    if (cal.contains("delta_te"))
      cfg.calibrate.delta_te = cal.at("delta_te").get<double>();
    cfg.calibrate.quota = cal.value("quota", 0.5);
    cfg.calibrate.pair_stats_path = cal.value("pair_stats", "");
    cfg.calibrate.divide_by_quota = cal.value("divide_by_quota", false);
  }

  cfg.output_format = report::parse_format(doc.value("output_format", "json"));
  cfg.oracle_tol = doc.value("oracle_tol", 1e-6);
  return cfg;
}

RunResult run(const RunConfig& config) {
  RunResult out;
  json& doc = out.report;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["version"] = kVersion;
  doc["subcommand"] = config.subcommand;
  doc["results"] = json::array();
  doc["warnings"] = json::array();

  const double t0 = now_seconds();
  auto finish = [&](int code) {
    doc["timings"]["total_seconds"] = now_seconds() - t0;
    out.exit_code = code;
    return out;
  };
  auto warn_all = [&](const std::vector<std::string>& ws) {
    for (const auto& w : ws) doc["warnings"].push_back(w);
  };

  try {
    DataDistribution data;
    bool have_data = !config.dataset_path.empty();
    if (have_data) {
      data = dataset::parse_dataset(config.dataset_path, config.dataset_opts);
      if (config.pool_min_cases > 0)
        data = pool_judges(data, config.pool_min_cases);
      json inputs;
      inputs["dataset"] = config.dataset_path;
      inputs["digest"] = fnv1a_digest(config.dataset_path);
      inputs["judges"] = data.num_judges();
      inputs["outcome_points"] = data.grid.size();
      doc["inputs"] = inputs;
    }

    const std::string& cmd = config.subcommand;
    if (cmd != "calibrate-dp" && !have_data)
      throw std::invalid_argument("config: subcommand '" + cmd +
                                  "' needs a dataset");

    if (cmd == "bounds" || cmd == "quota" || cmd == "pc-effect") {
      PolicySpec policy = config.policy;
      if (cmd == "quota" && policy.kind != PolicySpec::Kind::Quota)
        throw std::invalid_argument(
            "config: the quota subcommand needs a quota policy");

      if (policy.kind == PolicySpec::Kind::Reallocation) {
        double eff = reallocation_effect(data, policy.reallocation_group);
        doc["results"].push_back(point_result("reallocation_effect", eff));
        return finish(kExitOk);
      }

      auto set = identified_set(data, policy, config.restrictions);
      warn_all(set.warnings);
      doc["results"].push_back(interval_result("theta", "bounds", set.lower,
                                               set.upper, bounds_status(set)));
      if (!set.both_optimal()) return finish(bounds_exit(set));

      if (cmd == "quota" || cmd == "pc-effect") {
        auto pc = pc_effect_fractional(data, policy, config.restrictions);
        warn_all(pc.warnings);
        if (pc.defined) {
          std::string st = pc.both_optimal() ? "optimal" : "undefined";
          doc["results"].push_back(
              interval_result("pc_effect", "bounds", pc.lower, pc.upper, st));
          doc["results"].push_back(
              point_result("complier_mass", pc.complier_mass));
        }
      }
      if (cmd == "quota") {
        try {
          doc["results"].push_back(
              point_result("tsls_benchmark", tsls_benchmark(data, policy)));
        } catch (const std::invalid_argument& e) {
          doc["warnings"].push_back(e.what());
        }
        if (!data.group_members(1).empty())
          doc["results"].push_back(
              point_result("reallocation_effect", reallocation_effect(data, 1)));
      }

      if (config.inference.enabled) {
        inference::BandConfig bc;
        bc.level_cells = config.inference.level_cells;
        bc.level_agg = config.inference.level_agg;
        bc.draws = config.inference.draws;
        bc.seed = required_seed(config.inference);
        bc.pc_effect =
            config.inference.pc_effect || cmd == "pc-effect";
        auto ci =
            inference::ci_projection(data, policy, config.restrictions, bc);
        warn_all(ci.warnings);
        json r = interval_result(bc.pc_effect ? "pc_effect_ci" : "theta_ci",
                                 "ci", ci.lower, ci.upper,
                                 ci.empty ? "model_rejected" : "optimal");
        r["level"] = ci.level;
        r["method"] = ci.method;
        r["seed"] = ci.seed;
        r["draws"] = ci.draws;
        doc["results"].push_back(r);
        if (ci.empty) return finish(kExitModelRejected);
      }
      return finish(kExitOk);
    }

    if (cmd == "universal-release") {
      bool known_y0 =
          config.restrictions.known_y0().has_value() &&
          *config.restrictions.known_y0() == 0.0;
      BoundsResult set;
      if (known_y0 && data.grid.size() == 2) {
        set = intersection_bounds_universal(data);
      } else {
        set = identified_set(data, PolicySpec::universal(),
                             config.restrictions);
      }
      warn_all(set.warnings);
      doc["results"].push_back(interval_result("theta", "bounds", set.lower,
                                               set.upper, bounds_status(set)));
      if (config.inference.enabled) {
        auto ci = inference::ci_universal_intersection(
            data, config.inference.level_universal, config.inference.draws,
            required_seed(config.inference));
        json r = interval_result("theta_ci", "ci", ci.lower, ci.upper,
                                 ci.empty ? "model_rejected" : "optimal");
        r["level"] = ci.level;
        r["method"] = ci.method;
        r["seed"] = ci.seed;
        r["draws"] = ci.draws;
        doc["results"].push_back(r);
        if (!set.both_optimal() || ci.empty)
          return finish(set.both_optimal() && ci.empty ? kExitModelRejected
                                                       : bounds_exit(set));
      }
      return finish(bounds_exit(set));
    }

    if (cmd == "infer") {
      inference::BandConfig bc;
      bc.level_cells = config.inference.level_cells;
      bc.level_agg = config.inference.level_agg;
      bc.draws = config.inference.draws;
      bc.seed = required_seed(config.inference);
      bc.pc_effect = config.inference.pc_effect;
      auto ci = inference::ci_projection(data, config.policy,
                                         config.restrictions, bc);
      warn_all(ci.warnings);
      json r = interval_result(bc.pc_effect ? "pc_effect_ci" : "theta_ci",
                               "ci", ci.lower, ci.upper,
                               ci.empty ? "model_rejected" : "optimal");
      r["level"] = ci.level;
      r["method"] = ci.method;
      r["seed"] = ci.seed;
      r["draws"] = ci.draws;
      doc["results"].push_back(r);
      return finish(ci.empty ? kExitModelRejected : kExitOk);
    }

    if (cmd == "calibrate-dp") {
      const auto& cal = config.calibrate;
      std::optional<calibrate::SignalModel> model;
      if (have_data) {
        calibrate::SignalModel m;
        m.quota = cal.quota;
        m.divide_by_quota = cal.divide_by_quota;
        for (const auto& j : data.judges) {
          m.rates.push_back(j.release_rate());
          m.group.push_back(j.group);
          m.caseloads.push_back(static_cast<double>(j.n_cases));
        }
        model = m;
      }

      std::optional<double> rho = cal.rho, dp = cal.dp_bar;
      if (!cal.pair_stats_path.empty()) {
        auto pairs = calibrate::parse_pair_stats_csv(cal.pair_stats_path);
        std::vector<std::string> ws;
        double panel_rho = calibrate::rho_from_panel_votes(pairs, &ws);
        warn_all(ws);
        doc["results"].push_back(point_result("rho_from_panel", panel_rho));
        if (!rho) rho = panel_rho;
      }
      if (!dp && cal.od_bar && cal.delta_te) {
        dp = calibrate::dp_from_od(*cal.delta_te, *cal.od_bar, cal.quota);
        doc["results"].push_back(point_result("dp_from_od", *dp));
      }
      if (rho && model) {
        model->rho = *rho;
        double implied = calibrate::dp_from_rho(*model);
        doc["results"].push_back(point_result("dp_from_rho", implied));
        if (!dp) dp = implied;
      } else if (dp && model) {
        double implied_rho = calibrate::rho_from_dp(*model, *dp);
        doc["results"].push_back(point_result("rho_from_dp", implied_rho));
      }
      if (dp && cal.delta_te) {
        doc["results"].push_back(point_result(
            "od_from_dp", calibrate::od_from_dp(*cal.delta_te, *dp,
                                                cal.quota)));
      }
      if (doc["results"].empty())
        throw std::invalid_argument(
            "config: calibrate-dp needs rho, dp_bar, od_bar + delta_te, or "
            "pair_stats");
      return finish(kExitOk);
    }

    if (cmd == "oracle-check") {
      if (data.num_judges() > 8)
        throw std::invalid_argument(
            "config: oracle-check supports at most 8 judges");
      auto direct = identified_set(data, config.policy, config.restrictions);
      auto space = oracle::enumerate_types(data.num_judges(), {});
      auto ref = oracle::solve_type_lp(data, config.policy,
                                       config.restrictions, space);
      doc["results"].push_back(interval_result("theta", "bounds", direct.lower,
                                               direct.upper,
                                               bounds_status(direct)));
      doc["results"].push_back(interval_result(
          "theta_oracle", "bounds", ref.lower, ref.upper, bounds_status(ref)));
      bool both = direct.both_optimal() && ref.both_optimal();
      bool both_empty = direct.empty() && ref.empty();
      double diff = both ? std::max(std::abs(direct.lower - ref.lower),
                                    std::abs(direct.upper - ref.upper))
                         : 0.0;
      bool match = both_empty || (both && diff <= config.oracle_tol);
      json r;
      r["name"] = "oracle_match";
      r["kind"] = "check";
      r["status"] = match ? "optimal" : "numerical_failure";
      r["value"] = diff;
      std::ostringstream note;
      if (match && both)
        note << "match within " << config.oracle_tol;
      else if (both_empty)
        note << "both reject the model";
      else
        note << "MISMATCH: max endpoint difference " << diff;
      r["note"] = note.str();
      doc["results"].push_back(r);
      return finish(match ? kExitOk : kExitNumericalFailure);
    }

    throw std::invalid_argument("config: unknown subcommand '" + cmd + "'");
  } catch (const dataset::DatasetError& e) {
    doc["error"] = e.what();
    return finish(kExitInputError);
  } catch (const std::invalid_argument& e) {
    doc["error"] = e.what();
    return finish(kExitInputError);
  } catch (const std::exception& e) {
    doc["error"] = e.what();
    return finish(kExitNumericalFailure);
  }
}

std::string render(const RunResult& result, report::OutputFormat format) {
  if (format == report::OutputFormat::Json) {
    nlohmann::json stable = result.report;
    stable.erase("timings");
    return report::emit_json(stable);
  }
  return report::emit(result.report, format);
}

}  // namespace policybounds::runner
