#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "policybounds/dataset.hpp"
#include "policybounds/report.hpp"
#include "policybounds/runner.hpp"

namespace fs = std::filesystem;
namespace ds = policybounds::dataset;
namespace run = policybounds::runner;
namespace rep = policybounds::report;
using policybounds::DataDistribution;

namespace {

fs::path fixture_dir() { return fs::path(PB_FIXTURE_DIR); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_temp(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << body;
  return p;
}

run::RunConfig config_from_string(const std::string& body) {
  return run::RunConfig::from_json(nlohmann::json::parse(body));
}

const char* kSmallA =
    "judge_id,group,n_cases,share,release_rate,mean_y_given_released,"
    "mean_y_given_detained\n"
    "a,0,500,0.5,0.5,0.2,\n"
    "b,1,500,0.5,0.7,0.3,\n";

}  // namespace

TEST_CASE("format A expansion matches the hand computation") {
  auto p = write_temp("pb_cli_a.csv", kSmallA);
  ds::ParseOptions opts;
  opts.assume_known_y0 = true;
  auto data = ds::parse_dataset(p.string(), opts);

  REQUIRE(data.num_judges() == 2);
  REQUIRE(data.grid.size() == 2);
  const auto& j = data.judges[0];
  // rate 0.5, E[Y|D=1] = 0.2, Y(0) known zero
  CHECK(j.prob(1, 1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(j.prob(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(j.prob(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j.prob(1, 0) == 0.0);
  CHECK(j.release_rate() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("format A refuses missing detained means without the flag") {
  auto p = write_temp("pb_cli_a_noflag.csv", kSmallA);
  try {
    ds::parse_dataset(p.string(), {});
    FAIL("expected DatasetError");
  } catch (const ds::DatasetError& e) {
    CHECK(std::string(e.what()).find("mean_y_given_detained") !=
          std::string::npos);
  }
}

TEST_CASE("format A rejects nonzero detained mean under the known-Y0 flag") {
  std::string body(kSmallA);
  body.replace(body.find("0.5,0.5,0.2,\n"), 13, "0.5,0.5,0.2,0.1\n");
  auto p = write_temp("pb_cli_a_contra.csv", body);
  ds::ParseOptions opts;
  opts.assume_known_y0 = true;
  CHECK_THROWS_AS(ds::parse_dataset(p.string(), opts), ds::DatasetError);
}

TEST_CASE("format B emit and parse round trip bit for bit") {
  auto p = write_temp("pb_cli_rt_a.csv", kSmallA);
  ds::ParseOptions opts;
  opts.assume_known_y0 = true;
  auto data = ds::parse_dataset(p.string(), opts);

  std::string emitted = ds::emit_dataset_b(data);
  auto pb = write_temp("pb_cli_rt_b.csv", emitted);
  auto back = ds::parse_dataset(pb.string(), {});
  CHECK(ds::emit_dataset_b(back) == emitted);

  REQUIRE(back.num_judges() == data.num_judges());
  for (std::size_t z = 0; z < data.num_judges(); ++z)
    for (std::size_t yi = 0; yi < data.grid.size(); ++yi)
      for (int d = 0; d < 2; ++d)
        CHECK(back.judges[z].prob(yi, d) == data.judges[z].prob(yi, d));
}

TEST_CASE("missing columns are reported by name") {
  auto p = write_temp("pb_cli_cols.csv",
                      "judge_id,group,n_cases,y,d,prob\n"
                      "a,0,10,0,0,0.5\n");
  try {
    ds::parse_dataset(p.string(), {});
    FAIL("expected DatasetError");
  } catch (const ds::DatasetError& e) {
    CHECK(std::string(e.what()).find("'share'") != std::string::npos);
  }
}

TEST_CASE("header detection separates the two schemas") {
  CHECK(ds::detect_format("judge_id,group,n_cases,share,release_rate,"
                          "mean_y_given_released,mean_y_given_detained") ==
        ds::Format::A);
  CHECK(ds::detect_format("judge_id,group,n_cases,share,y,d,prob") ==
        ds::Format::B);
  CHECK_THROWS_AS(ds::detect_format("a,b,c"), ds::DatasetError);
}

TEST_CASE("status quo bounds collapse to the observed mean outcome") {
  auto p = write_temp("pb_cli_sq.csv", kSmallA);
  auto cfg = config_from_string(R"({
    "subcommand": "bounds",
    "dataset": ")" + p.string() + R"(",
    "known_y0": true,
    "policy": {"kind": "status_quo"},
    "restrictions": [{"type": "known_y0"}, {"type": "policy_monotonicity"}]
  })");
  auto res = run::run(cfg);
  REQUIRE(res.exit_code == run::kExitOk);

  ds::ParseOptions opts;
  opts.assume_known_y0 = true;
  auto data = ds::parse_dataset(p.string(), opts);
  double ey = data.aggregate_mean_outcome();
  const auto& theta = res.report["results"][0];
  CHECK(theta["lower"].get<double>() == doctest::Approx(ey).epsilon(1e-9));
  CHECK(theta["upper"].get<double>() == doctest::Approx(ey).epsilon(1e-9));
}

TEST_CASE("quota run reproduces the golden report byte for byte") {
  auto cwd = fs::current_path();
  fs::current_path(fixture_dir());
  auto cfg = config_from_string(read_file("quota_config.json"));
  auto res = run::run(cfg);
  std::string rendered = run::render(res, rep::OutputFormat::Json);
  std::string golden = read_file("quota_golden.json");
  fs::current_path(cwd);

  CHECK(res.exit_code == run::kExitOk);
  CHECK(rendered == golden);
}

TEST_CASE("canonical JSON emission is a fixed point") {
  std::string golden = read_file(fixture_dir() / "quota_golden.json");
  auto doc = nlohmann::json::parse(golden);
  CHECK(rep::emit_json(doc) == golden);
}

TEST_CASE("identical config and seed give byte identical reports") {
  auto p = write_temp("pb_cli_det.csv", kSmallA);
  std::string body = R"({
    "subcommand": "infer",
    "dataset": ")" + p.string() + R"(",
    "known_y0": true,
    "policy": {"kind": "universal"},
    "restrictions": [{"type": "known_y0"}],
    "inference": {"seed": 99, "draws": 2000}
  })";
  auto r1 = run::run(config_from_string(body));
  auto r2 = run::run(config_from_string(body));
  CHECK(run::render(r1, rep::OutputFormat::Json) ==
        run::render(r2, rep::OutputFormat::Json));
  CHECK(r1.exit_code == run::kExitOk);
}

TEST_CASE("oracle check agrees with the direct bounds") {
  auto p = write_temp("pb_cli_oc.csv", kSmallA);
  auto cfg = config_from_string(R"({
    "subcommand": "oracle-check",
    "dataset": ")" + p.string() + R"(",
    "known_y0": true,
    "policy": {"kind": "quota", "q": 0.8},
    "restrictions": [{"type": "known_y0"}, {"type": "policy_monotonicity"}]
  })");
  auto res = run::run(cfg);
  CHECK(res.exit_code == run::kExitOk);
  bool found = false;
  for (const auto& r : res.report["results"]) {
    if (r["name"] == "oracle_match") {
      found = true;
      CHECK(r["note"].get<std::string>().find("match within") !=
            std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("CSV report uses the documented column order") {
  auto p = write_temp("pb_cli_csv.csv", kSmallA);
  auto cfg = config_from_string(R"({
    "subcommand": "bounds",
    "dataset": ")" + p.string() + R"(",
    "known_y0": true,
    "policy": {"kind": "universal"},
    "restrictions": [{"type": "known_y0"}]
  })");
  auto res = run::run(cfg);
  std::string csv = run::render(res, rep::OutputFormat::Csv);
  CHECK(csv.rfind("name,kind,lower,upper,status,level,method\n", 0) == 0);
  CHECK(csv.find("\ntheta,bounds,") != std::string::npos);
}

TEST_CASE("contradictory restrictions exit with the rejection code") {
  auto p = write_temp("pb_cli_rej.csv", kSmallA);
  auto cfg = config_from_string(R"({
    "subcommand": "bounds",
    "dataset": ")" + p.string() + R"(",
    "known_y0": true,
    "policy": {"kind": "universal"},
    "restrictions": [{"type": "known_y1", "value": 0.0}]
  })");
  auto res = run::run(cfg);
  CHECK(res.exit_code == run::kExitModelRejected);
  CHECK(res.report["results"][0]["status"] == "model_rejected");
}

TEST_CASE("config validation failures map to the input error code") {
  SUBCASE("unknown subcommand") {
    CHECK_THROWS_AS(config_from_string(R"({"subcommand": "frobnicate"})"),
                    std::invalid_argument);
  }
  SUBCASE("wrong schema version") {
    CHECK_THROWS_AS(
        config_from_string(R"({"schema_version": 7, "subcommand": "bounds"})"),
        std::invalid_argument);
  }
  SUBCASE("inference without a seed") {
    auto p = write_temp("pb_cli_seed.csv", kSmallA);
    auto cfg = config_from_string(R"({
      "subcommand": "infer",
      "dataset": ")" + p.string() + R"(",
      "known_y0": true,
      "policy": {"kind": "universal"},
      "restrictions": [{"type": "known_y0"}],
      "inference": {"draws": 2000}
    })");
    auto res = run::run(cfg);
    CHECK(res.exit_code == run::kExitInputError);
    CHECK(res.report.contains("error"));
  }
  SUBCASE("unreadable dataset") {
    auto cfg = config_from_string(R"({
      "subcommand": "bounds",
      "dataset": "/nonexistent/nowhere.csv",
      "policy": {"kind": "universal"}
    })");
    auto res = run::run(cfg);
    CHECK(res.exit_code == run::kExitInputError);
  }
}
