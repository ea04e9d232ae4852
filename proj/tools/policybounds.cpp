#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "policybounds/runner.hpp"

namespace {

int run_main(int argc, char** argv) {
  namespace run = policybounds::runner;

  CLI::App app{
      "policybounds: identified sets and confidence intervals for "
      "counterfactual assignment policies in multi-judge designs"};

  std::string config_path;
  std::string dataset_override;
  std::string format_override;
  std::string out_path;
  std::uint64_t seed_override = 0;
  bool have_seed = false;

  app.add_option("--config", config_path, "run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--dataset", dataset_override,
                 "dataset CSV, overrides the config");
  app.add_option("--format", format_override,
                 "output format: json, csv or human");
  auto* seed_opt = app.add_option("--seed", seed_override,
                                  "simulation seed, overrides the config");
  app.add_option("--out", out_path, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return run::kExitInputError;
  }
  have_seed = seed_opt->count() > 0;

  if (const char* threads = std::getenv("POLICYBOUNDS_THREADS")) {
    int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  run::RunConfig config;
  try {
    std::ifstream in(config_path);
    nlohmann::json doc = nlohmann::json::parse(in);
    config = run::RunConfig::from_json(doc);
    if (!dataset_override.empty()) config.dataset_path = dataset_override;
    if (have_seed) config.inference.seed = seed_override;
    if (!format_override.empty())
      config.output_format = policybounds::report::parse_format(format_override);
  } catch (const std::exception& e) {
    std::cerr << "policybounds: " << e.what() << "\n";
    return run::kExitInputError;
  }

  auto result = run::run(config);
  std::string rendered = run::render(result, config.output_format);

  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "policybounds: cannot write '" << out_path << "'\n";
      return run::kExitInputError;
    }
    out << rendered;
  }
  if (result.report.contains("error"))
    std::cerr << "policybounds: "
              << result.report["error"].get<std::string>() << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) { return run_main(argc, argv); }
