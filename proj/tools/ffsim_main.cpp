// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner CLI. Exit codes: 0 success, 1 config error, 2 runtime
// error. FFSIM_LOG=quiet|info|debug controls verbosity (default info).

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ffsim/scenario.hpp"

namespace {

int log_level() {
  const char* env = std::getenv("FFSIM_LOG");
  if (env == nullptr) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir) {
  ffsim::ScenarioConfig config = ffsim::parse_config_file(config_path);
  if (seed) config.seed = *seed;
  if (out_dir) config.out_dir = *out_dir;

  const int verbosity = log_level();
  if (verbosity >= 1) {
    std::cerr << "ffsim: running scenario from " << config_path << " (seed " << config.seed
              << ") -> " << config.out_dir << "\n";
  }
  const std::vector<ffsim::ArmResult> results = ffsim::run_scenario(config);
  if (verbosity >= 1) {
    for (const ffsim::ArmResult& arm : results) {
      std::cerr << "ffsim: arm " << arm.arm << " accuracy "
                << ffsim::format_metric(arm.report.accuracy) << "\n";
      if (verbosity >= 2) {
        for (const ffsim::EvalPoint& e : arm.training.evals) {
          std::cerr << "ffsim:   round " << e.round << " accuracy " << e.report.accuracy.mean
                    << " loss " << e.mean_query_loss << "\n";
        }
      }
    }
  }
  return 0;
}

int cmd_gen_synthetic(const std::string& spec_path, const std::string& out_manifest) {
  const ffsim::ScenarioConfig config = ffsim::parse_config_file(spec_path);
  ffsim::SyntheticSpec spec;
  spec.num_classes = config.classes;
  spec.examples_per_class = config.per_class;
  spec.resolution = config.input_side;
  spec.noise_level = config.noise;
  spec.num_modalities = config.modalities;
  spec.seed = config.seed;

  const std::filesystem::path manifest(out_manifest);
  const std::filesystem::path images =
      manifest.parent_path() / (manifest.stem().string() + "_images");
  ffsim::write_synthetic_corpus(spec, images, manifest);
  if (log_level() >= 1) {
    std::cerr << "ffsim: wrote " << spec.num_classes * spec.examples_per_class
              << " images under " << images << " and manifest " << manifest << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated few-shot learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  CLI::App* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("--seed", seed, "Override the global seed");
  run->add_option("--out", out_dir, "Override the output directory");

  std::vector<std::string> reports;
  CLI::App* compare = app.add_subcommand("compare", "Tabulate final reports");
  compare->add_option("reports", reports, "final_report.json files")->required();

  std::string spec_path, out_manifest;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "Materialize a synthetic corpus");
  gen->add_option("spec", spec_path, "Config file with [data] keys")->required();
  gen->add_option("manifest", out_manifest, "Output manifest path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir);
    if (compare->parsed()) {
      std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
      std::cout << ffsim::compare_arms(paths);
      return 0;
    }
    if (gen->parsed()) return cmd_gen_synthetic(spec_path, out_manifest);
  } catch (const ffsim::ConfigError& e) {
    std::cerr << "ffsim: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ffsim: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
