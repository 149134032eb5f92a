// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Config-driven experiment runner: the paper-style scenario matrix at desk
// scale. Config files are flat `key = value` text with square-bracket
// sections and '#' comments; omitted keys fall back to the experiment
// defaults (epsilon 1, delta 1e-3, beta 0.05, 32 tasks per batch, 100
// rounds, 2-way 5-shot).

#ifndef FFSIM_SCENARIO_HPP
#define FFSIM_SCENARIO_HPP

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "ffsim/data_io.hpp"
#include "ffsim/federation.hpp"
#include "ffsim/privacy.hpp"

namespace ffsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind {
  kCentralized,
  kFederated,
  kPrivacySweep,
  kMultiModal,
  kMultiDisease,
  kUnbalanced,
};

enum class DataSource { kSynthetic, kManifest };

struct ScenarioConfig {
  // [scenario]
  ScenarioKind kind = ScenarioKind::kCentralized;
  Learner learner = Learner::kMetaSgd;
  int rounds = 100;
  int eval_cadence = 10;
  int eval_tasks = 40;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> sweep_epsilons = {"1", "2", "4", "8", "16", "none"};

  // [model]
  int input_side = 16;
  std::vector<int> hidden_dims = {256, 128, 64, 64};
  bool batchnorm = true;

  // [episode]
  EpisodeSpec episode;

  // [meta]
  double beta = 0.05;
  int inner_steps = 1;
  int tasks_per_batch = 32;
  double clip_bound = std::numeric_limits<double>::infinity();
  double maml_inner_rate = 0.01;
  NoiseConvention noise_convention = NoiseConvention::kStandardDpsgd;

  // [privacy]
  double epsilon = 1.0;
  double delta = 1e-3;
  double c2 = 1.0;
  double sampling_probability = 0.0;  // 0 = tasks_per_batch / tasks_per_epoch
  int tasks_per_epoch = 800;
  int steps = 0;  // T; 0 = rounds * local_batches
  double log_base = 0.0;  // 0 = natural log

  // [federation]
  int num_clients = 1;
  std::vector<double> ratios;  // empty = equal shares
  int local_batches = 10;

  // [data]
  DataSource source = DataSource::kSynthetic;
  std::string manifest;
  int classes = 2;
  int per_class = 40;
  double noise = 0.3;
  int modalities = 1;
  double train_ratio = 0.8;
  NormalizationMode normalization = NormalizationMode::kPerImage;

  ModelConfig model_config() const;
  // Noise scale from the calibration inputs, resolving the derived defaults
  // for s and T.
  double resolved_sigma(double eps) const;
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_file(const std::filesystem::path& path);
std::string serialize_config(const ScenarioConfig& config);

// Per-arm outcome of a scenario run, the unit serialized to
// final_report.json.
struct ArmResult {
  std::string arm;
  double epsilon = 0.0;  // 0 when the arm runs without DP
  double sigma = 0.0;
  MetricsReport report;
  TrainingResult training;
};

// Executes every arm of the scenario and writes rounds.csv,
// final_report.json, per-arm checkpoints and the resolved config into
// config.out_dir. Idempotent given the seed.
std::vector<ArmResult> run_scenario(const ScenarioConfig& config);

// Rows sorted by arm name, metrics as "mean±halfwidth" with 3 decimals.
std::string compare_arms(const std::vector<std::filesystem::path>& report_paths);

// Materializes a synthetic corpus as PGM files plus a manifest.
void write_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& out_dir,
                            const std::filesystem::path& manifest_path);

}  // namespace ffsim

#endif  // FFSIM_SCENARIO_HPP
