// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Simulated federated learning: clients with private datasets, server-side
// FedAvg, synchronized communication rounds. Transport is in-process; clients
// expose nothing but parameters. Every client round draws from an rng stream
// derived as hash(global_seed, client_id, round_index), so results do not
// depend on execution schedule.

#ifndef FFSIM_FEDERATION_HPP
#define FFSIM_FEDERATION_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ffsim/episodes.hpp"
#include "ffsim/meta.hpp"
#include "ffsim/metrics.hpp"
#include "ffsim/nn.hpp"

namespace ffsim {

enum class Learner { kMaml, kMetaSgd, kMetaDpsgd };

struct ClientState {
  int client_id = 0;
  LabeledDataset dataset;
  MetaParams meta;
  MetaConfig local_config;
};

struct ServerState {
  MetaParams global_meta;
  int round_index = 0;
};

struct ClientRoundRecord {
  int client_id = 0;
  std::size_t dataset_size = 0;       // m_i, the FedAvg weight numerator
  std::vector<double> loss_trace;     // mean adapted query loss per meta-batch
};

struct RoundReport {
  int round_index = 0;
  std::vector<ClientRoundRecord> clients;
  std::uint64_t checksum = 0;  // of the aggregated parameters
  double sigma = 0.0;          // noise scale in force this round
};

struct TrainingPlan {
  ModelConfig model;
  MetaConfig meta;
  EpisodeSpec episode_spec;
  Learner learner = Learner::kMetaSgd;
  int rounds = 100;
  int local_batches = 10;  // meta-batches per communication round
  int eval_cadence = 10;   // rounds between held-out evals; 0 = final only
  int eval_tasks = 40;
  std::uint64_t seed = 0;
};

struct EvalPoint {
  int round = 0;
  MetricsReport report;
  double mean_query_loss = 0.0;
};

struct TrainingResult {
  std::vector<RoundReport> history;
  ServerState server;
  std::vector<EvalPoint> evals;
};

// Per-coordinate weighted mean of (theta, alpha) pairs with weights w_i /
// sum(w), summed in ascending client-id (input) order.
MetaParams fedavg(const std::vector<MetaParams>& params_list,
                  const std::vector<double>& weights);

// One client's work for a round: adopt the broadcast parameters, run
// local_batches meta-batches on episodes sampled from the private dataset.
// Returns new parameters and the per-batch loss trace; the dataset is never
// mutated.
std::pair<MetaParams, std::vector<double>> local_round(
    const ClientState& client, const MetaParams& global_meta, const MlpModel& model,
    const EpisodeSpec& episode_spec, int local_batches, Learner learner, Rng& rng);

// One synchronized communication round: every client trains from the current
// global parameters, the server aggregates by dataset size, all clients
// receive the aggregate.
RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const MlpModel& model, const TrainingPlan& plan);

// Full training loop: initialization, plan.rounds communication rounds, and
// held-out evaluation at the configured cadence (always after the final
// round). Centralized training is the M=1 special case.
TrainingResult run_training(const TrainingPlan& plan,
                            const std::vector<LabeledDataset>& client_datasets,
                            const LabeledDataset& eval_dataset);

// Held-out evaluation: eval_tasks episodes from the dataset, adapted
// prediction, per-task indicators with episode class 1 as positive.
EvalPoint evaluate_on(const MetaParams& meta, const MlpModel& model,
                      const LabeledDataset& eval_dataset, const TrainingPlan& plan,
                      int round);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t params_checksum(const MetaParams& meta);
std::uint64_t model_config_hash(const ModelConfig& config);

// Checkpoint file: "FFCK" magic, format version, model config hash, round
// index, parameter count, then theta and alpha as raw little-endian doubles.
// Written atomically (temp file + rename).
struct Checkpoint {
  MetaParams meta;
  std::uint64_t config_hash = 0;
  std::uint32_t round_index = 0;
};

void save_checkpoint(const std::filesystem::path& path, const MetaParams& meta,
                     std::uint64_t config_hash, std::uint32_t round_index);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ffsim

#endif  // FFSIM_FEDERATION_HPP
