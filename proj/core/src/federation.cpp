// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/federation.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ffsim {

namespace {

constexpr char kCheckpointMagic[4] = {'F', 'F', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Fixed tags for deriving independent rng sub-streams from the global seed.
enum StreamTag : std::uint64_t {
  kInitStream = 1,
  kClientStream = 2,
  kEvalStream = 3,
};

}  // namespace

MetaParams fedavg(const std::vector<MetaParams>& params_list,
                  const std::vector<double>& weights) {
  if (params_list.empty()) throw std::invalid_argument("fedavg: no clients");
  if (params_list.size() != weights.size()) {
    throw std::invalid_argument("fedavg: params/weights length mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("fedavg: weights must be positive");
    total += w;
  }
  const std::size_t n = params_list[0].theta.size();
  for (const MetaParams& p : params_list) {
    if (p.theta.size() != n || p.alpha.size() != n) {
      throw std::invalid_argument("fedavg: parameter length mismatch across clients");
    }
  }
  if (params_list.size() == 1) return params_list[0];

  MetaParams out;
  out.theta.assign(n, 0.0);
  out.alpha.assign(n, 0.0);
  for (std::size_t c = 0; c < params_list.size(); ++c) {
    const double w = weights[c] / total;
    for (std::size_t i = 0; i < n; ++i) {
      out.theta[i] += w * params_list[c].theta[i];
      out.alpha[i] += w * params_list[c].alpha[i];
    }
  }
  return out;
}

std::pair<MetaParams, std::vector<double>> local_round(
    const ClientState& client, const MetaParams& global_meta, const MlpModel& model,
    const EpisodeSpec& episode_spec, int local_batches, Learner learner, Rng& rng) {
  MetaParams meta = global_meta;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(local_batches));
  const MetaConfig& cfg = client.local_config;

  for (int b = 0; b < local_batches; ++b) {
    std::vector<Episode> episodes;
    episodes.reserve(static_cast<std::size_t>(cfg.tasks_per_batch));
    for (int t = 0; t < cfg.tasks_per_batch; ++t) {
      episodes.push_back(sample_episode(client.dataset, episode_spec, rng));
    }
    double batch_loss = 0.0;
    for (const Episode& ep : episodes) {
      batch_loss += model.loss(inner_adapt(meta, model, ep.support, cfg), ep.query);
    }
    trace.push_back(batch_loss / static_cast<double>(episodes.size()));

    switch (learner) {
      case Learner::kMaml:
        meta = maml_step(meta, model, episodes, cfg);
        break;
      case Learner::kMetaSgd:
        meta = metasgd_step(meta, model, episodes, cfg);
        break;
      case Learner::kMetaDpsgd:
        meta = metadpsgd_step(meta, model, episodes, cfg, rng);
        break;
    }
  }
  return {std::move(meta), std::move(trace)};
}

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const MlpModel& model, const TrainingPlan& plan) {
  if (clients.empty()) throw std::invalid_argument("run_round: no clients");

  RoundReport report;
  report.round_index = server.round_index;
  report.sigma = plan.meta.noise_sigma;

  std::vector<MetaParams> locals(clients.size());
  std::vector<double> weights(clients.size());
  for (std::size_t c = 0; c < clients.size(); ++c) {
    Rng rng(derive_stream({plan.seed, kClientStream,
                           static_cast<std::uint64_t>(clients[c].client_id),
                           static_cast<std::uint64_t>(server.round_index)}));
    auto [meta, trace] = local_round(clients[c], server.global_meta, model,
                                     plan.episode_spec, plan.local_batches, plan.learner, rng);
    locals[c] = std::move(meta);
    weights[c] = static_cast<double>(clients[c].dataset.examples.size());
    report.clients.push_back({clients[c].client_id, clients[c].dataset.examples.size(),
                              std::move(trace)});
  }

  server.global_meta = fedavg(locals, weights);
  server.round_index += 1;
  for (ClientState& c : clients) c.meta = server.global_meta;
  report.checksum = params_checksum(server.global_meta);
  return report;
}

EvalPoint evaluate_on(const MetaParams& meta, const MlpModel& model,
                      const LabeledDataset& eval_dataset, const TrainingPlan& plan,
                      int round) {
  Rng rng(derive_stream({plan.seed, kEvalStream, static_cast<std::uint64_t>(round)}));
  std::vector<Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(plan.eval_tasks));
  for (int t = 0; t < plan.eval_tasks; ++t) {
    episodes.push_back(sample_episode(eval_dataset, plan.episode_spec, rng));
  }
  std::vector<EvalResult> results = evaluate(meta, model, episodes, plan.meta);

  std::vector<Indicators> per_task;
  double loss_sum = 0.0;
  for (const EvalResult& r : results) {
    per_task.push_back(indicators(confusion(r.predictions, r.labels, 1)));
    loss_sum += r.query_loss;
  }
  EvalPoint point;
  point.round = round;
  point.report = aggregate(per_task);
  point.mean_query_loss = loss_sum / static_cast<double>(results.size());
  return point;
}

TrainingResult run_training(const TrainingPlan& plan,
                            const std::vector<LabeledDataset>& client_datasets,
                            const LabeledDataset& eval_dataset) {
  if (client_datasets.empty()) throw std::invalid_argument("run_training: no client datasets");
  const MlpModel model(plan.model);

  Rng init_rng(derive_stream({plan.seed, kInitStream}));
  TrainingResult result;
  result.server.global_meta = init_meta_params(plan.model, init_rng);
  result.server.round_index = 0;

  std::vector<ClientState> clients;
  for (std::size_t c = 0; c < client_datasets.size(); ++c) {
    ClientState state;
    state.client_id = static_cast<int>(c);
    state.dataset = client_datasets[c];
    state.meta = result.server.global_meta;
    state.local_config = plan.meta;
    clients.push_back(std::move(state));
  }

  for (int r = 0; r < plan.rounds; ++r) {
    result.history.push_back(run_round(result.server, clients, model, plan));
    const bool cadence_hit = plan.eval_cadence > 0 && (r + 1) % plan.eval_cadence == 0;
    if (cadence_hit || r + 1 == plan.rounds) {
      result.evals.push_back(
          evaluate_on(result.server.global_meta, model, eval_dataset, plan, r + 1));
    }
  }
  if (plan.rounds == 0) {
    result.evals.push_back(evaluate_on(result.server.global_meta, model, eval_dataset, plan, 0));
  }
  return result;
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t params_checksum(const MetaParams& meta) {
  std::uint64_t h = fnv1a64(meta.theta.data(), meta.theta.size() * sizeof(double));
  return fnv1a64(meta.alpha.data(), meta.alpha.size() * sizeof(double), h);
}

std::uint64_t model_config_hash(const ModelConfig& config) {
  std::vector<std::int64_t> fields;
  fields.push_back(config.input_dim);
  for (int h : config.hidden_dims) fields.push_back(h);
  fields.push_back(-1);  // separator
  fields.push_back(config.num_classes);
  fields.push_back(config.batchnorm_enabled ? 1 : 0);
  return fnv1a64(fields.data(), fields.size() * sizeof(std::int64_t));
}

void save_checkpoint(const std::filesystem::path& path, const MetaParams& meta,
                     std::uint64_t config_hash, std::uint32_t round_index) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    out.write(kCheckpointMagic, 4);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t dim = meta.theta.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&config_hash), sizeof(config_hash));
    out.write(reinterpret_cast<const char*>(&round_index), sizeof(round_index));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(meta.theta.data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
    out.write(reinterpret_cast<const char*>(meta.alpha.data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  std::uint32_t version = 0;
  Checkpoint ck;
  std::uint64_t dim = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version in " + path.string());
  }
  in.read(reinterpret_cast<char*>(&ck.config_hash), sizeof(ck.config_hash));
  in.read(reinterpret_cast<char*>(&ck.round_index), sizeof(ck.round_index));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  ck.meta.theta.resize(dim);
  ck.meta.alpha.resize(dim);
  in.read(reinterpret_cast<char*>(ck.meta.theta.data()),
          static_cast<std::streamsize>(dim * sizeof(double)));
  in.read(reinterpret_cast<char*>(ck.meta.alpha.data()),
          static_cast<std::streamsize>(dim * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
  return ck;
}

}  // namespace ffsim
