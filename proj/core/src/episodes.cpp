// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ffsim {

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out;
  for (const Example& e : examples) {
    if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> LabeledDataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label == label) out.push_back(i);
  }
  return out;
}

void EpisodeSpec::validate() const {
  if (n_way < 2) throw std::invalid_argument("EpisodeSpec: n_way must be >= 2");
  if (k_shot < 1) throw std::invalid_argument("EpisodeSpec: k_shot must be >= 1");
  if (q_query < 1) throw std::invalid_argument("EpisodeSpec: q_query must be >= 1");
}

namespace {

// Draw k distinct indices from [0, n) in sampled order (partial Fisher-Yates).
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng.uniform_int(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

void append_row(Batch& batch, const Example& e, int episode_label) {
  batch.inputs.insert(batch.inputs.end(), e.input.begin(), e.input.end());
  batch.labels.push_back(episode_label);
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split_train_test(
    const LabeledDataset& dataset, double ratio, Rng& rng) {
  if (ratio <= 0.0 || ratio >= 1.0) {
    throw std::invalid_argument("split ratio must be in (0, 1)");
  }
  LabeledDataset train, test;
  train.input_dim = test.input_dim = dataset.input_dim;
  for (int label : dataset.labels()) {
    std::vector<std::size_t> idx = dataset.indices_of(label);
    const std::size_t n = idx.size();
    if (n < 2) throw std::invalid_argument("split_train_test: class with fewer than 2 examples");
    std::vector<std::size_t> order = draw_without_replacement(n, n, rng);
    std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? train : test).examples.push_back(dataset.examples[idx[order[i]]]);
    }
  }
  return {std::move(train), std::move(test)};
}

Episode sample_episode(const LabeledDataset& dataset, const EpisodeSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t need = static_cast<std::size_t>(spec.k_shot) + spec.q_query;

  std::vector<int> eligible;
  for (int label : dataset.labels()) {
    if (dataset.indices_of(label).size() >= need) eligible.push_back(label);
  }
  if (eligible.size() < static_cast<std::size_t>(spec.n_way)) {
    throw std::invalid_argument("sample_episode: not enough eligible classes");
  }

  std::vector<std::size_t> picked =
      draw_without_replacement(eligible.size(), static_cast<std::size_t>(spec.n_way), rng);

  Episode ep;
  ep.support.input_dim = ep.query.input_dim = dataset.input_dim;
  for (int e = 0; e < spec.n_way; ++e) {
    const int label = eligible[picked[e]];
    ep.class_map.emplace_back(label, e);
    std::vector<std::size_t> idx = dataset.indices_of(label);
    std::vector<std::size_t> chosen = draw_without_replacement(idx.size(), need, rng);
    for (std::size_t i = 0; i < need; ++i) {
      const Example& ex = dataset.examples[idx[chosen[i]]];
      append_row(i < static_cast<std::size_t>(spec.k_shot) ? ep.support : ep.query, ex, e);
    }
  }
  return ep;
}

}  // namespace ffsim
