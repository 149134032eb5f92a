// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FFSIM_EPISODES_HPP
#define FFSIM_EPISODES_HPP

#include <string>
#include <utility>
#include <vector>

#include "ffsim/nn.hpp"
#include "ffsim/rng.hpp"

namespace ffsim {

struct Example {
  std::vector<double> input;
  int label = 0;
  std::vector<std::string> tags;  // free-form: modality, disease, client hints
};

struct LabeledDataset {
  int input_dim = 0;
  std::vector<Example> examples;

  // Distinct labels in ascending order.
  std::vector<int> labels() const;
  // Indices of examples carrying the given label.
  std::vector<std::size_t> indices_of(int label) const;
};

struct EpisodeSpec {
  int n_way = 2;
  int k_shot = 5;
  int q_query = 5;

  void validate() const;
};

struct Episode {
  Batch support;  // n_way * k_shot rows
  Batch query;    // n_way * q_query rows
  std::vector<std::pair<int, int>> class_map;  // original label -> episode label
};

// Per-class stratified split. The first part receives round(ratio * count)
// examples per class, clamped so both parts keep at least one.
std::pair<LabeledDataset, LabeledDataset> split_train_test(
    const LabeledDataset& dataset, double ratio, Rng& rng);

// One N-way K-shot task: n_way classes drawn uniformly without replacement
// from the classes with enough examples, then k_shot + q_query examples per
// class, the first k_shot forming the support set. Episode labels follow the
// sampled class order.
Episode sample_episode(const LabeledDataset& dataset, const EpisodeSpec& spec,
                       Rng& rng);

}  // namespace ffsim

#endif  // FFSIM_EPISODES_HPP
