// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ffsim/episodes.hpp"
#include "ffsim/rng.hpp"

using namespace ffsim;

namespace {

// Each example's single feature encodes its global index, so identity can be
// tracked through sampling.
LabeledDataset indexed_dataset(const std::vector<int>& per_class_counts) {
  LabeledDataset ds;
  ds.input_dim = 1;
  int idx = 0;
  for (std::size_t c = 0; c < per_class_counts.size(); ++c) {
    for (int i = 0; i < per_class_counts[c]; ++i) {
      Example e;
      e.input = {static_cast<double>(idx++)};
      e.label = static_cast<int>(c);
      ds.examples.push_back(std::move(e));
    }
  }
  return ds;
}

int count_label(const LabeledDataset& ds, int label) {
  return static_cast<int>(ds.indices_of(label).size());
}

}  // namespace

TEST_CASE("labels and indices_of") {
  LabeledDataset ds = indexed_dataset({3, 0, 2});
  ds.examples[0].label = 7;  // make labels non-contiguous
  const std::vector<int> labels = ds.labels();
  CHECK(labels == std::vector<int>{0, 2, 7});
  CHECK(ds.indices_of(0).size() == 2u);
  CHECK(ds.indices_of(7) == std::vector<std::size_t>{0});
  CHECK(ds.indices_of(5).empty());
}

TEST_CASE("split keeps per-class proportions: 10 per class at 0.8 gives 8/2") {
  const LabeledDataset ds = indexed_dataset({10, 10});
  Rng rng(1);
  const auto [train, test] = split_train_test(ds, 0.8, rng);
  for (int c : {0, 1}) {
    CHECK(count_label(train, c) == 8);
    CHECK(count_label(test, c) == 2);
  }
  CHECK(train.input_dim == 1);
  CHECK(test.input_dim == 1);
}

TEST_CASE("split of 2 examples at 0.5 gives 1/1") {
  const LabeledDataset ds = indexed_dataset({2});
  Rng rng(2);
  const auto [train, test] = split_train_test(ds, 0.5, rng);
  CHECK(train.examples.size() == 1u);
  CHECK(test.examples.size() == 1u);
}

TEST_CASE("split clamps so both sides keep at least one example per class") {
  const LabeledDataset ds = indexed_dataset({3});
  Rng rng(3);
  const auto [hi_train, hi_test] = split_train_test(ds, 0.99, rng);
  CHECK(hi_train.examples.size() == 2u);
  CHECK(hi_test.examples.size() == 1u);
  const auto [lo_train, lo_test] = split_train_test(ds, 0.01, rng);
  CHECK(lo_train.examples.size() == 1u);
  CHECK(lo_test.examples.size() == 2u);
}

TEST_CASE("split rejects classes with fewer than two examples") {
  const LabeledDataset ds = indexed_dataset({5, 1});
  Rng rng(4);
  CHECK_THROWS_AS((void)split_train_test(ds, 0.5, rng), std::invalid_argument);
}

TEST_CASE("split is a partition and deterministic in the seed") {
  const LabeledDataset ds = indexed_dataset({13, 7, 9});
  Rng r1(42), r2(42), r3(43);
  const auto [a_train, a_test] = split_train_test(ds, 0.7, r1);
  const auto [b_train, b_test] = split_train_test(ds, 0.7, r2);
  const auto [c_train, c_test] = split_train_test(ds, 0.7, r3);

  auto ids = [](const LabeledDataset& d) {
    std::multiset<double> s;
    for (const Example& e : d.examples) s.insert(e.input[0]);
    return s;
  };
  // Union of the two parts is exactly the original dataset.
  std::multiset<double> all = ids(a_train);
  for (double v : ids(a_test)) all.insert(v);
  CHECK(all == ids(ds));
  // Same seed, same split; different seed, (almost surely) different split.
  CHECK(ids(a_train) == ids(b_train));
  CHECK(ids(a_train) != ids(c_train));
}

TEST_CASE("episode has the advertised shape and disjoint support/query") {
  const LabeledDataset ds = indexed_dataset({20, 20, 20, 20});
  EpisodeSpec spec;
  spec.n_way = 3;
  spec.k_shot = 4;
  spec.q_query = 2;
  Rng rng(7);
  const Episode ep = sample_episode(ds, spec, rng);

  CHECK(ep.support.rows() == 12);
  CHECK(ep.query.rows() == 6);
  CHECK(ep.support.input_dim == 1);
  CHECK(ep.class_map.size() == 3u);

  // Episode labels are 0..n_way-1 with exactly k_shot / q_query rows each.
  std::map<int, int> sup_counts, qry_counts;
  for (int y : ep.support.labels) ++sup_counts[y];
  for (int y : ep.query.labels) ++qry_counts[y];
  for (int e = 0; e < 3; ++e) {
    CHECK(sup_counts[e] == 4);
    CHECK(qry_counts[e] == 2);
  }

  // No example appears twice across support and query (identity = feature).
  std::set<double> seen;
  for (double v : ep.support.inputs) CHECK(seen.insert(v).second);
  for (double v : ep.query.inputs) CHECK(seen.insert(v).second);

  // class_map maps distinct original labels onto distinct episode labels.
  std::set<int> orig, epi;
  for (const auto& [o, e] : ep.class_map) {
    CHECK(orig.insert(o).second);
    CHECK(epi.insert(e).second);
  }
  CHECK(epi == std::set<int>{0, 1, 2});
}

TEST_CASE("episode labels are consistent with class_map") {
  const LabeledDataset ds = indexed_dataset({10, 10, 10});
  EpisodeSpec spec;  // 2-way 5-shot, 5 query
  Rng rng(9);
  const Episode ep = sample_episode(ds, spec, rng);
  // Recover each row's original label from its index-valued feature.
  std::map<int, int> map;  // original -> episode
  for (const auto& [o, e] : ep.class_map) map[o] = e;
  auto orig_label = [](double v) { return static_cast<int>(v) / 10; };
  for (int r = 0; r < ep.support.rows(); ++r) {
    CHECK(ep.support.labels[r] == map.at(orig_label(ep.support.inputs[r])));
  }
  for (int r = 0; r < ep.query.rows(); ++r) {
    CHECK(ep.query.labels[r] == map.at(orig_label(ep.query.inputs[r])));
  }
}

TEST_CASE("classes without k+q examples are ineligible") {
  // Class 1 has only 6 examples; a 5-shot 5-query episode needs 10.
  const LabeledDataset ds = indexed_dataset({12, 6, 15});
  EpisodeSpec spec;  // 2-way 5/5
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Episode ep = sample_episode(ds, spec, rng);
    for (const auto& [o, e] : ep.class_map) CHECK(o != 1);
  }
}

TEST_CASE("too few eligible classes is an error") {
  const LabeledDataset ds = indexed_dataset({12, 6});
  EpisodeSpec spec;  // 2-way 5/5: only class 0 is eligible
  Rng rng(13);
  CHECK_THROWS_AS((void)sample_episode(ds, spec, rng), std::invalid_argument);
}

TEST_CASE("class selection is uniform over eligible classes") {
  const LabeledDataset ds = indexed_dataset({15, 15, 15, 15});
  EpisodeSpec spec;  // 2-way: each class selected with probability 1/2
  Rng rng(17);
  const int n = 10000;
  std::vector<int> hits(4, 0);
  for (int i = 0; i < n; ++i) {
    const Episode ep = sample_episode(ds, spec, rng);
    for (const auto& [o, e] : ep.class_map) ++hits[static_cast<std::size_t>(o)];
  }
  // p = 1/2, sd = sqrt(0.25/n) ~ 0.005; allow 4 sigma.
  for (int h : hits) {
    const double p = static_cast<double>(h) / n;
    CHECK(p > 0.48);
    CHECK(p < 0.52);
  }
}

TEST_CASE("sampling is deterministic in the rng state") {
  const LabeledDataset ds = indexed_dataset({20, 20, 20});
  EpisodeSpec spec;
  Rng r1(99), r2(99);
  for (int i = 0; i < 10; ++i) {
    const Episode a = sample_episode(ds, spec, r1);
    const Episode b = sample_episode(ds, spec, r2);
    CHECK(a.support.inputs == b.support.inputs);
    CHECK(a.query.inputs == b.query.inputs);
    CHECK(a.support.labels == b.support.labels);
    CHECK(a.class_map == b.class_map);
  }
}

TEST_CASE("spec validation") {
  EpisodeSpec s;
  s.n_way = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = EpisodeSpec{};
  s.k_shot = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = EpisodeSpec{};
  s.q_query = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_NOTHROW(EpisodeSpec{}.validate());
}
