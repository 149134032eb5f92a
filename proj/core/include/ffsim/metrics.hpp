// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FFSIM_METRICS_HPP
#define FFSIM_METRICS_HPP

#include <optional>
#include <span>
#include <vector>

#include "ffsim/rng.hpp"

namespace ffsim {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

// Per-task indicator values; a zero denominator leaves the metric unset and
// the task is excluded from that metric's average.
struct Indicators {
  std::optional<double> accuracy, precision, recall, f1;
};

struct AggregateMetric {
  double mean = 0.0;
  double ci_halfwidth = 0.0;
  int n = 0;         // tasks with a defined value
  int excluded = 0;  // tasks dropped for an undefined value
};

struct MetricsReport {
  AggregateMetric accuracy, precision, recall, f1;
  int n_tasks = 0;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class);

// Accuracy, precision, recall, F1 from the contingency table; throws on an
// empty table.
Indicators indicators(const ConfusionCounts& c);

// Mean over tasks with a normal-approximation confidence interval,
// halfwidth = z * sample-stddev / sqrt(n). Requires >= 2 defined values per
// metric.
MetricsReport aggregate(std::span<const Indicators> per_task, double confidence = 0.95);

// Percentile-bootstrap alternative to the normal approximation.
MetricsReport aggregate_bootstrap(std::span<const Indicators> per_task, Rng& rng,
                                  double confidence = 0.95, int resamples = 2000);

// "0.885±0.020" presentation, three decimals.
std::string format_metric(const AggregateMetric& m);

}  // namespace ffsim

#endif  // FFSIM_METRICS_HPP
