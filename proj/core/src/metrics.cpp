// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ffsim {

namespace {

double z_for_confidence(double confidence) {
  if (std::abs(confidence - 0.95) < 1e-12) return 1.96;
  if (std::abs(confidence - 0.90) < 1e-12) return 1.645;
  if (std::abs(confidence - 0.99) < 1e-12) return 2.576;
  throw std::invalid_argument("aggregate: unsupported confidence level");
}

AggregateMetric summarize(const std::vector<double>& values, int total, double z) {
  if (values.size() < 2) {
    throw std::invalid_argument("aggregate: fewer than 2 defined values for a metric");
  }
  AggregateMetric m;
  m.n = static_cast<int>(values.size());
  m.excluded = total - m.n;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  const double sd = std::sqrt(sq / static_cast<double>(m.n - 1));
  m.ci_halfwidth = z * sd / std::sqrt(static_cast<double>(m.n));
  return m;
}

std::vector<double> defined_values(std::span<const Indicators> per_task,
                                   std::optional<double> Indicators::* field) {
  std::vector<double> out;
  for (const Indicators& t : per_task) {
    if (t.*field) out.push_back(*(t.*field));
  }
  return out;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion: predictions/labels length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual_pos = labels[i] == positive_class;
    const bool pred_pos = predictions[i] == positive_class;
    if (actual_pos && pred_pos) c.tp++;
    else if (!actual_pos && pred_pos) c.fp++;
    else if (actual_pos && !pred_pos) c.fn++;
    else c.tn++;
  }
  return c;
}

Indicators indicators(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::invalid_argument("indicators: empty confusion table");
  Indicators r;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

MetricsReport aggregate(std::span<const Indicators> per_task, double confidence) {
  const double z = z_for_confidence(confidence);
  const int total = static_cast<int>(per_task.size());
  MetricsReport rep;
  rep.n_tasks = total;
  rep.accuracy = summarize(defined_values(per_task, &Indicators::accuracy), total, z);
  rep.precision = summarize(defined_values(per_task, &Indicators::precision), total, z);
  rep.recall = summarize(defined_values(per_task, &Indicators::recall), total, z);
  rep.f1 = summarize(defined_values(per_task, &Indicators::f1), total, z);
  return rep;
}

MetricsReport aggregate_bootstrap(std::span<const Indicators> per_task, Rng& rng,
                                  double confidence, int resamples) {
  z_for_confidence(confidence);  // validates the level
  const int total = static_cast<int>(per_task.size());
  MetricsReport rep;
  rep.n_tasks = total;

  auto boot = [&](std::optional<double> Indicators::* field) {
    std::vector<double> values = defined_values(per_task, field);
    if (values.size() < 2) {
      throw std::invalid_argument("aggregate: fewer than 2 defined values for a metric");
    }
    AggregateMetric m;
    m.n = static_cast<int>(values.size());
    m.excluded = total - m.n;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(m.n);

    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (double& b : means) {
      double s = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        s += values[rng.uniform_int(values.size())];
      }
      b = s / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - confidence) / 2.0;
    const auto pick = [&](double q) {
      const double pos = q * static_cast<double>(resamples - 1);
      return means[static_cast<std::size_t>(std::lround(pos))];
    };
    m.ci_halfwidth = (pick(1.0 - tail) - pick(tail)) / 2.0;
    return m;
  };

  rep.accuracy = boot(&Indicators::accuracy);
  rep.precision = boot(&Indicators::precision);
  rep.recall = boot(&Indicators::recall);
  rep.f1 = boot(&Indicators::f1);
  return rep;
}

std::string format_metric(const AggregateMetric& m) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << m.mean << "±" << m.ci_halfwidth;
  return os.str();
}

}  // namespace ffsim
