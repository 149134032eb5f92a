// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/meta.hpp"

#include <cmath>
#include <stdexcept>

namespace ffsim {

void MetaConfig::validate() const {
  if (beta < 0.0) throw std::invalid_argument("MetaConfig: beta must be non-negative");
  if (inner_steps < 1) throw std::invalid_argument("MetaConfig: inner_steps must be >= 1");
  if (clip_bound <= 0.0) throw std::invalid_argument("MetaConfig: clip bound must be positive");
  if (noise_sigma < 0.0) throw std::invalid_argument("MetaConfig: noise sigma must be non-negative");
  if (tasks_per_batch < 1) throw std::invalid_argument("MetaConfig: tasks_per_batch must be >= 1");
  if (noise_sigma > 0.0 && !std::isfinite(clip_bound)) {
    throw std::invalid_argument("MetaConfig: noise requires a finite clip bound");
  }
}

MetaParams init_meta_params(const ModelConfig& config, Rng& rng, double alpha_lo,
                            double alpha_hi) {
  MetaParams meta;
  meta.theta = init_params(config, rng);
  meta.alpha.resize(meta.theta.size());
  for (double& a : meta.alpha) a = rng.uniform(alpha_lo, alpha_hi);
  return meta;
}

ParamVector inner_adapt(const MetaParams& meta, const Model& model, const Batch& support,
                        const MetaConfig& config) {
  ParamVector theta = meta.theta;
  for (int s = 0; s < config.inner_steps; ++s) {
    ParamVector g = model.grad(theta, support);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= meta.alpha[i] * g[i];
  }
  return theta;
}

MetaGradient meta_gradient(const MetaParams& meta, const Model& model,
                           const Episode& episode, const MetaConfig& config) {
  const std::size_t n = meta.theta.size();
  if (meta.alpha.size() != n) throw std::invalid_argument("meta: theta/alpha length mismatch");

  // Forward through the inner trajectory, keeping each iterate and its
  // support gradient for the reverse sweep.
  std::vector<ParamVector> thetas(1, meta.theta);
  std::vector<ParamVector> grads;
  for (int s = 0; s < config.inner_steps; ++s) {
    grads.push_back(model.grad(thetas.back(), episode.support));
    ParamVector next = thetas.back();
    for (std::size_t i = 0; i < n; ++i) next[i] -= meta.alpha[i] * grads.back()[i];
    thetas.push_back(std::move(next));
  }

  MetaGradient out;
  out.d_theta = model.grad(thetas.back(), episode.query);  // adjoint at theta_T
  out.d_alpha.assign(n, 0.0);
  for (int s = config.inner_steps - 1; s >= 0; --s) {
    for (std::size_t i = 0; i < n; ++i) out.d_alpha[i] -= grads[s][i] * out.d_theta[i];
    ParamVector av(n);
    for (std::size_t i = 0; i < n; ++i) av[i] = meta.alpha[i] * out.d_theta[i];
    ParamVector hv = model.hvp(thetas[s], episode.support, av);
    for (std::size_t i = 0; i < n; ++i) out.d_theta[i] -= hv[i];
  }
  return out;
}

double l2_norm_joint(const MetaGradient& g) {
  double sq = 0.0;
  for (double x : g.d_theta) sq += x * x;
  for (double x : g.d_alpha) sq += x * x;
  return std::sqrt(sq);
}

MetaGradient clip_gradient(const MetaGradient& g, double clip_bound) {
  if (clip_bound <= 0.0) throw std::invalid_argument("clip bound must be positive");
  const double norm = l2_norm_joint(g);
  const double divisor = std::max(1.0, norm / clip_bound);
  if (divisor == 1.0) return g;  // bitwise unchanged when within bound
  MetaGradient out = g;
  for (double& x : out.d_theta) x /= divisor;
  for (double& x : out.d_alpha) x /= divisor;
  return out;
}

namespace {

// Sum of per-episode meta-gradients in episode-index order, each clipped at
// clip_bound (an infinite bound leaves them bitwise untouched).
MetaGradient sum_clipped(const MetaParams& meta, const Model& model,
                         std::span<const Episode> episodes, const MetaConfig& config,
                         double clip_bound) {
  MetaGradient sum;
  sum.d_theta.assign(meta.theta.size(), 0.0);
  sum.d_alpha.assign(meta.alpha.size(), 0.0);
  for (const Episode& ep : episodes) {
    MetaGradient g = clip_gradient(meta_gradient(meta, model, ep, config), clip_bound);
    for (std::size_t i = 0; i < sum.d_theta.size(); ++i) {
      sum.d_theta[i] += g.d_theta[i];
      sum.d_alpha[i] += g.d_alpha[i];
    }
  }
  return sum;
}

MetaParams apply_step(const MetaParams& meta, const MetaGradient& direction, double beta) {
  MetaParams out = meta;
  for (std::size_t i = 0; i < out.theta.size(); ++i) {
    out.theta[i] -= beta * direction.d_theta[i];
    out.alpha[i] -= beta * direction.d_alpha[i];
  }
  return out;
}

}  // namespace

MetaParams metasgd_step(const MetaParams& meta, const Model& model,
                        std::span<const Episode> episodes, const MetaConfig& config) {
  if (episodes.empty()) throw std::invalid_argument("metasgd_step: empty episode batch");
  const double inv_b = 1.0 / static_cast<double>(episodes.size());
  MetaGradient dir =
      sum_clipped(meta, model, episodes, config, std::numeric_limits<double>::infinity());
  for (double& x : dir.d_theta) x *= inv_b;
  for (double& x : dir.d_alpha) x *= inv_b;
  return apply_step(meta, dir, config.beta);
}

MetaParams metadpsgd_step(const MetaParams& meta, const Model& model,
                          std::span<const Episode> episodes, const MetaConfig& config,
                          Rng& rng) {
  if (episodes.empty()) throw std::invalid_argument("metadpsgd_step: empty episode batch");
  config.validate();
  const double inv_b = 1.0 / static_cast<double>(episodes.size());
  const double noise_stddev = config.noise_sigma * config.clip_bound;

  MetaGradient dir = sum_clipped(meta, model, episodes, config, config.clip_bound);
  if (config.noise_convention == NoiseConvention::kStandardDpsgd) {
    if (config.noise_sigma > 0.0) {
      for (double& x : dir.d_theta) x += rng.normal(0.0, noise_stddev);
      for (double& x : dir.d_alpha) x += rng.normal(0.0, noise_stddev);
    }
    for (double& x : dir.d_theta) x *= inv_b;
    for (double& x : dir.d_alpha) x *= inv_b;
  } else {
    for (double& x : dir.d_theta) x *= inv_b;
    for (double& x : dir.d_alpha) x *= inv_b;
    if (config.noise_sigma > 0.0) {
      for (double& x : dir.d_theta) x += rng.normal(0.0, noise_stddev);
      for (double& x : dir.d_alpha) x += rng.normal(0.0, noise_stddev);
    }
  }
  return apply_step(meta, dir, config.beta);
}

MetaParams maml_step(const MetaParams& meta, const Model& model,
                     std::span<const Episode> episodes, const MetaConfig& config) {
  if (episodes.empty()) throw std::invalid_argument("maml_step: empty episode batch");
  MetaParams frozen = meta;
  frozen.alpha.assign(meta.theta.size(), config.maml_inner_rate);
  const double inv_b = 1.0 / static_cast<double>(episodes.size());
  MetaGradient dir =
      sum_clipped(frozen, model, episodes, config, std::numeric_limits<double>::infinity());
  MetaParams out = meta;
  for (std::size_t i = 0; i < out.theta.size(); ++i) {
    out.theta[i] -= config.beta * inv_b * dir.d_theta[i];
  }
  return out;
}

std::vector<EvalResult> evaluate(const MetaParams& meta, const MlpModel& model,
                                 std::span<const Episode> episodes,
                                 const MetaConfig& config) {
  std::vector<EvalResult> results;
  results.reserve(episodes.size());
  const int classes = model.config().num_classes;
  for (const Episode& ep : episodes) {
    ParamVector adapted = inner_adapt(meta, model, ep.support, config);
    std::vector<double> probs = model.forward(adapted, ep.query);
    EvalResult r;
    r.labels = ep.query.labels;
    r.query_loss = model.loss(adapted, ep.query);
    const int rows = ep.query.rows();
    r.predictions.reserve(rows);
    for (int i = 0; i < rows; ++i) {
      const double* row = probs.data() + static_cast<std::size_t>(i) * classes;
      int best = 0;
      for (int c = 1; c < classes; ++c) {
        if (row[c] > row[best]) best = c;  // ties keep the lowest index
      }
      r.predictions.push_back(best);
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ffsim
