// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Meta-SGD and its differentially private variant Meta-DPSGD, plus a MAML
// baseline. The inner step is theta' = theta - alpha o grad(theta, support);
// the outer update follows the exact second-order meta-gradient.

#ifndef FFSIM_META_HPP
#define FFSIM_META_HPP

#include <limits>
#include <span>
#include <vector>

#include "ffsim/episodes.hpp"
#include "ffsim/nn.hpp"
#include "ffsim/rng.hpp"

namespace ffsim {

struct MetaParams {
  ParamVector theta;
  ParamVector alpha;  // per-coordinate learning rates, same length as theta
};

enum class NoiseConvention {
  kStandardDpsgd,  // direction = (sum of clipped grads + noise) / batch size
  kPaperLiteral,   // direction = (sum of clipped grads) / batch size + noise
};

struct MetaConfig {
  double beta = 0.05;       // outer step size
  int inner_steps = 1;
  double clip_bound = std::numeric_limits<double>::infinity();  // C; inf = unbounded
  double noise_sigma = 0.0;                                     // sigma of Algorithm-style noise
  int tasks_per_batch = 32;
  NoiseConvention noise_convention = NoiseConvention::kStandardDpsgd;
  double maml_inner_rate = 0.01;  // fixed scalar inner rate for the MAML baseline

  void validate() const;
};

struct MetaGradient {
  ParamVector d_theta;
  ParamVector d_alpha;
};

struct EvalResult {
  std::vector<int> predictions;
  std::vector<int> labels;
  double query_loss = 0.0;
};

// Initial meta-parameters: theta from the model initializer, alpha uniform in
// [alpha_lo, alpha_hi].
MetaParams init_meta_params(const ModelConfig& config, Rng& rng,
                            double alpha_lo = 0.005, double alpha_hi = 0.1);

// theta' after config.inner_steps sequential steps on the support set; each
// step recomputes the gradient at the current iterate.
ParamVector inner_adapt(const MetaParams& meta, const Model& model,
                        const Batch& support, const MetaConfig& config);

// Exact gradient of loss(inner_adapt(theta, alpha), query) w.r.t. (theta,
// alpha). One Hessian-vector product per inner step:
//   d_theta = g_te - H_tr(alpha o g_te),  d_alpha = -g_tr o g_te
// for a single step; multi-step applies the same vector-Jacobian recursion
// backwards through the stored iterates.
MetaGradient meta_gradient(const MetaParams& meta, const Model& model,
                           const Episode& episode, const MetaConfig& config);

// Joint l2 clip over the concatenated (d_theta || d_alpha) vector:
// g / max(1, ||g||_2 / C). Returns the input unchanged when the norm is
// within bound.
MetaGradient clip_gradient(const MetaGradient& g, double clip_bound);

// One outer step of size beta using the batch-averaged meta-gradient; no
// clipping, no noise.
MetaParams metasgd_step(const MetaParams& meta, const Model& model,
                        std::span<const Episode> episodes, const MetaConfig& config);

// Meta-DPSGD outer step: per-episode meta-gradients clipped at C, summed in
// episode order, noised per the configured convention, then applied with step
// size beta. With sigma = 0 and unbounded C this is bitwise metasgd_step.
MetaParams metadpsgd_step(const MetaParams& meta, const Model& model,
                          std::span<const Episode> episodes, const MetaConfig& config,
                          Rng& rng);

// MAML baseline: alpha frozen to the scalar config.maml_inner_rate; only
// theta is updated.
MetaParams maml_step(const MetaParams& meta, const Model& model,
                     std::span<const Episode> episodes, const MetaConfig& config);

// Adapt on each episode's support set, predict argmax class probabilities on
// its query set. Ties break toward the lowest class index. Pure.
std::vector<EvalResult> evaluate(const MetaParams& meta, const MlpModel& model,
                                 std::span<const Episode> episodes,
                                 const MetaConfig& config);

double l2_norm_joint(const MetaGradient& g);

}  // namespace ffsim

#endif  // FFSIM_META_HPP
