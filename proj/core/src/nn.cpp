// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/nn.hpp"

#include <cmath>

namespace ffsim {

void ModelConfig::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("ModelConfig: input_dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("ModelConfig: num_classes must be >= 2");
  if (hidden_dims.empty()) throw std::invalid_argument("ModelConfig: hidden_dims must be non-empty");
  for (int h : hidden_dims) {
    if (h <= 0) throw std::invalid_argument("ModelConfig: hidden dims must be positive");
  }
}

ParamLayout make_layout(const ModelConfig& config) {
  config.validate();
  ParamLayout layout;
  layout.dims.push_back(config.input_dim);
  for (int h : config.hidden_dims) layout.dims.push_back(h);
  layout.dims.push_back(config.num_classes);

  std::size_t off = 0;
  const int nl = layout.num_layers();
  for (int l = 0; l < nl; ++l) {
    layout.w_off.push_back(off);
    off += static_cast<std::size_t>(layout.dims[l + 1]) * layout.dims[l];
    layout.b_off.push_back(off);
    off += static_cast<std::size_t>(layout.dims[l + 1]);
  }
  if (config.batchnorm_enabled) {
    for (int l = 0; l < nl - 1; ++l) {
      layout.gamma_off.push_back(off);
      off += static_cast<std::size_t>(layout.dims[l + 1]);
      layout.beta_off.push_back(off);
      off += static_cast<std::size_t>(layout.dims[l + 1]);
    }
  }
  layout.total = off;
  return layout;
}

std::size_t param_count(const ModelConfig& config) { return make_layout(config).total; }

namespace detail {

void check_shapes(std::size_t params_len, const ParamLayout& layout,
                  const ModelConfig& config, const Batch& batch) {
  if (params_len != layout.total) {
    throw std::invalid_argument("param vector length does not match model config");
  }
  if (batch.input_dim != config.input_dim) {
    throw std::invalid_argument("batch input_dim does not match model config");
  }
  if (batch.rows() < 1) throw std::invalid_argument("batch must have at least one row");
  if (batch.labels.size() != static_cast<std::size_t>(batch.rows())) {
    throw std::invalid_argument("batch labels length does not match row count");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= config.num_classes) {
      throw std::invalid_argument("batch label out of range");
    }
  }
}

}  // namespace detail

ParamVector init_params(const ModelConfig& config, Rng& rng) {
  const ParamLayout layout = make_layout(config);
  ParamVector p(layout.total, 0.0);
  const int nl = layout.num_layers();
  for (int l = 0; l < nl; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layout.dims[l]));
    const std::size_t n = static_cast<std::size_t>(layout.dims[l + 1]) * layout.dims[l];
    for (std::size_t i = 0; i < n; ++i) {
      p[layout.w_off[l] + i] = rng.uniform(-bound, bound);
    }
    // biases stay zero
  }
  if (config.batchnorm_enabled) {
    for (int l = 0; l < nl - 1; ++l) {
      for (int o = 0; o < layout.dims[l + 1]; ++o) p[layout.gamma_off[l] + o] = 1.0;
      // shifts stay zero
    }
  }
  return p;
}

std::vector<double> forward(const ParamVector& params, const ModelConfig& config,
                            const Batch& batch) {
  const ParamLayout layout = make_layout(config);
  detail::check_shapes(params.size(), layout, config, batch);
  detail::Trace<double> tr;
  detail::forward_impl<double>(std::span<const double>(params), layout,
                               config.batchnorm_enabled, batch, tr);
  return std::move(tr.probs);
}

double loss(const ParamVector& params, const ModelConfig& config, const Batch& batch) {
  const ParamLayout layout = make_layout(config);
  detail::check_shapes(params.size(), layout, config, batch);
  detail::Trace<double> tr;
  detail::forward_impl<double>(std::span<const double>(params), layout,
                               config.batchnorm_enabled, batch, tr);
  return detail::loss_from_trace(tr, batch, config.num_classes);
}

ParamVector grad(const ParamVector& params, const ModelConfig& config, const Batch& batch) {
  const ParamLayout layout = make_layout(config);
  detail::check_shapes(params.size(), layout, config, batch);
  return detail::grad_impl<double>(std::span<const double>(params), layout, config, batch);
}

ParamVector hvp(const ParamVector& params, const ModelConfig& config, const Batch& batch,
                const ParamVector& v) {
  const ParamLayout layout = make_layout(config);
  detail::check_shapes(params.size(), layout, config, batch);
  if (v.size() != params.size()) {
    throw std::invalid_argument("hvp direction length does not match params");
  }
  std::vector<Dual> pd(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) pd[i] = Dual(params[i], v[i]);
  std::vector<Dual> gd =
      detail::grad_impl<Dual>(std::span<const Dual>(pd), layout, config, batch);
  ParamVector out(params.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gd[i].d;
  return out;
}

MlpModel::MlpModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
}

}  // namespace ffsim
