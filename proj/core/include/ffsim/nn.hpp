// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected softmax classifier with exact reverse-mode gradients and
// exact Hessian-vector products (forward-over-reverse via Dual scalars).
// Everything here is a pure function of its arguments.

#ifndef FFSIM_NN_HPP
#define FFSIM_NN_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ffsim/dual.hpp"
#include "ffsim/rng.hpp"

namespace ffsim {

// Flat parameter storage; the unit exchanged between clients and server.
using ParamVector = std::vector<double>;

struct ModelConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims = {256, 128, 64, 64};
  int num_classes = 2;
  bool batchnorm_enabled = true;

  void validate() const;
};

struct Batch {
  int input_dim = 0;
  std::vector<double> inputs;  // row-major, rows() x input_dim
  std::vector<int> labels;     // class indices in [0, num_classes)

  int rows() const {
    return input_dim == 0 ? 0 : static_cast<int>(inputs.size()) / input_dim;
  }
};

// Canonical parameter layout: layer 0 weights (row-major, out x in), layer 0
// biases, layer 1 weights, ... output layer; then, if batch norm is enabled,
// scale (gamma) and shift (beta) per hidden layer appended in layer order.
struct ParamLayout {
  std::vector<int> dims;  // [input_dim, hidden..., num_classes]
  std::vector<std::size_t> w_off, b_off;
  std::vector<std::size_t> gamma_off, beta_off;  // hidden layers only
  std::size_t total = 0;

  int num_layers() const { return static_cast<int>(dims.size()) - 1; }
};

ParamLayout make_layout(const ModelConfig& config);
std::size_t param_count(const ModelConfig& config);

// Fan-in scaled uniform weights, zero biases, unit scale / zero shift for
// batch norm. Deterministic given the rng state.
ParamVector init_params(const ModelConfig& config, Rng& rng);

// Class probabilities, row-major rows() x num_classes. Batch norm, when
// enabled, uses the statistics of the presented batch only.
std::vector<double> forward(const ParamVector& params, const ModelConfig& config,
                            const Batch& batch);

// Mean cross-entropy, probabilities clamped below at 1e-15.
double loss(const ParamVector& params, const ModelConfig& config,
            const Batch& batch);

// Exact reverse-mode gradient of loss() w.r.t. params.
ParamVector grad(const ParamVector& params, const ModelConfig& config,
                 const Batch& batch);

// Exact H*v where H is the Hessian of loss() at params.
ParamVector hvp(const ParamVector& params, const ModelConfig& config,
                const Batch& batch, const ParamVector& v);

// Differentiable objective abstraction used by the meta-learners: any model
// exposing loss, gradient and Hessian-vector product over a flat parameter
// vector. Tests plug in analytic toy objectives through the same interface.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dim() const = 0;
  virtual double loss(const ParamVector& params, const Batch& batch) const = 0;
  virtual ParamVector grad(const ParamVector& params, const Batch& batch) const = 0;
  virtual ParamVector hvp(const ParamVector& params, const Batch& batch,
                          const ParamVector& v) const = 0;
};

class MlpModel final : public Model {
 public:
  explicit MlpModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::size_t dim() const override { return param_count(config_); }
  double loss(const ParamVector& params, const Batch& batch) const override {
    return ffsim::loss(params, config_, batch);
  }
  ParamVector grad(const ParamVector& params, const Batch& batch) const override {
    return ffsim::grad(params, config_, batch);
  }
  ParamVector hvp(const ParamVector& params, const Batch& batch,
                  const ParamVector& v) const override {
    return ffsim::hvp(params, config_, batch, v);
  }
  std::vector<double> forward(const ParamVector& params, const Batch& batch) const {
    return ffsim::forward(params, config_, batch);
  }

 private:
  ModelConfig config_;
};

namespace detail {

inline constexpr double kProbFloor = 1e-15;
inline constexpr double kBatchNormEps = 1e-5;

template <typename T>
struct Trace {
  std::vector<std::vector<T>> act;      // act[l] = input of layer l, m x dims[l]
  std::vector<std::vector<T>> pre;      // pre-activation z per layer
  std::vector<std::vector<T>> xhat;     // batch-norm normalized, hidden layers
  std::vector<std::vector<T>> inv_std;  // per-feature 1/sqrt(var+eps)
  std::vector<std::vector<T>> bn_out;   // gamma*xhat + beta, pre-ReLU
  std::vector<T> probs;                 // m x num_classes
};

void check_shapes(std::size_t params_len, const ParamLayout& layout,
                  const ModelConfig& config, const Batch& batch);

template <typename T>
void forward_impl(std::span<const T> p, const ParamLayout& layout, bool bn,
                  const Batch& batch, Trace<T>& tr) {
  const int m = batch.rows();
  const int nl = layout.num_layers();
  tr.act.assign(static_cast<std::size_t>(nl), {});
  tr.pre.assign(static_cast<std::size_t>(nl), {});
  if (bn) {
    tr.xhat.assign(static_cast<std::size_t>(nl - 1), {});
    tr.inv_std.assign(static_cast<std::size_t>(nl - 1), {});
    tr.bn_out.assign(static_cast<std::size_t>(nl - 1), {});
  }

  tr.act[0].resize(static_cast<std::size_t>(m) * layout.dims[0]);
  for (std::size_t i = 0; i < tr.act[0].size(); ++i) tr.act[0][i] = T(batch.inputs[i]);

  for (int l = 0; l < nl; ++l) {
    const int in = layout.dims[l];
    const int out = layout.dims[l + 1];
    const T* w = p.data() + layout.w_off[l];
    const T* b = p.data() + layout.b_off[l];
    const std::vector<T>& a = tr.act[l];

    std::vector<T>& z = tr.pre[l];
    z.assign(static_cast<std::size_t>(m) * out, T(0.0));
    for (int r = 0; r < m; ++r) {
      const T* ar = a.data() + static_cast<std::size_t>(r) * in;
      T* zr = z.data() + static_cast<std::size_t>(r) * out;
      for (int o = 0; o < out; ++o) {
        T acc = b[o];
        const T* wrow = w + static_cast<std::size_t>(o) * in;
        for (int j = 0; j < in; ++j) acc += wrow[j] * ar[j];
        zr[o] = acc;
      }
    }

    if (l == nl - 1) break;  // logits; softmax below

    std::vector<T>& h = tr.act[l + 1];
    h.resize(z.size());
    if (bn) {
      const T* gamma = p.data() + layout.gamma_off[l];
      const T* beta = p.data() + layout.beta_off[l];
      std::vector<T>& xh = tr.xhat[l];
      std::vector<T>& istd = tr.inv_std[l];
      std::vector<T>& y = tr.bn_out[l];
      xh.resize(z.size());
      y.resize(z.size());
      istd.resize(static_cast<std::size_t>(out));
      const T inv_m = T(1.0) / T(static_cast<double>(m));
      for (int o = 0; o < out; ++o) {
        T mean(0.0);
        for (int r = 0; r < m; ++r) mean += z[static_cast<std::size_t>(r) * out + o];
        mean *= inv_m;
        T var(0.0);
        for (int r = 0; r < m; ++r) {
          T c = z[static_cast<std::size_t>(r) * out + o] - mean;
          var += c * c;
        }
        var *= inv_m;
        istd[o] = T(1.0) / sqrt(var + T(kBatchNormEps));
        for (int r = 0; r < m; ++r) {
          const std::size_t idx = static_cast<std::size_t>(r) * out + o;
          xh[idx] = (z[idx] - mean) * istd[o];
          y[idx] = gamma[o] * xh[idx] + beta[o];
          h[idx] = max(y[idx], T(0.0));
        }
      }
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) h[i] = max(z[i], T(0.0));
    }
  }

  // Row-wise softmax with max shift.
  const int classes = layout.dims[nl];
  const std::vector<T>& logits = tr.pre[nl - 1];
  tr.probs.resize(logits.size());
  for (int r = 0; r < m; ++r) {
    const T* lr = logits.data() + static_cast<std::size_t>(r) * classes;
    T* pr = tr.probs.data() + static_cast<std::size_t>(r) * classes;
    T mx = lr[0];
    for (int c = 1; c < classes; ++c) mx = max(mx, lr[c]);
    T sum(0.0);
    for (int c = 0; c < classes; ++c) {
      pr[c] = exp(lr[c] - mx);
      sum += pr[c];
    }
    for (int c = 0; c < classes; ++c) pr[c] = pr[c] / sum;
  }
}

template <typename T>
T loss_from_trace(const Trace<T>& tr, const Batch& batch, int classes) {
  const int m = batch.rows();
  T total(0.0);
  for (int r = 0; r < m; ++r) {
    const T& py = tr.probs[static_cast<std::size_t>(r) * classes + batch.labels[r]];
    total += -log(max(py, T(kProbFloor)));
  }
  return total / T(static_cast<double>(m));
}

template <typename T>
std::vector<T> grad_impl(std::span<const T> p, const ParamLayout& layout,
                         const ModelConfig& config, const Batch& batch) {
  const bool bn = config.batchnorm_enabled;
  const int m = batch.rows();
  const int nl = layout.num_layers();
  const int classes = layout.dims[nl];

  Trace<T> tr;
  forward_impl<T>(p, layout, bn, batch, tr);

  std::vector<T> g(layout.total, T(0.0));

  // d loss / d logits. With the probability clamp active the example
  // contributes no gradient, matching the implemented loss exactly.
  std::vector<T> dz(static_cast<std::size_t>(m) * classes, T(0.0));
  const T inv_m = T(1.0) / T(static_cast<double>(m));
  for (int r = 0; r < m; ++r) {
    const int y = batch.labels[r];
    const T* pr = tr.probs.data() + static_cast<std::size_t>(r) * classes;
    T* dr = dz.data() + static_cast<std::size_t>(r) * classes;
    if (value_of(pr[y]) <= kProbFloor) continue;
    const T dlp = -inv_m / pr[y];  // d loss / d p_y
    const T srow = dlp * pr[y];
    for (int c = 0; c < classes; ++c) {
      dr[c] = pr[c] * ((c == y ? dlp : T(0.0)) - srow);
    }
  }

  for (int l = nl - 1;; --l) {
    const int in = layout.dims[l];
    const int out = layout.dims[l + 1];
    const std::vector<T>& a = tr.act[l];
    T* dw = g.data() + layout.w_off[l];
    T* db = g.data() + layout.b_off[l];
    for (int r = 0; r < m; ++r) {
      const T* ar = a.data() + static_cast<std::size_t>(r) * in;
      const T* dr = dz.data() + static_cast<std::size_t>(r) * out;
      for (int o = 0; o < out; ++o) {
        const T v = dr[o];
        db[o] += v;
        T* dwrow = dw + static_cast<std::size_t>(o) * in;
        for (int j = 0; j < in; ++j) dwrow[j] += v * ar[j];
      }
    }
    if (l == 0) break;

    // Gradient w.r.t. this layer's input, i.e. the ReLU output of layer l-1.
    std::vector<T> da(static_cast<std::size_t>(m) * in, T(0.0));
    const T* w = p.data() + layout.w_off[l];
    for (int r = 0; r < m; ++r) {
      const T* dr = dz.data() + static_cast<std::size_t>(r) * out;
      T* dar = da.data() + static_cast<std::size_t>(r) * in;
      for (int o = 0; o < out; ++o) {
        const T v = dr[o];
        const T* wrow = w + static_cast<std::size_t>(o) * in;
        for (int j = 0; j < in; ++j) dar[j] += v * wrow[j];
      }
    }

    const int hl = l - 1;  // hidden layer whose activation we just reached
    const std::vector<T>& mask_src = bn ? tr.bn_out[hl] : tr.pre[hl];
    std::vector<T> dy(da.size(), T(0.0));
    for (std::size_t i = 0; i < da.size(); ++i) {
      if (value_of(mask_src[i]) > 0.0) dy[i] = da[i];
    }

    if (bn) {
      const int f = in;  // features of hidden layer hl
      const T* gamma = p.data() + layout.gamma_off[hl];
      T* dgamma = g.data() + layout.gamma_off[hl];
      T* dbeta = g.data() + layout.beta_off[hl];
      const std::vector<T>& xh = tr.xhat[hl];
      const std::vector<T>& istd = tr.inv_std[hl];
      dz.assign(dy.size(), T(0.0));
      const T inv_mb = T(1.0) / T(static_cast<double>(m));
      for (int o = 0; o < f; ++o) {
        T sum_dy(0.0), sum_dyx(0.0);
        for (int r = 0; r < m; ++r) {
          const std::size_t idx = static_cast<std::size_t>(r) * f + o;
          sum_dy += dy[idx];
          sum_dyx += dy[idx] * xh[idx];
        }
        dgamma[o] += sum_dyx;
        dbeta[o] += sum_dy;
        const T mean_dy = sum_dy * inv_mb;
        const T mean_dyx = sum_dyx * inv_mb;
        const T scale = gamma[o] * istd[o];
        for (int r = 0; r < m; ++r) {
          const std::size_t idx = static_cast<std::size_t>(r) * f + o;
          dz[idx] = scale * (dy[idx] - mean_dy - xh[idx] * mean_dyx);
        }
      }
    } else {
      dz = std::move(dy);
    }
  }
  return g;
}

}  // namespace detail

}  // namespace ffsim

#endif  // FFSIM_NN_HPP
