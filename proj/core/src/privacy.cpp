// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/privacy.hpp"

#include <cmath>
#include <stdexcept>

namespace ffsim {

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyBudget: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("PrivacyBudget: delta must be in (0, 1)");
  }
}

void CalibrationInputs::validate() const {
  if (!(sampling_probability > 0.0 && sampling_probability <= 1.0)) {
    throw std::invalid_argument("CalibrationInputs: sampling probability must be in (0, 1]");
  }
  if (steps < 1) throw std::invalid_argument("CalibrationInputs: steps must be >= 1");
  if (!(c2 > 0.0)) throw std::invalid_argument("CalibrationInputs: c2 must be positive");
  if (log_base < 0.0 || log_base == 1.0) {
    throw std::invalid_argument("CalibrationInputs: invalid log base");
  }
}

double calibrate_sigma(const PrivacyBudget& budget, const CalibrationInputs& inputs) {
  budget.validate();
  inputs.validate();
  double log_inv_delta = std::log(1.0 / budget.delta);
  if (inputs.log_base > 0.0) log_inv_delta /= std::log(inputs.log_base);
  return inputs.c2 * inputs.sampling_probability *
         std::sqrt(static_cast<double>(inputs.steps) * log_inv_delta) / budget.epsilon;
}

double min_delta_for(double sigma, double epsilon) {
  if (!(sigma > 0.0)) throw std::invalid_argument("min_delta_for: sigma must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("min_delta_for: requires 0 < epsilon < 1");
  }
  return 0.8 * std::exp(-sigma * sigma * epsilon * epsilon / 2.0);
}

std::vector<double> gaussian_noise(int dim, double stddev, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("gaussian_noise: dim must be >= 1");
  if (stddev < 0.0) throw std::invalid_argument("gaussian_noise: stddev must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  if (stddev == 0.0) return out;
  for (double& x : out) x = rng.normal(0.0, stddev);
  return out;
}

double effective_sensitivity(double clip_bound) {
  if (!(clip_bound > 0.0)) {
    throw std::invalid_argument("effective_sensitivity: clip bound must be positive");
  }
  return clip_bound;
}

}  // namespace ffsim
