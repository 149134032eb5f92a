// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differential-privacy bookkeeping: budget validation, Gaussian noise, and
// noise-scale calibration. The protected record is one few-shot task; with
// per-task clipping at norm C the l2 sensitivity of the clipped-gradient sum
// is bounded by C.

#ifndef FFSIM_PRIVACY_HPP
#define FFSIM_PRIVACY_HPP

#include <vector>

#include "ffsim/rng.hpp"

namespace ffsim {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-3;

  void validate() const;  // epsilon > 0, 0 < delta < 1
};

struct CalibrationInputs {
  double sampling_probability = 1.0;  // s = L/N
  int steps = 1;                      // T
  double c2 = 1.0;
  double log_base = 0.0;              // 0 = natural log

  void validate() const;
};

// sigma = c2 * s * sqrt(T * log(1/delta)) / epsilon, with the lower bound of
// the calibration taken with equality. log is natural unless log_base is set.
double calibrate_sigma(const PrivacyBudget& budget, const CalibrationInputs& inputs);

// Smallest delta for which noise scale sigma gives (epsilon, delta)-DP:
// (4/5) * exp(-sigma^2 epsilon^2 / 2). Only valid for epsilon < 1.
double min_delta_for(double sigma, double epsilon);

// dim i.i.d. samples from N(0, stddev^2); deterministic given the rng state.
std::vector<double> gaussian_noise(int dim, double stddev, Rng& rng);

// The S_f <-> C identification: with per-record clipping at norm C, the
// sensitivity of the clipped-gradient sum to one record is C. Exists to make
// the identification explicit and auditable.
double effective_sensitivity(double clip_bound);

}  // namespace ffsim

#endif  // FFSIM_PRIVACY_HPP
