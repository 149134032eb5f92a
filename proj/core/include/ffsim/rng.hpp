// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FFSIM_RNG_HPP
#define FFSIM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ffsim {

// Deterministic random stream. All simulation randomness flows through this
// class so that a run is a pure function of its seed. Sub-streams (per client,
// per round, per arm) are derived with derive_stream(), never by sharing a
// generator across consumers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller on the uniform stream. The spare draw of
  // each pair is cached, so consecutive calls consume two uniforms per pair.
  double normal();
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 finalizer; also used as the documented stream-derivation hash:
// each word is absorbed into the state and fully mixed, so e.g.
// derive_stream({global_seed, client_id, round_index}) gives independent
// streams for every (client, round) pair.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> words);

}  // namespace ffsim

#endif  // FFSIM_RNG_HPP
