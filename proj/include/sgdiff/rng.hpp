/* SPDX-License-Identifier: Apache-2.0 */
// Counter-based random streams. A draw is a pure function of (key, counters),
// so results do not depend on evaluation order or thread count.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace sgdiff {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0);

  /// Independent child stream identified by a name or an integer id.
  CounterRng stream(std::string_view name) const;
  CounterRng stream(std::uint64_t id) const;

  std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;
  /// Standard normal via Box-Muller on two counter draws.
  double normal(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  /// Sequential engine for code that consumes many draws in a fixed order.
  std::mt19937_64 engine() const { return std::mt19937_64(key_); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t x);

/// Inverse-CDF draw from a (possibly unnormalized) weight vector. Zero-weight
/// entries are never returned. Returns -1 when all weights are zero.
int sample_categorical(std::span<const double> weights, double u);

}  // namespace sgdiff
