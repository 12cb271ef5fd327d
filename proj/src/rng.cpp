/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace sgdiff {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed) : key_(mix64(seed ^ 0x5bd1e9955bd1e995ULL)) {}

CounterRng CounterRng::stream(std::string_view name) const {
  // FNV-1a over the name, then mixed with the parent key
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return stream(h);
}

CounterRng CounterRng::stream(std::uint64_t id) const {
  CounterRng child(0);
  child.key_ = mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL));
  return child;
}

std::uint64_t CounterRng::bits(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t h = mix64(key_ + a * kGolden);
  h = mix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
  return mix64(h ^ (c + 0xd6e8feb86659fd93ULL));
}

double CounterRng::uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return static_cast<double>(bits(a, b, c) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  const double u1 = 1.0 - uniform(a, b, c);  // (0, 1]
  const double u2 = static_cast<double>(bits(a, b, c ^ 0xa5a5a5a5a5a5a5a5ULL) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int sample_categorical(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return -1;
  const double target = u * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = static_cast<int>(k);
    acc += weights[k];
    if (target < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace sgdiff
