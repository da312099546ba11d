// Copyright 2026 The optadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deterministic random-number plumbing. A single master seed fans out to
// named per-component streams (plant noise, rrt, est, suite generation, ...)
// so that every component draws from an independent, reproducible sequence.
//
// Split rule (documented contract): the stream seed is
//   splitmix64(master ^ fnv1a64(component_name))
// and each stream is a std::mt19937_64 whose raw 64-bit outputs are mapped
// to doubles manually. std::mt19937_64's output sequence is specified by the
// standard and the manual mapping avoids the implementation-defined
// std::uniform_real_distribution, so streams are bit-stable across toolchains.

#ifndef OPTADAPT_RNG_HPP_
#define OPTADAPT_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

#include "optadapt/types.hpp"

namespace optadapt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named component stream derived from a master seed.
inline std::uint64_t seed_for(std::uint64_t master, std::string_view component) {
  return splitmix64(master ^ fnv1a64(component));
}

// Per-scenario sub-seed within a suite (index mixed into the master).
inline std::uint64_t seed_for_index(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ (0x632be59bd9b4e019ULL * (index + 1)));
}

// Deterministic uniform generator over mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free modulo bias is acceptable here only if n is tiny
    // relative to 2^64; use rejection to stay exact.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  Vec uniform_vec(const Vec& lo, const Vec& hi) {
    Vec out(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) out[i] = uniform(lo[i], hi[i]);
    return out;
  }

  // Symmetric uniform noise in [-amplitude, amplitude].
  double symmetric(double amplitude) { return uniform(-amplitude, amplitude); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace optadapt

#endif  // OPTADAPT_RNG_HPP_
