// Copyright 2026 The dptv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTV_RNG_HPP_
#define DPTV_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dptv {

// Deterministic 64-bit string hash (FNV-1a). Used to derive independent
// substreams from human-readable labels.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// SplitMix64 finalizer; decorrelates structured inputs before they are fed
// to the engine seed or used directly as cheap per-id pseudo-noise.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Hash-combine for id-derived deterministic values that must not depend on
// any run seed (the toy model's per-example pseudo-noise).
inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2)));
}

// Maps a hash to a double in [-1, 1].
inline double hash_to_signed_unit(std::uint64_t h) {
  return static_cast<double>(splitmix64(h) >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

// One mechanism invocation = one (seed, stream_label) pair. Distinct labels
// give statistically independent streams under the same seed.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::string stream_label;

  RandomSeed derive(std::string_view sub) const {
    return RandomSeed{seed, stream_label + "/" + std::string(sub)};
  }
};

// Seeded generator with explicit, engine-stable samplers. std::mt19937_64 is
// bit-exact by the standard; the transforms below are hand-rolled so output
// does not depend on the standard library's distribution implementations.
class RngStream {
 public:
  explicit RngStream(const RandomSeed& rs)
      : engine_(splitmix64(rs.seed ^ fnv1a64(rs.stream_label))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform in (0, 1]; safe as a log argument.
  double next_unit_open() {
    return static_cast<double>((engine_() >> 11) + 1) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller, with the usual spare caching.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit_open();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Gumbel(0, scale): -scale * log(-log U).
  double next_gumbel(double scale) {
    double u = next_unit_open();
    // U == 1 would give log(0); nudge into the open interval.
    if (u >= 1.0) u = 1.0 - 1e-16;
    return -scale * std::log(-std::log(u));
  }

  // Uniform index in [0, n).
  std::size_t next_index(std::size_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64, and
    // bit-exact reproducibility matters more than the ~n/2^64 bias.
    return static_cast<std::size_t>(engine_() % n);
  }

  // Fisher-Yates shuffle, deterministic for a given stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dptv

#endif  // DPTV_RNG_HPP_
