// Copyright 2026 The dpgibo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace dpgibo {

// Labels for independent random streams. Streams are derived from
// (seed, run, iteration, purpose), so e.g. changing the number of
// acquisition restarts cannot perturb the privacy noise draws.
enum class StreamPurpose : std::uint64_t {
  kAcquisition = 1,
  kPrivacyNoise = 2,
  kProblemData = 3,
  kEvalNoise = 4,
  kInit = 5,
  kTest = 6,
};

namespace detail {

// splitmix64: the standard 64-bit finalizer-style mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

}  // namespace detail

// A seedable stream keyed by (seed, run, iteration, purpose). The key is
// hashed down to a 64-bit state that seeds a mt19937_64 engine, giving
// independent streams for distinct keys.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t run, std::uint64_t iteration,
            StreamPurpose purpose)
      : engine_(detail::mix(
            detail::mix(detail::mix(seed, run), iteration),
            static_cast<std::uint64_t>(purpose))) {}

  explicit RngStream(std::uint64_t raw_seed) : engine_(detail::splitmix64(raw_seed)) {}

  double uniform() { return uniform_(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dpgibo
