/*
   Copyright 2026 The aoifb Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace aoifb {

/// Erasure channel seen by a unit-battery sensor. Energy arrives as a
/// Poisson process whose rate is normalized to one unit per time unit.
///
/// The public constructor only accepts 0 < q < 1. The degenerate channels
/// q = 0 and q = 1 can be built through degenerate_for_testing(), and every
/// solver or simulator entry point rejects them again via require_open().
class ChannelParams {
 public:
  explicit ChannelParams(double q) : q_(q) {
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument("erasure probability must lie in (0, 1), got " +
                                  std::to_string(q));
    }
  }

  static ChannelParams degenerate_for_testing(double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw std::invalid_argument("erasure probability must lie in [0, 1], got " +
                                  std::to_string(q));
    }
    ChannelParams p;
    p.q_ = q;
    return p;
  }

  double q() const noexcept { return q_; }
  double rate() const noexcept { return 1.0; }

  /// Expected number of erased attempts per epoch, q / (1 - q).
  double retry_ratio() const noexcept { return q_ / (1.0 - q_); }

  bool is_open() const noexcept { return q_ > 0.0 && q_ < 1.0; }

  void require_open() const {
    if (!is_open()) {
      throw std::invalid_argument("erasure probability must lie in (0, 1), got " +
                                  std::to_string(q_));
    }
  }

 private:
  ChannelParams() = default;
  double q_ = 0.5;
};

/// First attempt of an epoch waits until the age reaches gamma (and energy is
/// available); every attempt after an erasure fires on the next arrival.
struct ThresholdGreedyPolicy {
  double gamma = 0.0;

  explicit ThresholdGreedyPolicy(double threshold) : gamma(threshold) {
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
      throw std::invalid_argument("threshold must be finite and >= 0, got " +
                                  std::to_string(threshold));
    }
  }

  /// x1(t) = max(gamma, t) for a first arrival at t.
  double first_attempt_time(double first_arrival) const noexcept {
    return std::max(gamma, first_arrival);
  }
};

/// Transmit the instant energy becomes available.
struct GreedyPolicy {};

/// Baseline without feedback: attempt as soon as the battery is charged and
/// at least beta has elapsed since the previous attempt (or since t = 0).
struct NoFeedbackThresholdPolicy {
  double beta = 0.0;

  explicit NoFeedbackThresholdPolicy(double spacing) : beta(spacing) {
    if (!(spacing >= 0.0) || !std::isfinite(spacing)) {
      throw std::invalid_argument("spacing must be finite and >= 0, got " +
                                  std::to_string(spacing));
    }
  }
};

/// One renewal epoch: the time between consecutive successful deliveries.
struct EpochOutcome {
  double length = 0.0;
  double reward = 0.0;  // area under the age curve, always length^2 / 2
  std::uint32_t attempts = 0;
};

/// Full-timeline simulator state.
struct TimelineState {
  double now = 0.0;
  int battery = 0;
  double last_success = 0.0;
  double age_area = 0.0;
  std::uint64_t successes = 0;
  std::optional<double> last_attempt;

  double age() const noexcept { return now - last_success; }
};

/// Deterministic random stream: xoshiro256** keyed by (seed, stream_id)
/// through splitmix64, so sequences do not depend on the standard library.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t key = stream_id * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL;
    std::uint64_t sm = seed ^ splitmix64(key);
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return to_open_unit(next_u64()); }

  /// Top 52 bits mapped to the cell midpoint, so the result lies in
  /// [2^-53, 1 - 2^-53] and is never exactly 0 or 1.
  static constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  static constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_[4]{};
};

/// Inverse CDF of Exp(1).
inline double exponential_from_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("uniform draw must lie in (0, 1)");
  }
  return -std::log(u);
}

inline double draw_exponential(RngStream& rng) { return -std::log(rng.uniform()); }

/// True when the attempt is erased.
inline bool draw_erasure(RngStream& rng, const ChannelParams& params) {
  return rng.uniform() < params.q();
}

/// Anything that can feed the simulators: unit-mean exponential gaps and
/// per-attempt erasure outcomes, found by argument-dependent lookup.
template <typename S>
concept DrawSource = requires(S& s, const ChannelParams& p) {
  { draw_exponential(s) } -> std::convertible_to<double>;
  { draw_erasure(s, p) } -> std::convertible_to<bool>;
};

static_assert(DrawSource<RngStream>);

}  // namespace aoifb
