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
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "aoifb/core.hpp"

namespace aoifb {

inline constexpr std::uint64_t kMinRatioEpochs = 1000;
inline constexpr double kMinTimelineHorizon = 1e4;

/// Streaming co-moments of (reward, length) pairs. Merging follows the
/// pairwise update of Chan et al., so a fixed merge order gives fixed bits.
class EpochStats {
 public:
  void add(double reward, double length) noexcept {
    ++n_;
    const double n = static_cast<double>(n_);
    const double dr = reward - mean_r_;
    const double dl = length - mean_l_;
    mean_r_ += dr / n;
    mean_l_ += dl / n;
    m2_r_ += dr * (reward - mean_r_);
    m2_l_ += dl * (length - mean_l_);
    c_rl_ += dr * (length - mean_l_);
  }

  void add(const EpochOutcome& e) noexcept { add(e.reward, e.length); }

  void merge(const EpochStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double dr = o.mean_r_ - mean_r_;
    const double dl = o.mean_l_ - mean_l_;
    mean_r_ += dr * nb / n;
    mean_l_ += dl * nb / n;
    m2_r_ += o.m2_r_ + dr * dr * na * nb / n;
    m2_l_ += o.m2_l_ + dl * dl * na * nb / n;
    c_rl_ += o.c_rl_ + dr * dl * na * nb / n;
    n_ += o.n_;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean_reward() const noexcept { return mean_r_; }
  double mean_length() const noexcept { return mean_l_; }
  double var_reward() const noexcept { return n_ > 1 ? m2_r_ / (n_ - 1) : 0.0; }
  double var_length() const noexcept { return n_ > 1 ? m2_l_ / (n_ - 1) : 0.0; }
  double cov() const noexcept { return n_ > 1 ? c_rl_ / (n_ - 1) : 0.0; }

  /// Renewal-reward estimate sum(R) / sum(L).
  double ratio() const noexcept { return mean_r_ / mean_l_; }

  /// Delta-method standard error of the ratio:
  /// SE^2 = (Var R - 2 theta Cov(R, L) + theta^2 Var L) / (n E[L]^2).
  double ratio_stderr() const noexcept {
    if (n_ < 2) return std::numeric_limits<double>::infinity();
    const double theta = ratio();
    const double num = var_reward() - 2.0 * theta * cov() + theta * theta * var_length();
    return std::sqrt(std::max(num, 0.0) / (static_cast<double>(n_) * mean_l_ * mean_l_));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_r_ = 0.0;
  double mean_l_ = 0.0;
  double m2_r_ = 0.0;
  double m2_l_ = 0.0;
  double c_rl_ = 0.0;
};

struct SimEstimate {
  double mean_aoi = 0.0;
  double std_error = 0.0;
  double epochs_or_horizon = 0.0;
  std::uint64_t seed = 0;
  std::string policy_descriptor;
};

namespace detail {

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline EpochOutcome close_epoch(double length, std::uint32_t attempts) {
  return {length, 0.5 * length * length, attempts};
}

}  // namespace detail

inline std::string describe(const ThresholdGreedyPolicy& p) {
  return "threshold-greedy(gamma=" + detail::fmt6(p.gamma) + ")";
}
inline std::string describe(const GreedyPolicy&) { return "greedy"; }
inline std::string describe(const NoFeedbackThresholdPolicy& p) {
  return "no-feedback(beta=" + detail::fmt6(p.beta) + ")";
}

/// One threshold-greedy epoch starting from age 0 with an empty battery.
template <DrawSource Source>
EpochOutcome simulate_epoch(const ThresholdGreedyPolicy& policy, const ChannelParams& params,
                            Source& source) {
  params.require_open();
  double t = policy.first_attempt_time(draw_exponential(source));
  std::uint32_t attempts = 1;
  while (draw_erasure(source, params)) {
    t += draw_exponential(source);
    ++attempts;
  }
  return detail::close_epoch(t, attempts);
}

/// One no-feedback epoch: attempts are spaced by max(beta, tau) regardless of
/// the erasure outcome, and the epoch closes on the first success.
template <DrawSource Source>
EpochOutcome simulate_epoch(const NoFeedbackThresholdPolicy& policy, const ChannelParams& params,
                            Source& source) {
  params.require_open();
  double t = 0.0;
  std::uint32_t attempts = 0;
  do {
    t += std::max(policy.beta, draw_exponential(source));
    ++attempts;
  } while (draw_erasure(source, params));
  return detail::close_epoch(t, attempts);
}

template <DrawSource Source>
EpochOutcome simulate_epoch(const GreedyPolicy&, const ChannelParams& params, Source& source) {
  return simulate_epoch(ThresholdGreedyPolicy{0.0}, params, source);
}

template <typename P>
concept EpochPolicy = requires(const P& p, const ChannelParams& c, RngStream& r) {
  { simulate_epoch(p, c, r) } -> std::same_as<EpochOutcome>;
};

/// Epoch statistics for `n_epochs` split over `replicas` independent streams.
/// Replica r draws from RngStream(seed, r) and gets n / k epochs, the first
/// n % k replicas one more. Replicas run on their own threads and are merged
/// in index order, so the result equals a serial run with the same layout.
template <EpochPolicy Policy>
EpochStats collect_epochs(const Policy& policy, const ChannelParams& params,
                          std::uint64_t n_epochs, std::uint64_t seed, unsigned replicas = 1) {
  params.require_open();
  if (replicas == 0) throw std::invalid_argument("replicas must be >= 1");
  if (n_epochs < replicas) throw std::invalid_argument("fewer epochs than replicas");

  std::vector<EpochStats> parts(replicas);
  auto run = [&](unsigned r) {
    RngStream rng(seed, r);
    const std::uint64_t share = n_epochs / replicas + (r < n_epochs % replicas ? 1 : 0);
    EpochStats local;
    for (std::uint64_t i = 0; i < share; ++i) local.add(simulate_epoch(policy, params, rng));
    parts[r] = local;
  };

  if (replicas == 1) {
    run(0);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(replicas);
    for (unsigned r = 0; r < replicas; ++r) workers.emplace_back(run, r);
  }

  EpochStats total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

/// Renewal-reward estimate of the long-run average age.
template <EpochPolicy Policy>
SimEstimate ratio_mean_aoi(const Policy& policy, const ChannelParams& params,
                           std::uint64_t n_epochs, std::uint64_t seed, unsigned replicas = 1) {
  if (n_epochs < kMinRatioEpochs) {
    throw std::invalid_argument("at least " + std::to_string(kMinRatioEpochs) +
                                " epochs are required, got " + std::to_string(n_epochs));
  }
  const EpochStats stats = collect_epochs(policy, params, n_epochs, seed, replicas);
  return {stats.ratio(), stats.ratio_stderr(), static_cast<double>(n_epochs), seed,
          describe(policy)};
}

// ---------------------------------------------------------------------------
// Full timeline

using PolicyDescriptor = std::variant<ThresholdGreedyPolicy, GreedyPolicy, NoFeedbackThresholdPolicy>;

inline std::string describe(const PolicyDescriptor& p) {
  return std::visit([](const auto& v) { return describe(v); }, p);
}

/// Builds a descriptor from its CLI name; `parameter` is gamma or beta.
inline PolicyDescriptor parse_policy(const std::string& name, double parameter = 0.0) {
  if (name == "threshold-greedy") return ThresholdGreedyPolicy{parameter};
  if (name == "greedy") return GreedyPolicy{};
  if (name == "no-feedback") return NoFeedbackThresholdPolicy{parameter};
  throw std::invalid_argument("unknown policy '" + name + "'");
}

struct TimelineOptions {
  double horizon = 1e6;
  std::uint64_t seed = 0;
  // Report r(y_n) / y_n instead of r(T) / T, dropping the open tail epoch.
  bool truncate_at_last_success = false;
};

struct TimelineEvent {
  enum class Kind { arrival, attempt };
  Kind kind = Kind::arrival;
  int battery_before = 0;
  bool discarded = false;  // arrival found the battery full
  bool erased = false;
  const TimelineState* state = nullptr;  // after the event
};

/// Arrival gaps come from RngStream(seed, 0) and erasure outcomes from
/// RngStream(seed, 1), one uniform per attempt in attempt order.
inline constexpr std::uint64_t kArrivalStream = 0;
inline constexpr std::uint64_t kErasureStream = 1;

namespace detail {

// Time of the next attempt given a charged battery at state.now.
inline double attempt_time(const ThresholdGreedyPolicy& p, const TimelineState& s, bool retrying) {
  return retrying ? s.now : std::max(s.now, s.last_success + p.gamma);
}
inline double attempt_time(const GreedyPolicy&, const TimelineState& s, bool) { return s.now; }
inline double attempt_time(const NoFeedbackThresholdPolicy& p, const TimelineState& s, bool) {
  return std::max(s.now, s.last_attempt.value_or(0.0) + p.beta);
}

struct TimelineClock {
  double completed_area = 0.0;

  void advance(TimelineState& s, double t) const {
    s.now = t;
    const double open = t - s.last_success;
    s.age_area = completed_area + 0.5 * open * open;
  }
};

}  // namespace detail

/// Event-driven run over [0, horizon] from an empty battery and zero age.
/// Every arrival and attempt is reported to `observer`.
template <typename Observer>
SimEstimate simulate_timeline(const PolicyDescriptor& policy, const ChannelParams& params,
                              const TimelineOptions& options, Observer&& observer) {
  params.require_open();
  if (!(options.horizon >= kMinTimelineHorizon) || !std::isfinite(options.horizon)) {
    throw std::invalid_argument("horizon must be finite and >= 1e4, got " +
                                std::to_string(options.horizon));
  }

  RngStream arrivals(options.seed, kArrivalStream);
  RngStream erasures(options.seed, kErasureStream);

  TimelineState state;
  detail::TimelineClock clock;
  EpochStats epochs;
  bool retrying = false;
  double next_arrival = draw_exponential(arrivals);
  constexpr double never = std::numeric_limits<double>::infinity();

  while (true) {
    const double attempt_at =
        state.battery == 1
            ? std::visit([&](const auto& p) { return detail::attempt_time(p, state, retrying); },
                         policy)
            : never;
    const double next_event = std::min(attempt_at, next_arrival);
    if (next_event > options.horizon) break;

    TimelineEvent ev;
    ev.battery_before = state.battery;
    if (attempt_at <= next_arrival) {
      clock.advance(state, attempt_at);
      if (state.battery != 1) throw std::logic_error("attempt without stored energy");
      state.battery = 0;
      state.last_attempt = attempt_at;
      ev.kind = TimelineEvent::Kind::attempt;
      ev.erased = draw_erasure(erasures, params);
      if (ev.erased) {
        retrying = true;
      } else {
        const double length = attempt_at - state.last_success;
        const double reward = 0.5 * length * length;
        clock.completed_area += reward;
        epochs.add(reward, length);
        state.last_success = attempt_at;
        ++state.successes;
        retrying = false;
      }
    } else {
      clock.advance(state, next_arrival);
      ev.kind = TimelineEvent::Kind::arrival;
      ev.discarded = state.battery == 1;
      state.battery = 1;
      next_arrival += draw_exponential(arrivals);
    }
    ev.state = &state;
    observer(ev);
  }
  clock.advance(state, options.horizon);

  SimEstimate est;
  if (options.truncate_at_last_success) {
    if (state.successes == 0) throw std::runtime_error("no successful update before the horizon");
    est.mean_aoi = clock.completed_area / state.last_success;
  } else {
    est.mean_aoi = state.age_area / options.horizon;
  }
  est.std_error = epochs.ratio_stderr();
  est.epochs_or_horizon = options.horizon;
  est.seed = options.seed;
  est.policy_descriptor = describe(policy);
  return est;
}

inline SimEstimate simulate_timeline(const PolicyDescriptor& policy, const ChannelParams& params,
                                     const TimelineOptions& options) {
  return simulate_timeline(policy, params, options, [](const TimelineEvent&) {});
}

}  // namespace aoifb
