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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aoifb/core.hpp"

// Closed forms for threshold-greedy epochs and the optimal average age.
//
// Within an epoch the first attempt happens at x1 = max(gamma, tau1) and each
// erased attempt is retried on the next arrival. With c = q / (1 - q):
//
//   E[L] = E[x1] + c
//   E[R] = E[x1^2] / 2 + c E[x1] + q / (1 - q)^2
//
// The optimal average age lambda* is the unique root of
// p(lambda) = min_x E[R] - lambda E[L], attained by gamma = [lambda - c]^+.

namespace aoifb {

/// Above this erasure probability the retry ratio is considered out of range.
inline constexpr double kMaxAnalyticErasure = 0.99;

inline constexpr double kDefaultSolverTolerance = 1e-10;
inline constexpr int kMaxBisectionIterations = 200;
inline constexpr int kMaxDinkelbachIterations = 100;

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolveMethod { bisection, dinkelbach_iteration };

inline std::string_view to_string(SolveMethod m) {
  return m == SolveMethod::bisection ? "bisection" : "dinkelbach-iteration";
}

struct DinkelbachSolution {
  double lambda_star = 0.0;
  double gamma_star = 0.0;
  double residual = 0.0;  // |p(lambda_star)|
  int iterations = 0;
  SolveMethod method = SolveMethod::bisection;
  std::vector<double> trace;  // lambda iterates (bisection midpoints or Dinkelbach steps)
};

struct FirstAttemptMoments {
  double mean = 0.0;
  double second_moment = 0.0;
};

namespace detail {

inline double checked_retry_ratio(const ChannelParams& params) {
  params.require_open();
  if (params.q() > kMaxAnalyticErasure) {
    throw std::range_error("erasure probability " + std::to_string(params.q()) +
                           " exceeds the supported range (q <= 0.99)");
  }
  return params.retry_ratio();
}

inline void require_threshold(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("threshold must be finite and >= 0, got " +
                                std::to_string(gamma));
  }
}

}  // namespace detail

/// Moments of max(gamma, tau) with tau ~ Exp(1).
inline FirstAttemptMoments first_attempt_moments(double gamma) {
  detail::require_threshold(gamma);
  const double tail = std::exp(-gamma);
  return {gamma + tail, gamma * gamma + 2.0 * (gamma + 1.0) * tail};
}

inline double expected_epoch_length(double gamma, const ChannelParams& params) {
  const double c = detail::checked_retry_ratio(params);
  return first_attempt_moments(gamma).mean + c;
}

inline double expected_epoch_reward(double gamma, const ChannelParams& params) {
  const double c = detail::checked_retry_ratio(params);
  const auto m = first_attempt_moments(gamma);
  const double one_minus_q = 1.0 - params.q();
  return 0.5 * m.second_moment + c * m.mean + params.q() / (one_minus_q * one_minus_q);
}

/// Long-run average age of a threshold-greedy policy, E[R] / E[L].
inline double threshold_greedy_aoi(double gamma, const ChannelParams& params) {
  return expected_epoch_reward(gamma, params) / expected_epoch_length(gamma, params);
}

inline double optimal_threshold(double lambda, const ChannelParams& params) {
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("lambda must be >= 0, got " + std::to_string(lambda));
  }
  const double c = detail::checked_retry_ratio(params);
  return std::max(lambda - c, 0.0);
}

/// Dinkelbach auxiliary function, in its piecewise closed form.
inline double p_lambda(double lambda, const ChannelParams& params) {
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("lambda must be >= 0, got " + std::to_string(lambda));
  }
  const double c = detail::checked_retry_ratio(params);
  const double q = params.q();
  const double one_minus_q = 1.0 - q;
  const double tail_term = (2.0 * q - q * q) / (one_minus_q * one_minus_q);
  if (lambda < c) {
    return 1.0 - lambda / one_minus_q + tail_term;
  }
  return std::exp(-(lambda - c)) - 0.5 * lambda * lambda + 0.5 * tail_term;
}

inline double infinite_battery_aoi(const ChannelParams& params) {
  params.require_open();
  return 1.0 / (2.0 * (1.0 - params.q()));
}

/// Transmit-on-every-arrival baseline, 1 / (1 - q).
inline double greedy_aoi(const ChannelParams& params) {
  params.require_open();
  return 1.0 / (1.0 - params.q());
}

/// Root of p(lambda) by bisection on [c, c + U], U doubled until p < 0.
inline DinkelbachSolution solve_lambda_star(const ChannelParams& params,
                                            double tol = kDefaultSolverTolerance) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("tolerance must be > 0, got " + std::to_string(tol));
  }
  const double c = detail::checked_retry_ratio(params);

  DinkelbachSolution sol;
  sol.method = SolveMethod::bisection;

  double lo = c;
  double offset = 1.0;
  while (p_lambda(c + offset, params) >= 0.0) {
    offset *= 2.0;
    if (!std::isfinite(offset)) throw ConvergenceError("failed to bracket the root of p");
  }
  double hi = c + offset;

  for (int it = 1; it <= kMaxBisectionIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = p_lambda(mid, params);
    sol.trace.push_back(mid);
    sol.iterations = it;
    if (std::abs(value) <= tol) {
      sol.lambda_star = mid;
      sol.gamma_star = mid - c;
      sol.residual = std::abs(value);
      return sol;
    }
    if (value > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (!(hi > lo)) break;
  }
  throw ConvergenceError("bisection did not reach |p(lambda)| <= " + std::to_string(tol) +
                         " for q = " + std::to_string(params.q()));
}

/// Dinkelbach's ratio iteration lambda <- E[R(gamma(lambda))] / E[L(gamma(lambda))],
/// started from the greedy value 1 / (1 - q).
inline DinkelbachSolution solve_dinkelbach_iteration(const ChannelParams& params,
                                                     double tol = kDefaultSolverTolerance) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("tolerance must be > 0, got " + std::to_string(tol));
  }
  const double c = detail::checked_retry_ratio(params);

  DinkelbachSolution sol;
  sol.method = SolveMethod::dinkelbach_iteration;

  double lambda = greedy_aoi(params);
  sol.trace.push_back(lambda);
  for (int it = 1; it <= kMaxDinkelbachIterations; ++it) {
    const double next = threshold_greedy_aoi(optimal_threshold(lambda, params), params);
    sol.trace.push_back(next);
    sol.iterations = it;
    const bool done = std::abs(next - lambda) <= tol;
    lambda = next;
    if (done) {
      sol.lambda_star = lambda;
      sol.gamma_star = lambda - c;
      sol.residual = std::abs(p_lambda(lambda, params));
      return sol;
    }
  }
  throw ConvergenceError("Dinkelbach iteration did not converge for q = " +
                         std::to_string(params.q()));
}

}  // namespace aoifb
