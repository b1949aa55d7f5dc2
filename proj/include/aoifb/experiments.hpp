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

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoifb/analytic.hpp"
#include "aoifb/sim.hpp"

namespace aoifb {

inline constexpr std::uint64_t kDefaultSweepEpochs = 1'000'000;

inline constexpr const char* kSweepCsvHeader =
    "q,lambda_star,gamma_star,sim_mean,sim_stderr,infinite_battery,greedy_value";
inline constexpr const char* kGainCsvHeader = "q,aoi_no_feedback,beta_hat,lambda_star,gain";

struct SweepRow {
  double q = 0.0;
  double lambda_star = 0.0;
  double gamma_star = 0.0;
  double sim_mean = 0.0;
  double sim_stderr = 0.0;
  double infinite_battery = 0.0;
  double greedy_value = 0.0;
};

struct GainRow {
  double q = 0.0;
  double aoi_no_feedback = 0.0;
  double beta_hat = 0.0;
  double lambda_star = 0.0;
  double gain = 0.0;
  double gain_stderr = 0.0;  // not part of the CSV
};

/// Golden-section search settings for the no-feedback spacing.
struct BetaSearch {
  double lo = 0.0;
  double hi = 5.0;
  int iterations = 40;
};

/// q = 0.05, 0.10, ..., 0.95.
inline std::vector<double> default_q_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(0.05 * k);
  return grid;
}

namespace detail {

inline void validate_grid(std::span<const double> q_grid) {
  for (double q : q_grid) {
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument("invalid erasure probability in grid: " + std::to_string(q));
    }
  }
}

}  // namespace detail

struct SearchResult {
  double argmin = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section minimization of a (possibly noisy) unimodal objective.
/// Returns the best point evaluated, endpoints included.
template <typename Objective>
SearchResult golden_section_minimize(Objective&& f, double lo, double hi, int iterations) {
  if (!(hi > lo)) throw std::invalid_argument("golden-section bracket is empty");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  SearchResult best{lo, f(lo), 1};
  auto consider = [&](double x, double fx) {
    ++best.evaluations;
    if (fx < best.value) {
      best.argmin = x;
      best.value = fx;
    }
  };
  consider(hi, f(hi));

  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  consider(x1, f1);
  consider(x2, f2);
  for (int it = 0; it < iterations; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    }
  }
  return best;
}

/// Solver plus epoch simulation at the optimal threshold for every q.
inline std::vector<SweepRow> sweep_q(std::span<const double> q_grid,
                                     std::uint64_t n_epochs = kDefaultSweepEpochs,
                                     std::uint64_t seed = 0, unsigned replicas = 1) {
  detail::validate_grid(q_grid);
  std::vector<SweepRow> rows;
  rows.reserve(q_grid.size());
  for (double q : q_grid) {
    const ChannelParams params(q);
    const auto sol = solve_lambda_star(params);
    const auto est =
        ratio_mean_aoi(ThresholdGreedyPolicy{sol.gamma_star}, params, n_epochs, seed, replicas);
    rows.push_back({q, sol.lambda_star, sol.gamma_star, est.mean_aoi, est.std_error,
                    infinite_battery_aoi(params), greedy_aoi(params)});
  }
  return rows;
}

/// Best simulated no-feedback spacing against the feedback optimum. Every
/// objective evaluation reuses `seed`, so the search sees common random numbers.
inline std::vector<GainRow> gain_study(std::span<const double> q_grid, const BetaSearch& search,
                                       std::uint64_t n_epochs = kDefaultSweepEpochs,
                                       std::uint64_t seed = 0, unsigned replicas = 1) {
  detail::validate_grid(q_grid);
  std::vector<GainRow> rows;
  rows.reserve(q_grid.size());
  for (double q : q_grid) {
    const ChannelParams params(q);
    const auto sol = solve_lambda_star(params);
    auto objective = [&](double beta) {
      return collect_epochs(NoFeedbackThresholdPolicy{beta}, params, n_epochs, seed, replicas)
          .ratio();
    };
    const auto best = golden_section_minimize(objective, search.lo, search.hi, search.iterations);
    const auto at_best = collect_epochs(NoFeedbackThresholdPolicy{best.argmin}, params, n_epochs,
                                        seed, replicas);
    rows.push_back({q, at_best.ratio(), best.argmin, sol.lambda_star,
                    at_best.ratio() - sol.lambda_star, at_best.ratio_stderr()});
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << detail::fmt6(r.q) << ',' << detail::fmt6(r.lambda_star) << ','
        << detail::fmt6(r.gamma_star) << ',' << detail::fmt6(r.sim_mean) << ','
        << detail::fmt6(r.sim_stderr) << ',' << detail::fmt6(r.infinite_battery) << ','
        << detail::fmt6(r.greedy_value) << '\n';
  }
}

inline void write_gain_csv(std::ostream& out, std::span<const GainRow> rows) {
  out << kGainCsvHeader << '\n';
  for (const auto& r : rows) {
    out << detail::fmt6(r.q) << ',' << detail::fmt6(r.aoi_no_feedback) << ','
        << detail::fmt6(r.beta_hat) << ',' << detail::fmt6(r.lambda_star) << ','
        << detail::fmt6(r.gain) << '\n';
  }
}

}  // namespace aoifb
