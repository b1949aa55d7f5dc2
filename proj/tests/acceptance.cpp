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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aoifb/aoifb.hpp"
#include "oracles.hpp"

namespace {

using namespace aoifb;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string f6(double v) { return aoifb::detail::fmt6(v); }

std::vector<double> tenths() {
  std::vector<double> g;
  for (int k = 1; k <= 9; ++k) g.push_back(0.1 * k);
  return g;
}

constexpr std::uint64_t kSeed = 20190401;
constexpr std::uint64_t kEpochs = 1'000'000;

// 1. Fixed-point solver.
Check solver_criterion() {
  Check c;
  for (double q : tenths()) {
    const ChannelParams p(q);
    const auto sol = solve_lambda_star(p, 1e-10);
    c.require(std::abs(p_lambda(sol.lambda_star, p)) <= 1e-10, "residual at q=" + f6(q));
    c.require(sol.lambda_star > p.retry_ratio(), "lambda* <= c at q=" + f6(q));
  }
  const auto tiny = solve_lambda_star(ChannelParams(1e-12), 1e-10);
  c.require(std::abs(tiny.lambda_star - 0.9012) <= 1e-3, "q=1e-12 gives " + f6(tiny.lambda_star));
  c.require(std::abs(tiny.lambda_star - oracle::erasure_free_lambda_star()) <= 1e-9,
            "q=1e-12 disagrees with exp(-l) = l^2/2 root");
  if (c.ok) c.detail = "q=1e-12 -> lambda*=" + f6(tiny.lambda_star);
  return c;
}

// 2. Epoch simulation at the optimal threshold.
Check agreement_criterion() {
  Check c;
  std::string info;
  for (double q : {0.2, 0.5, 0.8}) {
    const ChannelParams p(q);
    const auto sol = solve_lambda_star(p);
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = ratio_mean_aoi(ThresholdGreedyPolicy{sol.gamma_star}, p, kEpochs, kSeed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double dev = std::abs(est.mean_aoi - sol.lambda_star);
    c.require(dev <= 3.0 * est.std_error, "q=" + f6(q) + " off by " + f6(dev / est.std_error) + " SE");
    c.require(est.std_error <= 0.005 * sol.lambda_star, "SE too large at q=" + f6(q));
    c.require(secs < 60.0, "q=" + f6(q) + " took " + f6(secs) + " s");
    info += "q=" + f6(q) + ": " + f6(est.mean_aoi) + " vs " + f6(sol.lambda_star) + " (" +
            f6(dev / est.std_error) + " SE, " + f6(secs) + " s) ";
  }
  if (c.ok) c.detail = info;
  return c;
}

// 3. Pure greedy closed form.
Check greedy_criterion() {
  Check c;
  std::string info;
  for (double q : {0.2, 0.5, 0.8}) {
    const ChannelParams p(q);
    const auto est = ratio_mean_aoi(GreedyPolicy{}, p, kEpochs, kSeed + 1);
    const double dev = std::abs(est.mean_aoi - 1.0 / (1.0 - q));
    c.require(dev <= 3.0 * est.std_error, "q=" + f6(q) + " off by " + f6(dev / est.std_error) + " SE");
    info += "q=" + f6(q) + ": " + f6(dev / est.std_error) + " SE ";
  }
  if (c.ok) c.detail = info;
  return c;
}

// 4. Simulated grid search over the threshold recovers gamma*.
Check threshold_search_criterion() {
  Check c;
  std::string info;
  for (double q : {0.2, 0.5, 0.8}) {
    const ChannelParams p(q);
    const double gamma_star = solve_lambda_star(p).gamma_star;
    double best_gamma = 0.0;
    double best = INFINITY;
    for (int k = 0; k <= 40; ++k) {
      const double gamma = 0.05 * k;
      // Same seed at every grid point: common random numbers.
      const double v = collect_epochs(ThresholdGreedyPolicy{gamma}, p, kEpochs, kSeed + 2).ratio();
      if (v < best) {
        best = v;
        best_gamma = gamma;
      }
    }
    c.require(std::abs(best_gamma - gamma_star) <= 0.05 + 1e-12,
              "q=" + f6(q) + " grid argmin " + f6(best_gamma) + " vs " + f6(gamma_star));
    info += "q=" + f6(q) + ": " + f6(best_gamma) + " vs " + f6(gamma_star) + " ";
  }
  if (c.ok) c.detail = info;
  return c;
}

// 5. Piecewise p(lambda) integrity.
Check p_lambda_criterion() {
  Check c;
  for (int k = 1; k <= 19; ++k) {
    const double q = 0.05 * k;
    const ChannelParams p(q);
    const double cr = p.retry_ratio();
    const double one_minus_q = 1.0 - q;
    const double branch1 =
        1.0 - cr / one_minus_q + (2.0 * q - q * q) / (one_minus_q * one_minus_q);
    const double branch2 = p_lambda(cr, p);
    c.require(std::abs(branch1 - branch2) <= 1e-12 * std::abs(branch2),
              "discontinuity at q=" + f6(q));

    const double top = solve_lambda_star(p).lambda_star + 5.0;
    double prev = p_lambda(0.0, p);
    bool monotone = true;
    for (int i = 1; i < 1000; ++i) {
      const double v = p_lambda(top * i / 999.0, p);
      monotone &= v < prev;
      prev = v;
    }
    c.require(monotone, "not strictly decreasing at q=" + f6(q));

    bool identity = true;
    for (int i = 0; i < 200; ++i) {
      const double lambda = top * i / 199.0;
      const double g = optimal_threshold(lambda, p);
      const double direct = expected_epoch_reward(g, p) - lambda * expected_epoch_length(g, p);
      identity &= std::abs(p_lambda(lambda, p) - direct) <= 1e-10;
    }
    c.require(identity, "identity fails at q=" + f6(q));
  }
  return c;
}

// 6. Moment oracle and gamma-sum identity.
Check moment_criterion() {
  Check c;
  std::string info;
  std::uint64_t seed = 600;
  for (double gamma : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    const auto closed = first_attempt_moments(gamma);
    const auto mc = oracle::first_attempt_moments(gamma, 10'000'000, ++seed);
    const double z1 = std::abs(closed.mean - mc.mean.mean) / mc.mean.stderr_;
    const double z2 = std::abs(closed.second_moment - mc.second_moment.mean) / mc.second_moment.stderr_;
    c.require(z1 <= 3.0 && z2 <= 3.0, "gamma=" + f6(gamma) + " z=" + f6(z1) + "," + f6(z2));
    info += "g=" + f6(gamma) + ":" + f6(std::max(z1, z2)) + "SE ";
  }
  for (int i : {2, 3, 5, 10}) {
    const int k = i - 1;
    const auto mc = oracle::gamma_sum_second_moment(k, 1'000'000, ++seed);
    const double z = std::abs(mc.mean - (k + k * k)) / mc.stderr_;
    c.require(z <= 3.0, "E[G_" + std::to_string(i) + "^2] z=" + f6(z));
    info += "G" + std::to_string(i) + ":" + f6(z) + "SE ";
  }
  if (c.ok) c.detail = info;
  return c;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string& header) {
  std::istringstream in(text);
  std::getline(in, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

// 7. Sweep over q: monotone optimum, sandwich, near-constant threshold.
Check sweep_criterion(std::string& csv_out) {
  Check c;
  const auto grid = default_q_grid();
  std::ostringstream out;
  write_sweep_csv(out, sweep_q(grid, kEpochs, kSeed));
  csv_out = out.str();

  std::string header;
  const auto rows = parse_csv(csv_out, header);
  c.require(header == kSweepCsvHeader, "bad header");
  c.require(rows.size() == grid.size(), "row count");
  double lo = INFINITY, hi = -INFINITY;
  int within = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];  // q, lambda, gamma, sim, se, inf, greedy
    if (i > 0) c.require(r[1] > rows[i - 1][1], "lambda* not increasing at q=" + f6(r[0]));
    c.require(r[5] <= r[1] && r[1] <= r[6], "sandwich fails at q=" + f6(r[0]));
    if (r[0] >= 0.05 - 1e-9 && r[0] <= 0.8 + 1e-9) {
      lo = std::min(lo, r[2]);
      hi = std::max(hi, r[2]);
    }
    within += std::abs(r[3] - r[1]) <= 3.0 * r[4];
  }
  c.require(hi - lo < 0.1, "gamma* spread " + f6(hi - lo));
  if (c.ok) {
    c.detail = "gamma* spread over [0.05,0.8] = " + f6(hi - lo) + "; sim within 3 SE at " +
               std::to_string(within) + "/" + std::to_string(rows.size()) + " points";
  }
  return c;
}

// 8. Gain due to feedback against the simulated no-feedback baseline.
Check gain_criterion() {
  Check c;
  const auto grid = default_q_grid();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = gain_study(grid, BetaSearch{}, kEpochs, kSeed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double best_gain = -INFINITY, best_q = 0.0;
  for (const auto& r : rows) {
    c.require(r.gain >= -3.0 * r.gain_stderr, "negative gain at q=" + f6(r.q));
    if (r.gain > best_gain) {
      best_gain = r.gain;
      best_q = r.q;
    }
  }
  c.require(rows.front().q == 0.05 && rows.front().gain < 0.1,
            "gain at q=0.05 is " + f6(rows.front().gain));
  c.require(best_q >= 0.25 - 1e-9 && best_q <= 0.55 + 1e-9, "argmax gain at q=" + f6(best_q));
  c.detail = "max gain " + f6(best_gain) + " at q=" + f6(best_q) + ", gain(0.05)=" +
             f6(rows.front().gain) + " (" + f6(secs) + " s)" + (c.ok ? "" : "; " + c.detail);
  return c;
}

// 9. Timeline invariants, renewal-reward consistency, bit-identical replay.
Check invariant_criterion(const std::string& sweep_csv) {
  Check c;
  const ChannelParams p(0.5);
  const double gamma = solve_lambda_star(p).gamma_star;

  std::uint64_t events = 0, violations = 0;
  double last_area = 0.0;
  const TimelineOptions long_run{1e6, kSeed, false};
  const auto tl = simulate_timeline(ThresholdGreedyPolicy{gamma}, p, long_run,
                                    [&](const TimelineEvent& ev) {
                                      ++events;
                                      const auto& s = *ev.state;
                                      if (s.battery != 0 && s.battery != 1) ++violations;
                                      if (ev.kind == TimelineEvent::Kind::attempt &&
                                          (ev.battery_before != 1 || s.battery != 0))
                                        ++violations;
                                      if (s.age_area < last_area) ++violations;
                                      last_area = s.age_area;
                                    });
  c.require(events >= 1'000'000, "only " + std::to_string(events) + " events");
  c.require(violations == 0, std::to_string(violations) + " invariant violations");

  for (const PolicyDescriptor& policy :
       {PolicyDescriptor{ThresholdGreedyPolicy{gamma}}, PolicyDescriptor{GreedyPolicy{}},
        PolicyDescriptor{NoFeedbackThresholdPolicy{0.5}}}) {
    const auto timeline = simulate_timeline(policy, p, {1e7, kSeed + 3, false});
    const auto epoch = std::visit(
        [&](const auto& pol) { return ratio_mean_aoi(pol, p, kEpochs, kSeed + 4); }, policy);
    const double se = std::hypot(timeline.std_error, epoch.std_error);
    c.require(std::abs(timeline.mean_aoi - epoch.mean_aoi) <= 3.0 * se,
              "renewal-reward mismatch for " + describe(policy));
  }

  const auto replay = simulate_timeline(ThresholdGreedyPolicy{gamma}, p, long_run);
  c.require(replay.mean_aoi == tl.mean_aoi && replay.std_error == tl.std_error, "timeline replay");
  const auto e1 = ratio_mean_aoi(ThresholdGreedyPolicy{gamma}, p, 100'000, kSeed, 4);
  const auto e2 = ratio_mean_aoi(ThresholdGreedyPolicy{gamma}, p, 100'000, kSeed, 4);
  c.require(e1.mean_aoi == e2.mean_aoi && e1.std_error == e2.std_error, "epoch replay");
  std::ostringstream again;
  write_sweep_csv(again, sweep_q(default_q_grid(), kEpochs, kSeed));
  c.require(again.str() == sweep_csv, "sweep CSV not byte-identical");
  if (c.ok) c.detail = std::to_string(events) + " events checked";
  return c;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* name, const std::function<Check()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !c.ok;
    std::printf("[%s] %s %s (%.1f s) %s\n", c.ok ? "PASS" : "FAIL", id, name, secs,
                c.detail.c_str());
    std::fflush(stdout);
  };

  std::string sweep_csv;
  report("AC1", "fixed-point solver", solver_criterion);
  report("AC2", "analytic/simulation agreement", agreement_criterion);
  report("AC3", "greedy closed form", greedy_criterion);
  report("AC4", "threshold grid search", threshold_search_criterion);
  report("AC5", "piecewise p(lambda) integrity", p_lambda_criterion);
  report("AC6", "moment oracle", moment_criterion);
  report("AC7", "q sweep", [&] { return sweep_criterion(sweep_csv); });
  report("AC8", "gain due to feedback", gain_criterion);
  report("AC9", "invariant suite", [&] { return invariant_criterion(sweep_csv); });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
