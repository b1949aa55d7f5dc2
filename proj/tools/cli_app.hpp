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

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "aoifb/aoifb.hpp"

namespace aoifb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Seed used when --seed is not given, so bare invocations are reproducible.
inline constexpr std::uint64_t kDefaultSeed = 20190401;

enum class Format { text, csv, json_lines };

struct CliConfig {
  std::string subcommand;
  double q = 0.0;
  std::optional<double> gamma;
  double beta = 0.0;
  std::string policy = "threshold-greedy";
  std::string method = "bisection";
  std::uint64_t epochs = kDefaultSweepEpochs;
  std::optional<double> horizon;
  bool truncate_tail = false;
  std::uint64_t seed = kDefaultSeed;
  double tol = kDefaultSolverTolerance;
  std::string output;  // empty: stdout
  unsigned replicas = 1;
  int beta_iterations = 40;
  std::vector<double> q_grid = default_q_grid();
  Format format = Format::text;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

using Fields = std::vector<std::pair<std::string, std::string>>;

inline std::string num(double v) { return aoifb::detail::fmt6(v); }

// One record in the requested format. Text is "key value" lines.
inline void emit_record(std::ostream& out, const Fields& fields, Format format) {
  switch (format) {
    case Format::text: {
      std::size_t width = 0;
      for (const auto& [k, v] : fields) width = std::max(width, k.size());
      for (const auto& [k, v] : fields) {
        out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
      }
      break;
    }
    case Format::csv: {
      for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i].first;
      out << '\n';
      for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i].second;
      out << '\n';
      break;
    }
    case Format::json_lines: {
      out << '{';
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& [k, v] = fields[i];
        // Values are either numbers or bare identifiers; quote the latter.
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        const bool numeric = !v.empty() && end && *end == '\0' && v != "inf" && v != "nan";
        out << (i ? "," : "") << '"' << k << "\":";
        if (numeric) {
          out << v;
        } else {
          out << '"' << v << '"';
        }
      }
      out << "}\n";
      break;
    }
  }
}

inline void validate(const CliConfig& cfg) {
  const bool needs_q = cfg.subcommand == "solve" || cfg.subcommand == "simulate";
  if (needs_q && !(cfg.q > 0.0 && cfg.q < 1.0)) {
    throw UsageError("--q must lie in (0, 1), got " + num(cfg.q));
  }
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be > 0");
  if (cfg.epochs == 0) throw UsageError("--epochs must be > 0");
  if (cfg.replicas == 0) throw UsageError("--replicas must be > 0");
  if (cfg.horizon && !(*cfg.horizon > 0.0)) throw UsageError("--horizon must be > 0");
  if (cfg.gamma && !(*cfg.gamma >= 0.0)) throw UsageError("--gamma must be >= 0");
  if (!(cfg.beta >= 0.0)) throw UsageError("--beta must be >= 0");
  if (cfg.beta_iterations < 1) throw UsageError("--beta-iterations must be >= 1");
}

inline void run_solve(const CliConfig& cfg, std::ostream& out) {
  const ChannelParams params(cfg.q);
  const auto sol = cfg.method == "dinkelbach" ? solve_dinkelbach_iteration(params, cfg.tol)
                                              : solve_lambda_star(params, cfg.tol);
  emit_record(out,
              {{"q", num(cfg.q)},
               {"lambda_star", num(sol.lambda_star)},
               {"gamma_star", num(sol.gamma_star)},
               {"residual", num(sol.residual)},
               {"iterations", std::to_string(sol.iterations)},
               {"method", std::string(to_string(sol.method))},
               {"infinite_battery", num(infinite_battery_aoi(params))},
               {"greedy_value", num(greedy_aoi(params))}},
              cfg.format);
}

inline void run_simulate(const CliConfig& cfg, std::ostream& out) {
  const ChannelParams params(cfg.q);
  const double gamma = cfg.gamma ? *cfg.gamma : solve_lambda_star(params).gamma_star;
  const double parameter = cfg.policy == "no-feedback" ? cfg.beta : gamma;
  const PolicyDescriptor policy = parse_policy(cfg.policy, parameter);

  SimEstimate est;
  std::string mode;
  if (cfg.horizon) {
    TimelineOptions opts{*cfg.horizon, cfg.seed, cfg.truncate_tail};
    est = simulate_timeline(policy, params, opts);
    mode = "timeline";
  } else {
    est = std::visit(
        [&](const auto& p) { return ratio_mean_aoi(p, params, cfg.epochs, cfg.seed, cfg.replicas); },
        policy);
    mode = "epochs";
  }
  emit_record(out,
              {{"q", num(cfg.q)},
               {"policy", est.policy_descriptor},
               {"mode", mode},
               {cfg.horizon ? "horizon" : "epochs", num(est.epochs_or_horizon)},
               {"seed", std::to_string(est.seed)},
               {"mean_aoi", num(est.mean_aoi)},
               {"stderr", num(est.std_error)}},
              cfg.format);
}

inline void add_common(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--replicas", cfg.replicas, "Independent replicas run in parallel")
      ->capture_default_str();
  sub->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
}

}  // namespace detail

/// Parses `args` (without the program name), runs the subcommand and returns
/// the process exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Optimal threshold-greedy status updating over an erasure channel with feedback"};
  app.require_subcommand(1);

  const std::map<std::string, Format> formats{
      {"text", Format::text}, {"csv", Format::csv}, {"json-lines", Format::json_lines}};

  auto* solve = app.add_subcommand("solve", "Solve for the optimal average age and threshold");
  solve->add_option("--q", cfg.q, "Erasure probability in (0, 1)")->required();
  solve->add_option("--tol", cfg.tol, "Tolerance on |p(lambda)|")->capture_default_str();
  solve->add_option("--method", cfg.method, "Root finder")
      ->check(CLI::IsMember({"bisection", "dinkelbach"}))
      ->capture_default_str();
  solve->add_option("--format", cfg.format, "Output format: text, csv, json-lines")
      ->transform(CLI::CheckedTransformer(formats))
      ->default_str("text");
  solve->add_option("--output,-o", cfg.output, "Output file (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "Estimate the average age of a policy");
  simulate->add_option("--q", cfg.q, "Erasure probability in (0, 1)")->required();
  simulate->add_option("--policy", cfg.policy, "Policy: threshold-greedy, greedy, no-feedback")
      ->check(CLI::IsMember({"threshold-greedy", "greedy", "no-feedback"}))
      ->capture_default_str();
  simulate->add_option("--gamma", cfg.gamma,
                       "Threshold for threshold-greedy (default: the optimal threshold)");
  simulate->add_option("--beta", cfg.beta, "Attempt spacing for no-feedback")
      ->capture_default_str();
  simulate->add_option("--epochs", cfg.epochs, "Epochs for the renewal-reward estimator")
      ->capture_default_str();
  simulate->add_option("--horizon", cfg.horizon,
                       "Run the full timeline up to this time instead (>= 1e4)");
  simulate->add_flag("--truncate-tail", cfg.truncate_tail,
                     "Timeline only: average up to the last success");
  simulate->add_option("--format", cfg.format, "Output format: text, csv, json-lines")
      ->transform(CLI::CheckedTransformer(formats))
      ->default_str("text");
  detail::add_common(simulate, cfg);

  auto* sweep = app.add_subcommand("sweep", "Optimal age and threshold across q (CSV)");
  sweep->add_option("--epochs", cfg.epochs, "Epochs simulated per grid point")
      ->capture_default_str();
  sweep->add_option("--q-grid", cfg.q_grid, "Erasure probabilities (default 0.05..0.95)");
  detail::add_common(sweep, cfg);

  auto* gain = app.add_subcommand("gain", "Gain due to feedback across q (CSV)");
  gain->add_option("--epochs", cfg.epochs, "Epochs per objective evaluation")
      ->capture_default_str();
  gain->add_option("--q-grid", cfg.q_grid, "Erasure probabilities (default 0.05..0.95)");
  gain->add_option("--beta-iterations", cfg.beta_iterations, "Golden-section iterations on [0, 5]")
      ->capture_default_str();
  detail::add_common(gain, cfg);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("aoifb");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  cfg.subcommand = app.get_subcommands().front()->get_name();

  std::ostringstream buffer;
  try {
    detail::validate(cfg);
    if (cfg.subcommand == "solve") {
      detail::run_solve(cfg, buffer);
    } else if (cfg.subcommand == "simulate") {
      detail::run_simulate(cfg, buffer);
    } else if (cfg.subcommand == "sweep") {
      const auto rows = sweep_q(cfg.q_grid, cfg.epochs, cfg.seed, cfg.replicas);
      write_sweep_csv(buffer, rows);
    } else {
      const auto rows = gain_study(cfg.q_grid, BetaSearch{0.0, 5.0, cfg.beta_iterations},
                                   cfg.epochs, cfg.seed, cfg.replicas);
      write_gain_csv(buffer, rows);
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::range_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  if (cfg.output.empty()) {
    out << buffer.str();
  } else {
    std::ofstream file(cfg.output, std::ios::binary);
    if (!file) {
      err << "error: cannot open " << cfg.output << '\n';
      return kExitRuntime;
    }
    file << buffer.str();
  }
  return kExitOk;
}

}  // namespace aoifb::cli
