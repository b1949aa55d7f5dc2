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

// Solve for the optimal threshold at a few erasure probabilities and check
// each answer against both simulators.

#include <cstdio>

#include "aoifb/aoifb.hpp"

int main() {
  std::printf("%6s %10s %10s %12s %12s\n", "q", "lambda*", "gamma*", "epoch sim", "timeline");
  for (double q : {0.2, 0.5, 0.8}) {
    const aoifb::ChannelParams params(q);
    const auto sol = aoifb::solve_lambda_star(params);
    const aoifb::ThresholdGreedyPolicy policy{sol.gamma_star};
    const auto epochs = aoifb::ratio_mean_aoi(policy, params, 200'000, 1);
    const auto timeline = aoifb::simulate_timeline(policy, params, {1e6, 1, false});
    std::printf("%6.2f %10.6f %10.6f %8.4f±%.4f %12.4f\n", q, sol.lambda_star, sol.gamma_star,
                epochs.mean_aoi, epochs.std_error, timeline.mean_aoi);
  }
}
