// Copyright 2026 The hmm2sid Authors.
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

#ifndef HMM2SID_TRAIN_CONFIG_HPP_
#define HMM2SID_TRAIN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace hmm2sid {

struct TrainConfig {
  int states = 5;
  int mixtures = 5;
  // Longest forward jump of the left-to-right topology.
  int max_jump = 2;
  int max_iterations = 40;
  // Stop once the relative corpus log-likelihood gain drops below this.
  // Values <= 0 run all max_iterations.
  double tolerance = 1e-5;
  double variance_floor_scale = 1e-4;
  int kmeans_iterations = 20;
  std::uint64_t seed = 1;
  // E-step worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

// Outcome of a Baum-Welch run.
template <typename Model>
struct TrainResult {
  Model model;
  // Corpus log-likelihood of the starting model followed by the value after
  // each completed iteration.
  std::vector<double> log_likelihoods;
  int iterations = 0;
  bool converged = false;
  // Human-readable notes on starved states / contexts kept at old values.
  std::vector<std::string> flags;
};

}  // namespace hmm2sid

#endif  // HMM2SID_TRAIN_CONFIG_HPP_
