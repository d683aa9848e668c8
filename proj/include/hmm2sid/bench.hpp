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

// Timing sweep of the forward lattice recursions over the number of states.

#ifndef HMM2SID_BENCH_HPP_
#define HMM2SID_BENCH_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmm2sid/numerics.hpp"

namespace hmm2sid {

struct BenchConfig {
  Index min_states = 3;
  Index max_states = 9;
  Index length = 200;
  std::uint64_t seed = 1;
  // Each timing is the best of `batches` batches, each running long enough
  // to cover `batch_seconds`.
  int batches = 5;
  double batch_seconds = 0.02;
};

struct BenchRow {
  int order = 1;
  Index states = 0;
  Index length = 0;
  double seconds = 0;
};

// Times forward1 and forward2 over random ergodic models with precomputed
// emission scores, so only the lattice recursion is measured.
std::vector<BenchRow> run_bench(const BenchConfig& config);

// Least-squares slope of log(seconds) against log(states) for one order.
double loglog_slope(const std::vector<BenchRow>& rows, int order);

// "order,states,length,seconds" followed by one line per row.
std::string bench_csv(const std::vector<BenchRow>& rows);

// Parses "A..B" (or a single "A") into an inclusive range.
std::pair<Index, Index> parse_range(std::string_view text);

}  // namespace hmm2sid

#endif  // HMM2SID_BENCH_HPP_
