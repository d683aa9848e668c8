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

#include "hmm2sid/bench.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>

#include "hmm2sid/hmm1.hpp"
#include "hmm2sid/hmm2.hpp"

namespace hmm2sid {

namespace {

Eigen::MatrixXd random_rows(std::mt19937_64& rng, Index rows, Index cols) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = u(rng);
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

std::vector<GaussianMixtured> unit_emissions(Index n) {
  return std::vector<GaussianMixtured>(
      static_cast<std::size_t>(n), GaussianMixtured::single(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)));
}

template <typename Fn>
double best_time(const BenchConfig& config, Fn&& fn) {
  using Clock = std::chrono::steady_clock;
  double sink = 0;
  // Calibrate the repetition count so one batch covers batch_seconds.
  long reps = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (long r = 0; r < reps; ++r) sink += fn();
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    if (dt >= config.batch_seconds || reps > (1L << 30)) break;
    reps *= 2;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int b = 0; b < config.batches; ++b) {
    const auto t0 = Clock::now();
    for (long r = 0; r < reps; ++r) sink += fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count() / double(reps));
  }
  if (std::isnan(sink)) std::fputs("", stderr);
  return best;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  if (config.min_states < 1 || config.max_states < config.min_states || config.length < 1 ||
      config.batches < 1) {
    throw UsageError("bench: need 1 <= min states <= max states, length >= 1 and batches >= 1");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<BenchRow> rows;
  for (int order : {1, 2}) {
    for (Index n = config.min_states; n <= config.max_states; ++n) {
      Eigen::MatrixXd log_b(n, config.length);
      for (Index t = 0; t < config.length; ++t) {
        for (Index s = 0; s < n; ++s) log_b(s, t) = g(rng);
      }
      const Topology topo = Topology::ergodic(n);
      const Eigen::VectorXd initial = random_rows(rng, 1, n).transpose();
      double seconds = 0;
      if (order == 1) {
        const Hmm1Modeld m(initial, random_rows(rng, n, n), unit_emissions(n), topo);
        seconds = best_time(config, [&] { return forward1_from_emissions(m, log_b).log_likelihood; });
      } else {
        const Hmm2Modeld m(initial, random_rows(rng, n, n), random_rows(rng, n * n, n), unit_emissions(n), topo);
        seconds = best_time(config, [&] { return forward2_from_emissions(m, log_b).log_likelihood; });
      }
      rows.push_back(BenchRow{order, n, config.length, seconds});
    }
  }
  return rows;
}

double loglog_slope(const std::vector<BenchRow>& rows, int order) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, count = 0;
  for (const auto& r : rows) {
    if (r.order != order) continue;
    const double x = std::log(double(r.states)), y = std::log(r.seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1;
  }
  const double den = count * sxx - sx * sx;
  if (count < 2 || den <= 0) throw UsageError("loglog_slope: need at least two distinct state counts");
  return (count * sxy - sx * sy) / den;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "order,states,length,seconds\n";
  char line[96];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%d,%ld,%ld,%.9g\n", r.order, long(r.states), long(r.length), r.seconds);
    out += line;
  }
  return out;
}

std::pair<Index, Index> parse_range(std::string_view text) {
  auto number = [text](std::string_view s) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw UsageError("bad range '" + std::string(text) + "' (expected A..B)");
    }
    return static_cast<Index>(v);
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const Index v = number(text);
    return {v, v};
  }
  const Index lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
  if (lo > hi) throw UsageError("bad range '" + std::string(text) + "': start exceeds end");
  return {lo, hi};
}

}  // namespace hmm2sid
