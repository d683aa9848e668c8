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

// Log-domain arithmetic shared by the probabilistic modules.
//
// Every probability inside a lattice or likelihood is carried as a natural
// log; negative infinity encodes probability zero and NaN is never a valid
// value.

#ifndef HMM2SID_NUMERICS_HPP_
#define HMM2SID_NUMERICS_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "hmm2sid/errors.hpp"

namespace hmm2sid {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
inline constexpr Scalar kLogZero = -std::numeric_limits<Scalar>::infinity();

// Transition and mixture-weight estimates are kept at or above this value.
inline constexpr double kProbabilityFloor = 1e-10;

// Tolerance for "sums to one" checks on stored distributions.
inline constexpr double kSumTolerance = 1e-9;

template <typename Scalar>
bool is_log_prob(Scalar x) {
  return !std::isnan(x) && x <= Scalar(0);
}

// log(sum(exp(xs))) with max subtraction. Returns exactly -inf when every
// entry is -inf.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  if (xs.size() == 0) throw UsageError("log_sum_exp of an empty list");
  const Scalar m = xs.maxCoeff();
  if (m == kLogZero<Scalar>) return kLogZero<Scalar>;
  if (m == std::numeric_limits<Scalar>::infinity()) return m;
  return m + std::log((xs.derived().array() - m).exp().sum());
}

template <typename Scalar>
Scalar log_sum_exp(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero<Scalar>) return a;
  return a + std::log1p(std::exp(b - a));
}

// log_sum_exp(x + y) over n contiguous entries, without temporaries. This is
// the inner kernel of the lattice recursions.
template <typename Scalar>
Scalar log_sum_exp_of_sum(const Scalar* x, const Scalar* y, Index n) {
  Scalar m = kLogZero<Scalar>;
  for (Index i = 0; i < n; ++i) m = std::max(m, x[i] + y[i]);
  if (m == kLogZero<Scalar> || m == std::numeric_limits<Scalar>::infinity()) return m;
  Scalar s = 0;
  for (Index i = 0; i < n; ++i) s += std::exp(x[i] + y[i] - m);
  return m + std::log(s);
}

// Shifts xs so that exp(xs) sums to one.
template <typename Derived>
typename Derived::PlainObject normalize_log(const Eigen::DenseBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  if (xs.size() == 0) throw UsageError("normalize_log of an empty list");
  const Scalar total = log_sum_exp(xs);
  if (total == kLogZero<Scalar>) {
    throw DegenerateDistributionError("normalize_log: every entry is -inf");
  }
  typename Derived::PlainObject out = xs.derived();
  out.array() -= total;
  return out;
}

// Maximizes sum_k counts_k * log(p_k) over distributions with p_k >= floor on
// allowed entries and p_k = 0 on masked entries. Without active floors this is
// plain count normalization; entries whose share would fall below the floor
// are pinned to it and the remaining mass is redistributed proportionally.
template <typename Derived>
VectorX<typename Derived::Scalar> floor_normalize(
    const Eigen::MatrixBase<Derived>& counts, const MaskVector& allowed,
    double floor = kProbabilityFloor) {
  using Scalar = typename Derived::Scalar;
  const Index n = counts.size();
  if (allowed.size() != n) throw UsageError("floor_normalize: mask size mismatch");
  const Index num_allowed = allowed.count();
  if (num_allowed == 0) throw DegenerateDistributionError("floor_normalize: no allowed entries");
  if (Scalar(num_allowed) * Scalar(floor) > Scalar(1)) {
    throw UsageError("floor_normalize: floor too large for support size");
  }
  Scalar total = 0;
  for (Index k = 0; k < n; ++k) {
    if (!allowed(k)) continue;
    if (!(counts(k) >= 0) || !std::isfinite(double(counts(k)))) {
      throw UsageError("floor_normalize: counts must be finite and non-negative");
    }
    total += counts(k);
  }
  if (!(total > 0)) throw DegenerateDistributionError("floor_normalize: zero total mass");

  MaskVector pinned = MaskVector::Constant(n, false);
  VectorX<Scalar> p = VectorX<Scalar>::Zero(n);
  for (;;) {
    Index num_pinned = 0;
    Scalar free_mass = 0;
    for (Index k = 0; k < n; ++k) {
      if (!allowed(k)) continue;
      if (pinned(k)) {
        ++num_pinned;
      } else {
        free_mass += counts(k);
      }
    }
    const Scalar budget = Scalar(1) - Scalar(num_pinned) * Scalar(floor);
    const Index num_free = num_allowed - num_pinned;
    bool changed = false;
    for (Index k = 0; k < n; ++k) {
      if (!allowed(k)) continue;
      if (pinned(k)) {
        p(k) = Scalar(floor);
        continue;
      }
      p(k) = free_mass > 0 ? budget * counts(k) / free_mass : budget / Scalar(num_free);
      if (p(k) < Scalar(floor)) {
        pinned(k) = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return p;
}

// Sum over a row/vector, used by invariant checks.
template <typename Derived>
bool sums_to_one(const Eigen::DenseBase<Derived>& p, double tol = kSumTolerance) {
  return std::abs(double(p.sum()) - 1.0) <= tol;
}

}  // namespace hmm2sid

#endif  // HMM2SID_NUMERICS_HPP_
