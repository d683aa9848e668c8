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

#ifndef HMM2SID_TOPOLOGY_HPP_
#define HMM2SID_TOPOLOGY_HPP_

#include <cmath>
#include <string>

#include "hmm2sid/errors.hpp"
#include "hmm2sid/numerics.hpp"

namespace hmm2sid {

// Which initial states, first-order arcs i -> j and final states may carry
// probability. A second-order triple (i, j, k) is allowed when both i -> j
// and j -> k are. Only paths ending in a final state count towards the
// likelihood.
struct Topology {
  MaskVector initial;
  MaskMatrix arcs;
  MaskVector final;

  Index states() const { return initial.size(); }

  bool arc(Index i, Index j) const { return arcs(i, j); }
  bool triple(Index i, Index j, Index k) const { return arcs(i, j) && arcs(j, k); }
  bool has_successor(Index j) const { return arcs.row(j).any(); }

  MaskVector successors(Index j) const { return arcs.row(j).transpose(); }

  // 0 for final states, -inf elsewhere.
  template <typename Scalar = double>
  VectorX<Scalar> log_final() const {
    return final.select(VectorX<Scalar>::Zero(states()), VectorX<Scalar>::Constant(states(), kLogZero<Scalar>));
  }

  void validate() const {
    if (initial.size() < 1) throw InvariantError("topology needs at least one state");
    if (arcs.rows() != initial.size() || arcs.cols() != initial.size()) {
      throw InvariantError("topology arc mask must be N x N");
    }
    if (!initial.any()) throw InvariantError("topology allows no initial state");
    if (final.size() != initial.size()) throw InvariantError("topology final mask must have N entries");
    if (!final.any()) throw InvariantError("topology allows no final state");
  }

  static Topology ergodic(Index n) {
    return Topology{MaskVector::Constant(n, true), MaskMatrix::Constant(n, n, true), MaskVector::Constant(n, true)};
  }

  // Bakis model: self-loop plus forward jumps of at most max_jump states,
  // entry pinned to the first state and exit to the last.
  static Topology left_to_right(Index n, Index max_jump) {
    if (n < 1 || max_jump < 0) throw UsageError("left-to-right topology needs N >= 1, jump >= 0");
    Topology t{MaskVector::Constant(n, false), MaskMatrix::Constant(n, n, false), MaskVector::Constant(n, false)};
    t.initial(0) = true;
    t.final(n - 1) = true;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n && j <= i + max_jump; ++j) t.arcs(i, j) = true;
    }
    return t;
  }

  // Strict chain 0 -> 1 -> ... -> N-1 with no self-loops; the last state has
  // no successor. Any state may end a path.
  static Topology chain(Index n) {
    Topology t{MaskVector::Constant(n, false), MaskMatrix::Constant(n, n, false), MaskVector::Constant(n, true)};
    t.initial(0) = true;
    for (Index i = 0; i + 1 < n; ++i) t.arcs(i, i + 1) = true;
    return t;
  }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.initial.size() == b.initial.size() && (a.initial == b.initial).all() &&
           (a.arcs == b.arcs).all() && (a.final == b.final).all();
  }
};

// Checks one stored distribution against its mask: masked entries exactly 0,
// allowed entries finite and non-negative summing to one. A mask with no
// allowed entries requires an all-zero row.
template <typename Derived>
void check_masked_distribution(const Eigen::MatrixBase<Derived>& p, const MaskVector& mask,
                               const std::string& what) {
  if (p.size() != mask.size()) throw InvariantError(what + ": size does not match topology");
  for (Index k = 0; k < p.size(); ++k) {
    const double v = double(p(k));
    if (!std::isfinite(v) || v < 0) throw InvariantError(what + ": entries must be finite and >= 0");
    if (!mask(k) && v != 0) {
      throw InvariantError(what + ": disallowed entry " + std::to_string(k) + " is non-zero");
    }
  }
  if (!mask.any()) return;
  if (!sums_to_one(p)) {
    throw InvariantError(what + " sums to " + std::to_string(double(p.sum())) + ", expected 1");
  }
}

}  // namespace hmm2sid

#endif  // HMM2SID_TOPOLOGY_HPP_
