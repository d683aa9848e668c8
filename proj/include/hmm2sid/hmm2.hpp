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

// Second-order continuous-density HMM.
//
// The hidden chain conditions each state on the two previous ones through an
// N x N x N tensor a(i, j, k) = P(q_t = k | q_{t-1} = j, q_{t-2} = i). The
// first transition uses an ordinary N x N matrix. Forward, backward and
// Viterbi recursions run over a lattice of state pairs (q_{t-1}, q_t), which
// makes each time step cost O(N^3) instead of the first-order O(N^2).
//
// Time is 0-based in code: frame t = 0 is the first observation, and the pair
// lattice has entries for t = 1..T-1 meaning (state at t-1, state at t).

#ifndef HMM2SID_HMM2_HPP_
#define HMM2SID_HMM2_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hmm2sid/emissions.hpp"
#include "hmm2sid/errors.hpp"
#include "hmm2sid/hmm1.hpp"
#include "hmm2sid/numerics.hpp"
#include "hmm2sid/observation.hpp"
#include "hmm2sid/topology.hpp"
#include "hmm2sid/train_config.hpp"

namespace hmm2sid {

template <typename Scalar>
class Hmm2Model {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Mixture = GaussianMixture<Scalar>;

  Hmm2Model() = default;

  // second_order is N^2 x N: row i * N + j holds a(i, j, .).
  Hmm2Model(Vector initial, Matrix first_order, Matrix second_order, std::vector<Mixture> emissions,
            Topology topology)
      : initial_(std::move(initial)),
        first_order_(std::move(first_order)),
        second_order_(std::move(second_order)),
        emissions_(std::move(emissions)),
        topology_(std::move(topology)) {
    validate();
  }

  Index states() const { return initial_.size(); }
  Index dim() const { return emissions_.front().dim(); }
  Index mixtures() const { return emissions_.front().components(); }
  const Vector& initial() const { return initial_; }
  const Matrix& first_order() const { return first_order_; }
  const Matrix& second_order() const { return second_order_; }
  const std::vector<Mixture>& emissions() const { return emissions_; }
  const Topology& topology() const { return topology_; }

  Scalar transition(Index i, Index j, Index k) const { return second_order_(i * states() + j, k); }
  auto context_row(Index i, Index j) const { return second_order_.row(i * states() + j); }

  // Successor mask of context (i, j); empty for contexts the topology can
  // never produce.
  MaskVector context_mask(Index i, Index j) const {
    return topology_.arc(i, j) ? topology_.successors(j) : MaskVector::Constant(states(), false);
  }

  // A context is live when it can occur and has at least one successor.
  bool context_live(Index i, Index j) const { return topology_.arc(i, j) && topology_.has_successor(j); }

 private:
  void validate() const {
    topology_.validate();
    const Index n = topology_.states();
    if (initial_.size() != n || first_order_.rows() != n || first_order_.cols() != n ||
        second_order_.rows() != n * n || second_order_.cols() != n ||
        static_cast<Index>(emissions_.size()) != n) {
      throw InvariantError("hmm2: parameter shapes do not match N = " + std::to_string(n));
    }
    check_masked_distribution(initial_, topology_.initial, "hmm2 initial distribution");
    for (Index i = 0; i < n; ++i) {
      check_masked_distribution(first_order_.row(i).transpose(), topology_.successors(i),
                                "hmm2 first-order row " + std::to_string(i));
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        check_masked_distribution(context_row(i, j).transpose(), context_mask(i, j),
                                  "hmm2 second-order row (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
      }
    }
    for (const auto& e : emissions_) {
      if (e.dim() != emissions_.front().dim() ||
          e.components() != emissions_.front().components()) {
        throw InvariantError("hmm2: all state mixtures must share M and d");
      }
    }
  }

  Vector initial_;
  Matrix first_order_;
  Matrix second_order_;
  std::vector<Mixture> emissions_;
  Topology topology_;
};

using Hmm2Modeld = Hmm2Model<double>;

// Log-domain table over (t, previous state j, current state k).
template <typename Scalar>
struct PairLattice {
  // log(pi_i b_i(O_0)); only filled for forward and Viterbi lattices.
  VectorX<Scalar> initial;
  // table[t](j, k) for t = 1..T-1; table[0] is left empty.
  std::vector<MatrixX<Scalar>> table;
  // Viterbi only: best predecessor i of (j, k) at time t.
  std::vector<Eigen::MatrixXi> backptr;

  Index length() const { return static_cast<Index>(table.size()); }
  const MatrixX<Scalar>& at(Index t) const { return table[static_cast<std::size_t>(t)]; }
  MatrixX<Scalar>& at(Index t) { return table[static_cast<std::size_t>(t)]; }
};

template <typename Scalar>
struct Forward2Result {
  Scalar log_likelihood;
  PairLattice<Scalar> alpha;
};

template <typename Scalar>
struct Viterbi2Result {
  std::vector<Index> path;
  Scalar score;
  PairLattice<Scalar> delta;
};

namespace detail {

// Log transition tables laid out for the inner loops: `by_pair` column
// j * N + k holds log a(., j, k), `by_context` column i * N + j holds
// log a(i, j, .).
template <typename Scalar>
struct LogTransitions2 {
  VectorX<Scalar> initial;
  MatrixX<Scalar> first_order;
  MatrixX<Scalar> by_pair;
  MatrixX<Scalar> by_context;

  explicit LogTransitions2(const Hmm2Model<Scalar>& m)
      : initial(m.initial().array().log().matrix()),
        first_order(m.first_order().array().log().matrix()),
        by_context(m.second_order().array().log().matrix().transpose()) {
    const Index n = m.states();
    by_pair.resize(n, n * n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        for (Index k = 0; k < n; ++k) by_pair(i, j * n + k) = by_context(k, i * n + j);
      }
    }
  }
};

template <typename Scalar>
void check_indices(const Hmm2Model<Scalar>& m, const std::vector<Index>& q) {
  if (q.empty()) throw UsageError("state sequence must have length >= 1");
  for (Index s : q) {
    if (s < 0 || s >= m.states()) {
      throw UsageError("state index " + std::to_string(s) + " out of range [0, " +
                       std::to_string(m.states()) + ")");
    }
  }
}

}  // namespace detail

// log P(Q): pi(q_0) a(q_0, q_1) prod_{t>=2} a(q_{t-2}, q_{t-1}, q_t); -inf
// when the last state is not final.
template <typename Scalar>
Scalar sequence_prob(const Hmm2Model<Scalar>& m, const std::vector<Index>& q) {
  detail::check_indices(m, q);
  Scalar lp = std::log(m.initial()(q[0]));
  if (q.size() >= 2) lp += std::log(m.first_order()(q[0], q[1]));
  for (std::size_t t = 2; t < q.size(); ++t) lp += std::log(m.transition(q[t - 2], q[t - 1], q[t]));
  if (!m.topology().final(q.back())) return kLogZero<Scalar>;
  return lp;
}

// log P(Q, O): the state-sequence probability interleaved with the emission
// densities of each visited state.
template <typename Scalar>
Scalar joint_prob(const Hmm2Model<Scalar>& m, const std::vector<Index>& q,
                  const ObservationSequence<Scalar>& o) {
  detail::check_indices(m, q);
  detail::check_dimension(m.dim(), o);
  if (static_cast<Index>(q.size()) != o.length()) {
    throw UsageError("joint_prob: state sequence length " + std::to_string(q.size()) +
                     " != observation length " + std::to_string(o.length()));
  }
  const auto& b = m.emissions();
  Scalar lp = std::log(m.initial()(q[0])) + b[static_cast<std::size_t>(q[0])].log_density(o.frame(0));
  for (std::size_t t = 1; t < q.size(); ++t) {
    const Scalar a = t == 1 ? m.first_order()(q[0], q[1]) : m.transition(q[t - 2], q[t - 1], q[t]);
    lp += std::log(a) + b[static_cast<std::size_t>(q[t])].log_density(o.frame(static_cast<Index>(t)));
  }
  if (!m.topology().final(q.back())) return kLogZero<Scalar>;
  return lp;
}

template <typename Scalar>
Forward2Result<Scalar> forward2_from_emissions(const Hmm2Model<Scalar>& m,
                                               const MatrixX<Scalar>& log_b) {
  const Index n = m.states();
  const Index t_len = log_b.cols();
  if (log_b.rows() != n || t_len < 1) throw UsageError("forward2: emission matrix must be N x T, T >= 1");
  const detail::LogTransitions2<Scalar> lt(m);
  Forward2Result<Scalar> r;
  auto& alpha = r.alpha;
  alpha.initial = lt.initial + log_b.col(0);
  alpha.table.resize(static_cast<std::size_t>(t_len));
  const VectorX<Scalar> log_final = m.topology().template log_final<Scalar>();
  if (t_len == 1) {
    r.log_likelihood = log_sum_exp(alpha.initial + log_final);
    return r;
  }
  alpha.at(1) = (lt.first_order.colwise() + alpha.initial).rowwise() + log_b.col(1).transpose();
  for (Index t = 2; t < t_len; ++t) {
    const MatrixX<Scalar>& prev = alpha.at(t - 1);
    MatrixX<Scalar>& cur = alpha.at(t);
    cur.resize(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        cur(j, k) = log_sum_exp_of_sum(&prev(0, j), &lt.by_pair(0, j * n + k), n) + log_b(k, t);
      }
    }
  }
  r.log_likelihood = log_sum_exp((alpha.at(t_len - 1).rowwise() + log_final.transpose()).reshaped());
  return r;
}

template <typename Scalar>
Forward2Result<Scalar> forward2(const Hmm2Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  return forward2_from_emissions(m, emission_log_likelihoods(m.emissions(), o));
}

// beta_t(i, j) = log P(O_{t+1..T-1} | q_{t-1} = i, q_t = j), with
// beta_{T-1} = 0 and beta_{t-1}(i, j) = log sum_k a(i, j, k) b_k(O_t) beta_t(j, k).
template <typename Scalar>
PairLattice<Scalar> backward2_from_emissions(const Hmm2Model<Scalar>& m,
                                             const MatrixX<Scalar>& log_b) {
  const Index n = m.states();
  const Index t_len = log_b.cols();
  if (t_len < 2) throw UsageError("backward2: the pair lattice needs T >= 2");
  const detail::LogTransitions2<Scalar> lt(m);
  PairLattice<Scalar> beta;
  beta.table.resize(static_cast<std::size_t>(t_len));
  beta.at(t_len - 1) = m.topology().template log_final<Scalar>().transpose().replicate(n, 1);
  VectorX<Scalar> next(n);
  for (Index t = t_len - 1; t >= 2; --t) {
    const MatrixX<Scalar>& later = beta.at(t);
    MatrixX<Scalar>& cur = beta.at(t - 1);
    cur.resize(n, n);
    for (Index j = 0; j < n; ++j) {
      next = log_b.col(t) + later.row(j).transpose();
      for (Index i = 0; i < n; ++i) cur(i, j) = log_sum_exp_of_sum(&lt.by_context(0, i * n + j), next.data(), n);
    }
  }
  return beta;
}

template <typename Scalar>
PairLattice<Scalar> backward2(const Hmm2Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  if (o.length() < 2) throw UsageError("backward2: the pair lattice needs T >= 2");
  return backward2_from_emissions(m, emission_log_likelihoods(m.emissions(), o));
}

// Extended Viterbi over state pairs. Ties go to the lowest predecessor i in
// the recursion and to the lowest (j, k), j first, at the final frame.
template <typename Scalar>
Viterbi2Result<Scalar> viterbi2(const Hmm2Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  const MatrixX<Scalar> log_b = emission_log_likelihoods(m.emissions(), o);
  const detail::LogTransitions2<Scalar> lt(m);
  const Index n = m.states();
  const Index t_len = o.length();
  Viterbi2Result<Scalar> r;
  auto& delta = r.delta;
  delta.initial = lt.initial + log_b.col(0);
  delta.table.resize(static_cast<std::size_t>(t_len));
  delta.backptr.resize(static_cast<std::size_t>(t_len));
  auto no_path = [&] {
    return NoValidPathError("viterbi2: no state path can emit '" + o.source_id() +
                            "' (T = " + std::to_string(t_len) + ")");
  };
  const VectorX<Scalar> log_final = m.topology().template log_final<Scalar>();
  if (t_len == 1) {
    Index best = 0;
    r.score = (delta.initial + log_final).maxCoeff(&best);
    if (r.score == kLogZero<Scalar>) throw no_path();
    r.path = {best};
    return r;
  }
  delta.at(1) = (lt.first_order.colwise() + delta.initial).rowwise() + log_b.col(1).transpose();
  for (Index t = 2; t < t_len; ++t) {
    const MatrixX<Scalar>& prev = delta.at(t - 1);
    MatrixX<Scalar>& cur = delta.at(t);
    Eigen::MatrixXi& back = delta.backptr[static_cast<std::size_t>(t)];
    cur.resize(n, n);
    back.setZero(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        Scalar best = kLogZero<Scalar>;
        int arg = 0;
        for (Index i = 0; i < n; ++i) {
          const Scalar v = prev(i, j) + lt.by_pair(i, j * n + k);
          if (v > best) {
            best = v;
            arg = static_cast<int>(i);
          }
        }
        cur(j, k) = best + log_b(k, t);
        back(j, k) = arg;
      }
    }
  }
  const MatrixX<Scalar>& last = delta.at(t_len - 1);
  Scalar best = kLogZero<Scalar>;
  Index bj = 0;
  Index bk = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      if (last(j, k) + log_final(k) > best) {
        best = last(j, k) + log_final(k);
        bj = j;
        bk = k;
      }
    }
  }
  if (best == kLogZero<Scalar>) throw no_path();
  r.score = best;
  r.path.assign(static_cast<std::size_t>(t_len), 0);
  r.path[static_cast<std::size_t>(t_len - 1)] = bk;
  r.path[static_cast<std::size_t>(t_len - 2)] = bj;
  for (Index t = t_len - 1; t >= 2; --t) {
    const auto ut = static_cast<std::size_t>(t);
    r.path[ut - 2] = delta.backptr[ut](r.path[ut - 1], r.path[ut]);
  }
  return r;
}

// Embeds a first-order model: a(i, j, k) = a(j, k) for every i.
template <typename Scalar>
Hmm2Model<Scalar> lift_hmm1(const Hmm1Model<Scalar>& m1) {
  const Index n = m1.states();
  const Topology& topo = m1.topology();
  MatrixX<Scalar> second = MatrixX<Scalar>::Zero(n * n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (topo.arc(i, j)) second.row(i * n + j) = m1.transitions().row(j);
    }
  }
  return Hmm2Model<Scalar>(m1.initial(), m1.transitions(), std::move(second), m1.emissions(), topo);
}

// Draws a state path of the given length conditioned on ending in a final
// state, then one frame per state.
template <typename Scalar, typename Rng>
std::pair<std::vector<Index>, ObservationSequence<Scalar>> sample(const Hmm2Model<Scalar>& m,
                                                                  Index length, Rng& rng) {
  if (length < 1) throw UsageError("sample: length must be >= 1");
  const Index n = m.states();
  const auto len = static_cast<std::size_t>(length);
  // reach[t](j, k) = log P(q_{T-1} final | q_{t-1} = j, q_t = k) for t >= 1,
  // and reach0(i) the same given q_0 = i, over transitions alone.
  std::vector<MatrixX<Scalar>> reach(len, MatrixX<Scalar>::Zero(n, n));
  VectorX<Scalar> reach0 = VectorX<Scalar>::Zero(n);
  if (!m.topology().final.all()) {
    const VectorX<Scalar> log_final = m.topology().template log_final<Scalar>();
    const detail::LogTransitions2<Scalar> lt(m);
    if (length == 1) {
      reach0 = log_final;
    } else {
      reach[len - 1] = log_final.transpose().replicate(n, 1);
      for (std::size_t t = len - 1; t >= 2; --t) {
        const MatrixX<Scalar> next = reach[t].transpose();
        for (Index j = 0; j < n; ++j) {
          for (Index k = 0; k < n; ++k) {
            reach[t - 1](j, k) = log_sum_exp_of_sum(&lt.by_context(0, j * n + k), &next(0, k), n);
          }
        }
      }
      for (Index i = 0; i < n; ++i) {
        reach0(i) = log_sum_exp((lt.first_order.row(i) + reach[1].row(i)).transpose().eval());
      }
    }
  }
  auto draw = [&rng](const VectorX<Scalar>& p, const VectorX<Scalar>& log_reach, const std::string& what) {
    // std::exp, since the vectorized exp does not map -inf to exactly zero.
    const VectorX<Scalar> w =
        (p.array() * log_reach.array().unaryExpr([](Scalar v) { return std::exp(v); })).matrix();
    if (!(w.sum() > 0)) throw GeneratorError("sample: " + what + " has no mass that can reach a final state");
    std::discrete_distribution<Index> d(w.data(), w.data() + w.size());
    return d(rng);
  };
  std::vector<Index> q(len);
  MatrixX<Scalar> frames(m.dim(), length);
  for (std::size_t t = 0; t < len; ++t) {
    if (t == 0) {
      q[t] = draw(m.initial(), reach0, "initial distribution");
    } else if (t == 1) {
      q[t] = draw(m.first_order().row(q[0]).transpose(), reach[1].row(q[0]).transpose(),
                  "first-order row " + std::to_string(q[0]));
    } else {
      q[t] = draw(m.context_row(q[t - 2], q[t - 1]).transpose(), reach[t].row(q[t - 1]).transpose(),
                  "context (" + std::to_string(q[t - 2]) + ", " + std::to_string(q[t - 1]) + ")");
    }
    frames.col(static_cast<Index>(t)) = m.emissions()[static_cast<std::size_t>(q[t])].sample(rng);
  }
  return {std::move(q), ObservationSequence<Scalar>(std::move(frames), "sampled")};
}

template <typename Scalar>
std::pair<std::vector<Index>, ObservationSequence<Scalar>> sample(const Hmm2Model<Scalar>& m,
                                                                  Index length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(m, length, rng);
}

// Expected counts gathered by one E-step over a corpus.
template <typename Scalar>
struct Hmm2Stats {
  VectorX<Scalar> initial;
  MatrixX<Scalar> first_order;
  MatrixX<Scalar> second_order;  // N^2 x N, same layout as the model
  std::vector<MixtureAccumulator<Scalar>> mixtures;
  double log_likelihood = 0;

  explicit Hmm2Stats(const Hmm2Model<Scalar>& m)
      : initial(VectorX<Scalar>::Zero(m.states())),
        first_order(MatrixX<Scalar>::Zero(m.states(), m.states())),
        second_order(MatrixX<Scalar>::Zero(m.states() * m.states(), m.states())) {
    for (const auto& e : m.emissions()) mixtures.emplace_back(e);
  }

  void merge(const Hmm2Stats& o) {
    initial += o.initial;
    first_order += o.first_order;
    second_order += o.second_order;
    for (std::size_t i = 0; i < mixtures.size(); ++i) mixtures[i].merge(o.mixtures[i]);
    log_likelihood += o.log_likelihood;
  }
};

namespace detail {

// Posteriors of one sequence. Arc posteriors are
// eta_t(i, j, k) = alpha_t(i, j) a(i, j, k) b_k(O_{t+1}) beta_{t+1}(j, k) / P(O),
// state occupancies gamma_t(k) = sum_j alpha_t(j, k) beta_t(j, k) / P(O), and
// the t = 0, 1 boundary pair posterior drives pi and the first-order matrix.
template <typename Scalar>
void accumulate2(const Hmm2Model<Scalar>& m, const ObservationSequence<Scalar>& o,
                 Hmm2Stats<Scalar>& s) {
  const Index n = m.states();
  const Index t_len = o.length();
  const MatrixX<Scalar> log_b = emission_log_likelihoods(m.emissions(), o);
  const auto fwd = forward2_from_emissions(m, log_b);
  const Scalar log_p = fwd.log_likelihood;
  if (log_p == kLogZero<Scalar>) {
    throw NoValidPathError("baum_welch2: '" + o.source_id() + "' has zero likelihood");
  }
  MatrixX<Scalar> gamma(n, t_len);
  if (t_len == 1) {
    gamma.col(0) = (fwd.alpha.initial.array() + m.topology().template log_final<Scalar>().array() - log_p)
                       .exp()
                       .matrix();
    s.initial += gamma.col(0);
  } else {
    const auto beta = backward2_from_emissions(m, log_b);
    const LogTransitions2<Scalar> lt(m);
    const MatrixX<Scalar> pair = ((fwd.alpha.at(1) + beta.at(1)).array() - log_p).exp().matrix();
    s.first_order += pair;
    s.initial += pair.rowwise().sum();
    gamma.col(0) = pair.rowwise().sum();
    gamma.col(1) = pair.colwise().sum().transpose();
    for (Index t = 2; t < t_len; ++t) {
      gamma.col(t) =
          ((fwd.alpha.at(t) + beta.at(t)).array() - log_p).exp().colwise().sum().transpose().matrix();
    }
    VectorX<Scalar> next(n);
    for (Index t = 1; t + 1 < t_len; ++t) {
      const MatrixX<Scalar>& a_t = fwd.alpha.at(t);
      const MatrixX<Scalar>& b_next = beta.at(t + 1);
      for (Index j = 0; j < n; ++j) {
        next = log_b.col(t + 1) + b_next.row(j).transpose();
        for (Index i = 0; i < n; ++i) {
          const Scalar a = a_t(i, j) - log_p;
          if (a == kLogZero<Scalar>) continue;
          const auto row = i * n + j;
          s.second_order.row(row) +=
              (lt.by_context.col(row) + next).array().unaryExpr([a](Scalar v) {
                return v == kLogZero<Scalar> ? Scalar(0) : std::exp(a + v);
              }).matrix().transpose();
        }
      }
    }
  }
  for (Index t = 0; t < t_len; ++t) {
    for (Index k = 0; k < n; ++k) {
      s.mixtures[static_cast<std::size_t>(k)].add_posterior(m.emissions()[static_cast<std::size_t>(k)],
                                                            o.frame(t), gamma(k, t));
    }
  }
  s.log_likelihood += double(log_p);
}

}  // namespace detail

template <typename Scalar>
Hmm2Stats<Scalar> estep2(const Hmm2Model<Scalar>& m,
                         const std::vector<ObservationSequence<Scalar>>& corpus, unsigned threads) {
  return detail::blocked_estep<Hmm2Stats<Scalar>>(
      m, corpus, threads, [](const auto& model, const auto& o, auto& s) { detail::accumulate2(model, o, s); });
}

// M-step. Starved states and contexts keep their previous parameters and are
// reported through `flags`.
template <typename Scalar>
Hmm2Model<Scalar> mstep2(const Hmm2Model<Scalar>& m, const Hmm2Stats<Scalar>& s,
                         const VectorX<Scalar>& variance_floor, std::vector<std::string>* flags) {
  const Index n = m.states();
  const Topology& topo = m.topology();
  auto flag = [flags](std::string msg) {
    if (flags != nullptr) flags->push_back(std::move(msg));
  };
  auto mass = [](const VectorX<Scalar>& counts, const MaskVector& mask) {
    return (counts.array() * mask.template cast<Scalar>()).sum();
  };
  VectorX<Scalar> initial = floor_normalize(s.initial, topo.initial);
  MatrixX<Scalar> first = m.first_order();
  for (Index i = 0; i < n; ++i) {
    if (!topo.has_successor(i)) continue;
    const VectorX<Scalar> row = s.first_order.row(i).transpose();
    if (mass(row, topo.successors(i)) > Scalar(0)) {
      first.row(i) = floor_normalize(row, topo.successors(i)).transpose();
    }
  }
  MatrixX<Scalar> second = m.second_order();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (!m.context_live(i, j)) continue;
      const VectorX<Scalar> row = s.second_order.row(i * n + j).transpose();
      const MaskVector mask = m.context_mask(i, j);
      if (mass(row, mask) > Scalar(0)) {
        second.row(i * n + j) = floor_normalize(row, mask).transpose();
      } else {
        flag("context (" + std::to_string(i) + ", " + std::to_string(j) + ") starved");
      }
    }
  }
  std::vector<GaussianMixture<Scalar>> emissions;
  for (Index k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    if (s.mixtures[uk].total() > Scalar(kStarvedMass)) {
      emissions.push_back(reestimate_mixture(s.mixtures[uk], variance_floor, &m.emissions()[uk]));
    } else {
      flag("state " + std::to_string(k) + " starved");
      emissions.push_back(m.emissions()[uk]);
    }
  }
  return Hmm2Model<Scalar>(std::move(initial), std::move(first), std::move(second),
                           std::move(emissions), topo);
}

// Second-order Baum-Welch: EM over the pair-state lattice.
template <typename Scalar>
TrainResult<Hmm2Model<Scalar>> baum_welch2(const Hmm2Model<Scalar>& m,
                                           const std::vector<ObservationSequence<Scalar>>& corpus,
                                           const TrainConfig& config) {
  detail::check_corpus(corpus, m.dim());
  const VectorX<Scalar> floor = variance_floor_from(corpus, config.variance_floor_scale);
  TrainResult<Hmm2Model<Scalar>> r{m, {}, 0, false, {}};
  auto stats = estep2(r.model, corpus, config.threads);
  r.log_likelihoods.push_back(stats.log_likelihood);
  for (int it = 1; it <= config.max_iterations; ++it) {
    std::vector<std::string> flags;
    r.model = mstep2(r.model, stats, floor, &flags);
    for (auto& f : flags) r.flags.push_back("iteration " + std::to_string(it) + ": " + f);
    stats = estep2(r.model, corpus, config.threads);
    r.log_likelihoods.push_back(stats.log_likelihood);
    r.iterations = it;
    if (detail::converged<Scalar>(r.log_likelihoods, config.tolerance)) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// Left-to-right second-order model with segmental emissions and transition
// rows uniform over the allowed successors.
template <typename Scalar>
Hmm2Model<Scalar> initialize_hmm2(const std::vector<ObservationSequence<Scalar>>& corpus,
                                  const TrainConfig& config) {
  return lift_hmm1(initialize_hmm1(corpus, config));
}

}  // namespace hmm2sid

#endif  // HMM2SID_HMM2_HPP_
