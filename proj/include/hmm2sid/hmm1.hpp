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

// First-order continuous-density HMM: the baseline the second-order model is
// compared against.

#ifndef HMM2SID_HMM1_HPP_
#define HMM2SID_HMM1_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hmm2sid/emissions.hpp"
#include "hmm2sid/errors.hpp"
#include "hmm2sid/numerics.hpp"
#include "hmm2sid/observation.hpp"
#include "hmm2sid/parallel.hpp"
#include "hmm2sid/topology.hpp"
#include "hmm2sid/train_config.hpp"

namespace hmm2sid {

template <typename Scalar>
class Hmm1Model {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Mixture = GaussianMixture<Scalar>;

  Hmm1Model() = default;
  Hmm1Model(Vector initial, Matrix transitions, std::vector<Mixture> emissions, Topology topology)
      : initial_(std::move(initial)),
        transitions_(std::move(transitions)),
        emissions_(std::move(emissions)),
        topology_(std::move(topology)) {
    validate();
  }

  Index states() const { return initial_.size(); }
  Index dim() const { return emissions_.front().dim(); }
  Index mixtures() const { return emissions_.front().components(); }
  const Vector& initial() const { return initial_; }
  const Matrix& transitions() const { return transitions_; }
  const std::vector<Mixture>& emissions() const { return emissions_; }
  const Topology& topology() const { return topology_; }

 private:
  void validate() const {
    topology_.validate();
    const Index n = topology_.states();
    if (initial_.size() != n || transitions_.rows() != n || transitions_.cols() != n ||
        static_cast<Index>(emissions_.size()) != n) {
      throw InvariantError("hmm1: parameter shapes do not match N = " + std::to_string(n));
    }
    check_masked_distribution(initial_, topology_.initial, "hmm1 initial distribution");
    for (Index i = 0; i < n; ++i) {
      check_masked_distribution(transitions_.row(i).transpose(), topology_.successors(i),
                                "hmm1 transition row " + std::to_string(i));
    }
    for (const auto& e : emissions_) {
      if (e.dim() != emissions_.front().dim() ||
          e.components() != emissions_.front().components()) {
        throw InvariantError("hmm1: all state mixtures must share M and d");
      }
    }
  }

  Vector initial_;
  Matrix transitions_;
  std::vector<Mixture> emissions_;
  Topology topology_;
};

using Hmm1Modeld = Hmm1Model<double>;

template <typename Scalar>
struct Forward1Result {
  Scalar log_likelihood;
  MatrixX<Scalar> alpha;  // N x T, log domain
};

// Best state path (0-based state indices) and its joint log-probability.
template <typename Scalar>
struct ViterbiPath {
  std::vector<Index> path;
  Scalar score;
};

namespace detail {

template <typename Scalar>
void check_dimension(Index model_dim, const ObservationSequence<Scalar>& o) {
  if (o.dim() != model_dim) {
    throw UsageError("observation '" + o.source_id() + "' has dimension " +
                     std::to_string(o.dim()) + ", model expects " + std::to_string(model_dim));
  }
}

}  // namespace detail

// Forward recursion given precomputed log emissions (N x T).
template <typename Scalar>
Forward1Result<Scalar> forward1_from_emissions(const Hmm1Model<Scalar>& m,
                                               const MatrixX<Scalar>& log_b) {
  const Index n = m.states();
  const Index t_len = log_b.cols();
  if (log_b.rows() != n || t_len < 1) throw UsageError("forward1: emission matrix must be N x T, T >= 1");
  const MatrixX<Scalar> log_a = m.transitions().array().log().matrix();
  Forward1Result<Scalar> r;
  r.alpha.resize(n, t_len);
  r.alpha.col(0) = m.initial().array().log().matrix() + log_b.col(0);
  for (Index t = 1; t < t_len; ++t) {
    const Scalar* prev = &r.alpha(0, t - 1);
    for (Index k = 0; k < n; ++k) {
      r.alpha(k, t) = log_sum_exp_of_sum(prev, &log_a(0, k), n) + log_b(k, t);
    }
  }
  r.log_likelihood = log_sum_exp(r.alpha.col(t_len - 1) + m.topology().template log_final<Scalar>());
  return r;
}

template <typename Scalar>
Forward1Result<Scalar> forward1(const Hmm1Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  return forward1_from_emissions(m, emission_log_likelihoods(m.emissions(), o));
}

// beta_t(i) = log P(O_{t+1..T}, q_T final | q_t = i), N x T; beta_T is 0 on
// final states and -inf elsewhere.
template <typename Scalar>
MatrixX<Scalar> backward1_from_emissions(const Hmm1Model<Scalar>& m, const MatrixX<Scalar>& log_b) {
  const Index n = m.states();
  const Index t_len = log_b.cols();
  const MatrixX<Scalar> log_a = m.transitions().array().log().matrix();
  MatrixX<Scalar> beta(n, t_len);
  beta.col(t_len - 1) = m.topology().template log_final<Scalar>();
  const MatrixX<Scalar> log_a_t = log_a.transpose();
  VectorX<Scalar> next(n);
  for (Index t = t_len - 2; t >= 0; --t) {
    next = log_b.col(t + 1) + beta.col(t + 1);
    for (Index i = 0; i < n; ++i) beta(i, t) = log_sum_exp_of_sum(&log_a_t(0, i), next.data(), n);
  }
  return beta;
}

template <typename Scalar>
MatrixX<Scalar> backward1(const Hmm1Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  return backward1_from_emissions(m, emission_log_likelihoods(m.emissions(), o));
}

// Ties go to the lowest state index, both in the recursion and at the end.
template <typename Scalar>
ViterbiPath<Scalar> viterbi1(const Hmm1Model<Scalar>& m, const ObservationSequence<Scalar>& o) {
  detail::check_dimension(m.dim(), o);
  const MatrixX<Scalar> log_b = emission_log_likelihoods(m.emissions(), o);
  const MatrixX<Scalar> log_a = m.transitions().array().log().matrix();
  const Index n = m.states();
  const Index t_len = o.length();
  MatrixX<Scalar> delta(n, t_len);
  Eigen::MatrixXi back = Eigen::MatrixXi::Zero(n, t_len);
  delta.col(0) = m.initial().array().log().matrix() + log_b.col(0);
  for (Index t = 1; t < t_len; ++t) {
    for (Index k = 0; k < n; ++k) {
      Scalar best = kLogZero<Scalar>;
      Index arg = 0;
      for (Index i = 0; i < n; ++i) {
        const Scalar v = delta(i, t - 1) + log_a(i, k);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(k, t) = best + log_b(k, t);
      back(k, t) = static_cast<int>(arg);
    }
  }
  Index last = 0;
  const Scalar score = (delta.col(t_len - 1) + m.topology().template log_final<Scalar>()).maxCoeff(&last);
  if (score == kLogZero<Scalar>) {
    throw NoValidPathError("viterbi1: no state path can emit '" + o.source_id() + "' (T = " +
                           std::to_string(t_len) + ")");
  }
  ViterbiPath<Scalar> out{std::vector<Index>(static_cast<std::size_t>(t_len)), score};
  out.path.back() = last;
  for (Index t = t_len - 1; t > 0; --t) {
    out.path[static_cast<std::size_t>(t - 1)] = back(out.path[static_cast<std::size_t>(t)], t);
  }
  return out;
}

// Draws a state path of the given length conditioned on ending in a final
// state, then one frame per state.
template <typename Scalar, typename Rng>
std::pair<std::vector<Index>, ObservationSequence<Scalar>> sample(const Hmm1Model<Scalar>& m,
                                                                  Index length, Rng& rng) {
  if (length < 1) throw UsageError("sample: length must be >= 1");
  const Index n = m.states();
  // reach(i, t) = log P(q_{T-1} final | q_t = i), over transitions alone.
  MatrixX<Scalar> reach = MatrixX<Scalar>::Zero(n, length);
  if (!m.topology().final.all()) {
    const MatrixX<Scalar> log_a_t = m.transitions().array().log().matrix().transpose();
    reach.col(length - 1) = m.topology().template log_final<Scalar>();
    for (Index t = length - 2; t >= 0; --t) {
      for (Index i = 0; i < n; ++i) reach(i, t) = log_sum_exp_of_sum(&log_a_t(0, i), &reach(0, t + 1), n);
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
  std::vector<Index> q(static_cast<std::size_t>(length));
  MatrixX<Scalar> frames(m.dim(), length);
  for (Index t = 0; t < length; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    if (t == 0) {
      q[ut] = draw(m.initial(), reach.col(0), "initial distribution");
    } else {
      q[ut] = draw(m.transitions().row(q[ut - 1]).transpose(), reach.col(t),
                   "transition row " + std::to_string(q[ut - 1]));
    }
    frames.col(t) = m.emissions()[static_cast<std::size_t>(q[ut])].sample(rng);
  }
  return {std::move(q), ObservationSequence<Scalar>(std::move(frames), "sampled")};
}

namespace detail {

template <typename Scalar>
void check_corpus(const std::vector<ObservationSequence<Scalar>>& corpus, Index dim) {
  if (corpus.empty()) throw UsageError("training corpus is empty");
  for (const auto& o : corpus) check_dimension(dim, o);
}

// Frames of every utterance split evenly across `states` consecutive
// segments.
template <typename Scalar>
std::vector<MatrixX<Scalar>> uniform_segments(const std::vector<ObservationSequence<Scalar>>& corpus,
                                              Index states) {
  std::vector<std::vector<Index>> counts(static_cast<std::size_t>(states));
  std::vector<Index> sizes(static_cast<std::size_t>(states), 0);
  auto state_of = [states](Index t, Index len) { return (t * states) / len; };
  for (const auto& o : corpus) {
    for (Index t = 0; t < o.length(); ++t) ++sizes[static_cast<std::size_t>(state_of(t, o.length()))];
  }
  std::vector<MatrixX<Scalar>> out;
  for (Index s = 0; s < states; ++s) out.emplace_back(corpus.front().dim(), sizes[static_cast<std::size_t>(s)]);
  std::vector<Index> fill(static_cast<std::size_t>(states), 0);
  for (const auto& o : corpus) {
    for (Index t = 0; t < o.length(); ++t) {
      const auto s = static_cast<std::size_t>(state_of(t, o.length()));
      out[s].col(fill[s]++) = o.frame(t);
    }
  }
  return out;
}

template <typename Scalar>
std::vector<GaussianMixture<Scalar>> segmental_emissions(
    const std::vector<ObservationSequence<Scalar>>& corpus, const TrainConfig& config) {
  if (corpus.empty()) throw UsageError("training corpus is empty");
  const Index n = config.states;
  const auto floor = variance_floor_from(corpus, config.variance_floor_scale);
  const auto segments = uniform_segments(corpus, n);
  std::vector<GaussianMixture<Scalar>> out;
  for (Index s = 0; s < n; ++s) {
    const auto& pts = segments[static_cast<std::size_t>(s)];
    const std::uint64_t seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(s);
    if (pts.cols() > 0) {
      out.push_back(initialize_mixture(pts, config.mixtures, floor, config.kmeans_iterations, seed));
    } else {
      // Utterances shorter than N leave late states empty; borrow the
      // previous state's mixture.
      if (out.empty()) throw UsageError("segmental initialization: first state has no frames");
      out.push_back(out.back());
    }
  }
  return out;
}

}  // namespace detail

// Left-to-right model from uniform segmentation plus per-state k-means, with
// transitions uniform over the allowed arcs.
template <typename Scalar>
Hmm1Model<Scalar> initialize_hmm1(const std::vector<ObservationSequence<Scalar>>& corpus,
                                  const TrainConfig& config) {
  if (config.states < 1 || config.mixtures < 1) throw UsageError("need states >= 1 and mixtures >= 1");
  const Topology topo = Topology::left_to_right(config.states, config.max_jump);
  const Index n = config.states;
  VectorX<Scalar> initial = topo.initial.template cast<Scalar>().matrix();
  initial /= initial.sum();
  MatrixX<Scalar> a = topo.arcs.template cast<Scalar>().matrix();
  for (Index i = 0; i < n; ++i) a.row(i) /= a.row(i).sum();
  return Hmm1Model<Scalar>(std::move(initial), std::move(a), detail::segmental_emissions(corpus, config),
                           topo);
}

// Sufficient statistics of one E-step.
template <typename Scalar>
struct Hmm1Stats {
  VectorX<Scalar> initial;
  MatrixX<Scalar> arcs;
  std::vector<MixtureAccumulator<Scalar>> mixtures;
  double log_likelihood = 0;

  explicit Hmm1Stats(const Hmm1Model<Scalar>& m)
      : initial(VectorX<Scalar>::Zero(m.states())),
        arcs(MatrixX<Scalar>::Zero(m.states(), m.states())) {
    for (const auto& e : m.emissions()) mixtures.emplace_back(e);
  }

  void merge(const Hmm1Stats& o) {
    initial += o.initial;
    arcs += o.arcs;
    for (std::size_t i = 0; i < mixtures.size(); ++i) mixtures[i].merge(o.mixtures[i]);
    log_likelihood += o.log_likelihood;
  }
};

namespace detail {

inline constexpr std::size_t kEStepBlock = 8;

template <typename Scalar>
void accumulate1(const Hmm1Model<Scalar>& m, const ObservationSequence<Scalar>& o,
                 Hmm1Stats<Scalar>& s) {
  const MatrixX<Scalar> log_b = emission_log_likelihoods(m.emissions(), o);
  const auto fwd = forward1_from_emissions(m, log_b);
  const Scalar log_p = fwd.log_likelihood;
  if (log_p == kLogZero<Scalar>) {
    throw NoValidPathError("baum_welch1: '" + o.source_id() + "' has zero likelihood");
  }
  const MatrixX<Scalar> beta = backward1_from_emissions(m, log_b);
  const MatrixX<Scalar> log_a = m.transitions().array().log().matrix();
  const Index n = m.states();
  const MatrixX<Scalar> gamma = ((fwd.alpha + beta).array() - log_p).exp().matrix();
  s.initial += gamma.col(0);
  for (Index t = 0; t + 1 < o.length(); ++t) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const Scalar v = fwd.alpha(i, t) + log_a(i, j) + log_b(j, t + 1) + beta(j, t + 1) - log_p;
        if (v != kLogZero<Scalar>) s.arcs(i, j) += std::exp(v);
      }
    }
  }
  for (Index t = 0; t < o.length(); ++t) {
    for (Index i = 0; i < n; ++i) {
      s.mixtures[static_cast<std::size_t>(i)].add_posterior(
          m.emissions()[static_cast<std::size_t>(i)], o.frame(t), gamma(i, t));
    }
  }
  s.log_likelihood += double(log_p);
}

// Runs `accumulate` over fixed-size blocks of the corpus, possibly in
// parallel, and merges block results in corpus order.
template <typename Stats, typename Model, typename Corpus, typename Accumulate>
Stats blocked_estep(const Model& m, const Corpus& corpus, unsigned threads, Accumulate accumulate) {
  const std::size_t blocks = (corpus.size() + kEStepBlock - 1) / kEStepBlock;
  std::vector<Stats> partial(blocks, Stats(m));
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(corpus.size(), (b + 1) * kEStepBlock);
    for (std::size_t i = b * kEStepBlock; i < end; ++i) accumulate(m, corpus[i], partial[b]);
  });
  Stats total(m);
  for (const auto& p : partial) total.merge(p);
  return total;
}

template <typename Scalar>
bool converged(const std::vector<double>& trace, double tolerance) {
  if (tolerance <= 0 || trace.size() < 2) return false;
  const double prev = trace[trace.size() - 2];
  return trace.back() - prev < tolerance * std::abs(prev);
}

}  // namespace detail

template <typename Scalar>
Hmm1Stats<Scalar> estep1(const Hmm1Model<Scalar>& m,
                         const std::vector<ObservationSequence<Scalar>>& corpus, unsigned threads) {
  return detail::blocked_estep<Hmm1Stats<Scalar>>(
      m, corpus, threads, [](const auto& model, const auto& o, auto& s) { detail::accumulate1(model, o, s); });
}

// M-step. Throws StarvedStateError for a state no frame ever reached.
template <typename Scalar>
Hmm1Model<Scalar> mstep1(const Hmm1Model<Scalar>& m, const Hmm1Stats<Scalar>& s,
                         const VectorX<Scalar>& variance_floor, std::vector<std::string>* flags) {
  const Index n = m.states();
  const Topology& topo = m.topology();
  VectorX<Scalar> initial = floor_normalize(s.initial, topo.initial);
  MatrixX<Scalar> a = m.transitions();
  for (Index i = 0; i < n; ++i) {
    if (!topo.has_successor(i)) continue;
    const VectorX<Scalar> row = s.arcs.row(i).transpose();
    if ((row.array() * topo.successors(i).template cast<Scalar>()).sum() > Scalar(0)) {
      a.row(i) = floor_normalize(row, topo.successors(i)).transpose();
    } else if (flags != nullptr) {
      flags->push_back("state " + std::to_string(i) + ": no outgoing transitions observed");
    }
  }
  std::vector<GaussianMixture<Scalar>> emissions;
  for (Index i = 0; i < n; ++i) {
    const auto& acc = s.mixtures[static_cast<std::size_t>(i)];
    if (!(acc.total() > Scalar(kStarvedMass))) throw StarvedStateError(static_cast<int>(i));
    emissions.push_back(reestimate_mixture(acc, variance_floor, &m.emissions()[static_cast<std::size_t>(i)]));
  }
  return Hmm1Model<Scalar>(std::move(initial), std::move(a), std::move(emissions), topo);
}

// Baum-Welch re-estimation of all parameters over a multi-sequence corpus.
template <typename Scalar>
TrainResult<Hmm1Model<Scalar>> baum_welch1(const Hmm1Model<Scalar>& m,
                                           const std::vector<ObservationSequence<Scalar>>& corpus,
                                           const TrainConfig& config) {
  detail::check_corpus(corpus, m.dim());
  const VectorX<Scalar> floor = variance_floor_from(corpus, config.variance_floor_scale);
  TrainResult<Hmm1Model<Scalar>> r{m, {}, 0, false, {}};
  auto stats = estep1(r.model, corpus, config.threads);
  r.log_likelihoods.push_back(stats.log_likelihood);
  for (int it = 1; it <= config.max_iterations; ++it) {
    r.model = mstep1(r.model, stats, floor, &r.flags);
    stats = estep1(r.model, corpus, config.threads);
    r.log_likelihoods.push_back(stats.log_likelihood);
    r.iterations = it;
    if (detail::converged<Scalar>(r.log_likelihoods, config.tolerance)) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace hmm2sid

#endif  // HMM2SID_HMM1_HPP_
