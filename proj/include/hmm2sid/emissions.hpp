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

// Diagonal-covariance Gaussian-mixture output densities and their EM
// statistics.

#ifndef HMM2SID_EMISSIONS_HPP_
#define HMM2SID_EMISSIONS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hmm2sid/errors.hpp"
#include "hmm2sid/numerics.hpp"
#include "hmm2sid/observation.hpp"

namespace hmm2sid {

// Lower bound applied to any variance floor derived from data, so that a
// constant feature dimension still yields a proper density.
inline constexpr double kMinVarianceFloor = 1e-12;

// Components whose responsibility mass is at or below this are starved.
inline constexpr double kStarvedMass = 1e-12;

template <typename Scalar>
class GaussianMixture {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  GaussianMixture() = default;

  // weights: M; means, variances: d x M (one component per column).
  GaussianMixture(Vector weights, Matrix means, Matrix variances)
      : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
    const Index m = weights_.size();
    if (m < 1) throw InvariantError("mixture needs at least one component");
    if (means_.cols() != m || variances_.cols() != m || means_.rows() != variances_.rows() ||
        means_.rows() < 1) {
      throw InvariantError("mixture means/variances must be d x M with M = number of weights");
    }
    if ((weights_.array() < 0).any() || !weights_.allFinite() || !sums_to_one(weights_)) {
      throw InvariantError("mixture weights must be non-negative and sum to 1");
    }
    if (!means_.allFinite()) throw InvariantError("mixture means must be finite");
    if (!variances_.allFinite() || (variances_.array() <= 0).any()) {
      throw InvariantError("mixture variances must be finite and positive");
    }
    inv_variances_ = variances_.cwiseInverse();
    const Scalar log_two_pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
    log_norm_ = weights_.array().log().matrix() -
                (Scalar(0.5) * (variances_.array().log().colwise().sum() +
                                Scalar(dim()) * log_two_pi))
                    .matrix()
                    .transpose();
  }

  static GaussianMixture single(Vector mean, Vector variance) {
    Matrix means = std::move(mean);
    Matrix variances = std::move(variance);
    return GaussianMixture(Vector::Ones(1), std::move(means), std::move(variances));
  }

  Index components() const { return weights_.size(); }
  Index dim() const { return means_.rows(); }
  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& variances() const { return variances_; }

  // log c_m + log N(o; mu_m, Sigma_m) for every component m.
  template <typename Derived>
  Vector component_log_densities(const Eigen::MatrixBase<Derived>& o) const {
    if (o.size() != dim()) {
      throw UsageError("observation dimension " + std::to_string(o.size()) +
                       " does not match mixture dimension " + std::to_string(dim()));
    }
    const auto centered = (means_.colwise() - o.derived()).array();
    return log_norm_ -
           (Scalar(0.5) * (centered.square() * inv_variances_.array()).colwise().sum())
               .matrix()
               .transpose();
  }

  template <typename Derived>
  Scalar log_density(const Eigen::MatrixBase<Derived>& o) const {
    return log_sum_exp(component_log_densities(o));
  }

  // Posterior probability of each component given o.
  template <typename Derived>
  Vector responsibilities(const Eigen::MatrixBase<Derived>& o) const {
    return normalize_log(component_log_densities(o)).array().exp().matrix();
  }

  template <typename Rng>
  Vector sample(Rng& rng) const {
    std::discrete_distribution<Index> pick(weights_.data(), weights_.data() + weights_.size());
    const Index m = pick(rng);
    std::normal_distribution<Scalar> normal;
    Vector out(dim());
    for (Index r = 0; r < dim(); ++r) {
      out(r) = means_(r, m) + std::sqrt(variances_(r, m)) * normal(rng);
    }
    return out;
  }

 private:
  Vector weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_variances_;
  Vector log_norm_;
};

using GaussianMixtured = GaussianMixture<double>;

template <typename Scalar, typename Derived>
Scalar log_density(const GaussianMixture<Scalar>& gm, const Eigen::MatrixBase<Derived>& o) {
  return gm.log_density(o);
}

template <typename Scalar, typename Derived>
VectorX<Scalar> responsibilities(const GaussianMixture<Scalar>& gm,
                                 const Eigen::MatrixBase<Derived>& o) {
  return gm.responsibilities(o);
}

// log b_i(O_t) for every state i (rows) and frame t (columns).
template <typename Scalar>
MatrixX<Scalar> emission_log_likelihoods(const std::vector<GaussianMixture<Scalar>>& states,
                                         const ObservationSequence<Scalar>& o) {
  const Index n = static_cast<Index>(states.size());
  MatrixX<Scalar> b(n, o.length());
  for (Index t = 0; t < o.length(); ++t) {
    for (Index i = 0; i < n; ++i) b(i, t) = states[i].log_density(o.frame(t));
  }
  return b;
}

// Weighted zeroth, first and second moments per component. Moments are taken
// about a fixed shift (normally the current component means) so the variance
// estimate does not lose precision to cancellation.
template <typename Scalar>
class MixtureAccumulator {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  MixtureAccumulator() = default;
  MixtureAccumulator(Index components, Index dim)
      : occupancy_(Vector::Zero(components)),
        first_(Matrix::Zero(dim, components)),
        second_(Matrix::Zero(dim, components)),
        shift_(Matrix::Zero(dim, components)) {}
  explicit MixtureAccumulator(const GaussianMixture<Scalar>& reference)
      : MixtureAccumulator(reference.components(), reference.dim()) {
    shift_ = reference.means();
  }

  Index components() const { return occupancy_.size(); }
  Index dim() const { return first_.rows(); }
  const Vector& occupancy() const { return occupancy_; }
  Scalar total() const { return occupancy_.sum(); }

  // Adds o with an explicit weight for each component.
  template <typename DerivedO, typename DerivedW>
  void add(const Eigen::MatrixBase<DerivedO>& o, const Eigen::MatrixBase<DerivedW>& weights) {
    if (o.size() != dim() || weights.size() != components()) {
      throw UsageError("accumulator: observation or weight size mismatch");
    }
    for (Index m = 0; m < components(); ++m) {
      const Scalar w = weights(m);
      if (w == Scalar(0)) continue;
      const auto centered = (o.derived() - shift_.col(m)).array();
      occupancy_(m) += w;
      first_.col(m).array() += w * centered;
      second_.col(m).array() += w * centered.square();
    }
  }

  // Adds o weighted by state_weight times the component posteriors under gm.
  template <typename Derived>
  void add_posterior(const GaussianMixture<Scalar>& gm, const Eigen::MatrixBase<Derived>& o,
                     Scalar state_weight) {
    if (state_weight == Scalar(0)) return;
    add(o, state_weight * gm.responsibilities(o));
  }

  void merge(const MixtureAccumulator& other) {
    if (other.components() != components() || other.dim() != dim() || other.shift_ != shift_) {
      throw UsageError("accumulator merge: incompatible accumulators");
    }
    occupancy_ += other.occupancy_;
    first_ += other.first_;
    second_ += other.second_;
  }

  Vector mean(Index m) const { return shift_.col(m) + first_.col(m) / occupancy_(m); }
  Vector variance(Index m) const {
    const Vector d = first_.col(m) / occupancy_(m);
    return second_.col(m) / occupancy_(m) - d.cwiseAbs2();
  }

 private:
  Vector occupancy_;
  Matrix first_;
  Matrix second_;
  Matrix shift_;
};

// M-step for one mixture. Components with no responsibility mass keep the
// parameters of `previous`; their weight drops to the probability floor.
template <typename Scalar>
GaussianMixture<Scalar> reestimate_mixture(
    const MixtureAccumulator<Scalar>& stats,
    const std::type_identity_t<VectorX<Scalar>>& variance_floor,
    const std::type_identity_t<GaussianMixture<Scalar>>* previous = nullptr) {
  const Index m_count = stats.components();
  const Index d = stats.dim();
  if (variance_floor.size() != d) throw UsageError("variance floor dimension mismatch");
  if (!(stats.total() > Scalar(kStarvedMass))) {
    throw ComponentStarvedError("mixture received no responsibility mass");
  }
  MatrixX<Scalar> means(d, m_count);
  MatrixX<Scalar> variances(d, m_count);
  VectorX<Scalar> counts = stats.occupancy();
  for (Index m = 0; m < m_count; ++m) {
    if (stats.occupancy()(m) > Scalar(kStarvedMass)) {
      means.col(m) = stats.mean(m);
      variances.col(m) = stats.variance(m).cwiseMax(variance_floor);
    } else if (previous != nullptr) {
      means.col(m) = previous->means().col(m);
      variances.col(m) = previous->variances().col(m);
      counts(m) = 0;
    } else {
      throw ComponentStarvedError("component " + std::to_string(m) +
                                  " starved with no previous parameters");
    }
  }
  VectorX<Scalar> weights = floor_normalize(counts, MaskVector::Constant(m_count, true));
  return GaussianMixture<Scalar>(std::move(weights), std::move(means), std::move(variances));
}

// scale * per-dimension variance of all columns, bounded below.
template <typename Derived>
VectorX<typename Derived::Scalar> variance_floor_from(const Eigen::MatrixBase<Derived>& points,
                                                      double scale) {
  using Scalar = typename Derived::Scalar;
  if (points.cols() < 1) throw UsageError("variance floor needs at least one frame");
  const VectorX<Scalar> mean = points.rowwise().mean();
  const VectorX<Scalar> var =
      (points.colwise() - mean).array().square().rowwise().mean().matrix();
  return (Scalar(scale) * var).cwiseMax(Scalar(kMinVarianceFloor));
}

template <typename Scalar>
VectorX<Scalar> variance_floor_from(const std::vector<ObservationSequence<Scalar>>& corpus,
                                    double scale) {
  if (corpus.empty()) throw UsageError("variance floor of an empty corpus");
  Index total = 0;
  for (const auto& o : corpus) total += o.length();
  MatrixX<Scalar> all(corpus.front().dim(), total);
  Index at = 0;
  for (const auto& o : corpus) {
    all.middleCols(at, o.length()) = o.frames();
    at += o.length();
  }
  return variance_floor_from(all, scale);
}

template <typename Scalar>
struct KMeansResult {
  MatrixX<Scalar> centroids;  // d x K
  std::vector<Index> assignment;
};

// Lloyd's algorithm from seeded distinct starting points; distance ties go to
// the lowest centroid index and empty clusters keep their centroid.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, Index k,
                                              int iterations, std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.cols();
  if (n < 1 || k < 1) throw UsageError("kmeans needs at least one point and one cluster");
  KMeansResult<Scalar> out;
  out.centroids.resize(points.rows(), k);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (Index c = 0; c < k; ++c) out.centroids.col(c) = points.col(order[static_cast<std::size_t>(c % n)]);

  out.assignment.assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      (out.centroids.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&best);
      if (out.assignment[static_cast<std::size_t>(i)] != best) changed = true;
      out.assignment[static_cast<std::size_t>(i)] = best;
    }
    if (!changed) break;
    MatrixX<Scalar> sums = MatrixX<Scalar>::Zero(points.rows(), k);
    VectorX<Scalar> counts = VectorX<Scalar>::Zero(k);
    for (Index i = 0; i < n; ++i) {
      const Index c = out.assignment[static_cast<std::size_t>(i)];
      sums.col(c) += points.col(i);
      counts(c) += 1;
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0) out.centroids.col(c) = sums.col(c) / counts(c);
    }
  }
  return out;
}

// Builds an M-component mixture from the points of one state via k-means.
template <typename Derived>
GaussianMixture<typename Derived::Scalar> initialize_mixture(
    const Eigen::MatrixBase<Derived>& points, Index components,
    const VectorX<typename Derived::Scalar>& variance_floor, int kmeans_iterations,
    std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  const Index d = points.rows();
  const auto clusters = kmeans(points, components, kmeans_iterations, seed);
  const VectorX<Scalar> pooled_mean = points.rowwise().mean();
  const VectorX<Scalar> pooled_var =
      (points.colwise() - pooled_mean).array().square().rowwise().mean().matrix().cwiseMax(
          variance_floor);

  MixtureAccumulator<Scalar> acc(components, d);
  for (Index i = 0; i < points.cols(); ++i) {
    acc.add(points.col(i), VectorX<Scalar>::Unit(components, clusters.assignment[static_cast<std::size_t>(i)]));
  }
  MatrixX<Scalar> means(d, components);
  MatrixX<Scalar> variances(d, components);
  VectorX<Scalar> counts = acc.occupancy();
  for (Index c = 0; c < components; ++c) {
    if (counts(c) > 0) {
      means.col(c) = acc.mean(c);
      variances.col(c) = acc.variance(c).cwiseMax(variance_floor);
    } else {
      means.col(c) = clusters.centroids.col(c);
      variances.col(c) = pooled_var;
    }
  }
  VectorX<Scalar> weights = floor_normalize(counts, MaskVector::Constant(components, true));
  return GaussianMixture<Scalar>(std::move(weights), std::move(means), std::move(variances));
}

}  // namespace hmm2sid

#endif  // HMM2SID_EMISSIONS_HPP_
