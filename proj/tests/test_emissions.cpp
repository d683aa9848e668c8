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

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hmm2sid/emissions.hpp"
#include "oracles.hpp"

using namespace hmm2sid;
using namespace hmm2sid::testing;

TEST_CASE("standard normal at its mode") {
  const auto gm = GaussianMixtured::single(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  CHECK(gm.log_density(Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(gm.log_density(Eigen::VectorXd::Zero(1)) == doctest::Approx(-0.9189385).epsilon(1e-7));
}

TEST_CASE("two identical components collapse to one") {
  Rng rng(3);
  const auto one = random_mixture(rng, 1, 3);
  Eigen::MatrixXd means(3, 2), vars(3, 2);
  means << one.means(), one.means();
  vars << one.variances(), one.variances();
  const GaussianMixtured two(Eigen::Vector2d(0.5, 0.5), means, vars);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd o = random_observations(rng, 1, 3).frame(0);
    CHECK(two.log_density(o) == doctest::Approx(one.log_density(o)).epsilon(1e-14));
    const Eigen::VectorXd r = two.responsibilities(o);
    CHECK(r(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r(1) == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("log_density matches the linear-domain evaluation") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gm = random_mixture(rng, 1 + trial % 3, 1 + trial % 2 + (trial % 5 == 0 ? 2 : 0));
    const Eigen::VectorXd o = random_observations(rng, 1, gm.dim()).frame(0);
    const double direct = linear_density(gm, o);
    CHECK(rel_err(std::exp(gm.log_density(o)), direct) < 1e-10);
    CHECK(log_density(gm, o) == gm.log_density(o));
  }
}

TEST_CASE("log_density is invariant under component permutation") {
  Rng rng(8);
  const auto gm = random_mixture(rng, 3, 2);
  Eigen::Vector3d w(gm.weights()(2), gm.weights()(0), gm.weights()(1));
  Eigen::MatrixXd means(2, 3), vars(2, 3);
  means << gm.means().col(2), gm.means().col(0), gm.means().col(1);
  vars << gm.variances().col(2), gm.variances().col(0), gm.variances().col(1);
  const GaussianMixtured permuted(w, means, vars);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd o = random_observations(rng, 1, 2).frame(0);
    CHECK(permuted.log_density(o) == doctest::Approx(gm.log_density(o)).epsilon(1e-14));
  }
}

TEST_CASE("responsibilities") {
  Rng rng(9);
  const auto single = random_mixture(rng, 1, 2);
  CHECK(responsibilities(single, Eigen::Vector2d(0.3, -0.1))(0) == 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const auto gm = random_mixture(rng, 2, 2);
    const Eigen::VectorXd o = random_observations(rng, 1, 2).frame(0);
    double parts[2];
    for (Index c = 0; c < 2; ++c) {
      const GaussianMixtured comp = GaussianMixtured::single(gm.means().col(c), gm.variances().col(c));
      parts[c] = gm.weights()(c) * linear_density(comp, o);
    }
    const Eigen::VectorXd r = gm.responsibilities(o);
    CHECK(std::abs(r(0) - parts[0] / (parts[0] + parts[1])) < 1e-12);
    CHECK(std::abs(r(1) - parts[1] / (parts[0] + parts[1])) < 1e-12);
    CHECK(std::abs(r.sum() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(single.responsibilities(Eigen::Vector3d::Zero()), UsageError);
  CHECK_THROWS_AS(single.log_density(Eigen::VectorXd::Zero(1)), UsageError);
}

TEST_CASE("construction rejects broken parameters") {
  const Eigen::MatrixXd means = Eigen::MatrixXd::Zero(1, 2);
  const Eigen::MatrixXd vars = Eigen::MatrixXd::Ones(1, 2);
  CHECK_THROWS_AS(GaussianMixtured(Eigen::Vector2d(0.5, 0.4), means, vars), InvariantError);
  CHECK_THROWS_AS(GaussianMixtured(Eigen::Vector2d(0.5, 0.5), means, Eigen::MatrixXd::Zero(1, 2)),
                  InvariantError);
  CHECK_THROWS_AS(GaussianMixtured(Eigen::Vector3d(0.2, 0.3, 0.5), means, vars), InvariantError);
}

TEST_CASE("reestimate_mixture: sample moments") {
  MixtureAccumulator<double> acc(1, 1);
  acc.add(Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Ones(1));
  acc.add(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Ones(1));
  const auto gm = reestimate_mixture(acc, Eigen::VectorXd::Constant(1, 1e-4));
  CHECK(gm.means()(0, 0) == doctest::Approx(0.0));
  CHECK(gm.variances()(0, 0) == doctest::Approx(1.0));
  CHECK(gm.weights()(0) == 1.0);
}

TEST_CASE("reestimate_mixture: a single point engages the floor") {
  MixtureAccumulator<double> acc(1, 2);
  acc.add(Eigen::Vector2d(0.7, -2.0), Eigen::VectorXd::Constant(1, 3.0));
  const Eigen::Vector2d floor(1e-4, 2e-4);
  const auto gm = reestimate_mixture(acc, Eigen::VectorXd(floor));
  CHECK(gm.means()(0, 0) == doctest::Approx(0.7));
  CHECK(gm.means()(1, 0) == doctest::Approx(-2.0));
  CHECK(gm.variances()(0, 0) == 1e-4);
  CHECK(gm.variances()(1, 0) == 2e-4);
}

TEST_CASE("reestimate_mixture matches direct weighted moments") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Index m = 2 + trial % 2;
    const Index d = 1 + trial % 3;
    const auto ref = random_mixture(rng, m, d);
    MixtureAccumulator<double> acc(ref);
    const Index n = 40;
    Eigen::MatrixXd pts(d, n);
    Eigen::MatrixXd w(m, n);
    for (Index i = 0; i < n; ++i) {
      pts.col(i) = random_observations(rng, 1, d).frame(0);
      for (Index c = 0; c < m; ++c) w(c, i) = uniform(rng, 0.0, 2.0);
      acc.add(pts.col(i), w.col(i));
    }
    const auto gm = reestimate_mixture(acc, Eigen::VectorXd::Constant(d, 1e-8));
    for (Index c = 0; c < m; ++c) {
      const double total = w.row(c).sum();
      const Eigen::VectorXd mean = (pts * w.row(c).transpose()) / total;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
      for (Index i = 0; i < n; ++i) var += w(c, i) * (pts.col(i) - mean).cwiseAbs2();
      var /= total;
      CHECK((gm.means().col(c) - mean).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((gm.variances().col(c) - var).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(gm.weights()(c) - total / w.sum()) < 1e-12);
    }
  }
}

TEST_CASE("reestimate_mixture: starvation") {
  MixtureAccumulator<double> empty(2, 1);
  CHECK_THROWS_AS(reestimate_mixture(empty, Eigen::VectorXd::Constant(1, 1e-4)), ComponentStarvedError);

  Rng rng(2);
  const auto previous = random_mixture(rng, 2, 1);
  MixtureAccumulator<double> acc(previous);
  acc.add(Eigen::VectorXd::Constant(1, 0.25), Eigen::Vector2d(1.0, 0.0));
  acc.add(Eigen::VectorXd::Constant(1, 0.75), Eigen::Vector2d(1.0, 0.0));
  const auto gm = reestimate_mixture(acc, Eigen::VectorXd::Constant(1, 1e-4), &previous);
  CHECK(gm.weights()(1) == kProbabilityFloor);
  CHECK(gm.means()(0, 1) == previous.means()(0, 1));
  CHECK(gm.variances()(0, 1) == previous.variances()(0, 1));
  CHECK(gm.means()(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(reestimate_mixture(acc, Eigen::VectorXd::Constant(1, 1e-4)), ComponentStarvedError);
}

TEST_CASE("accumulators merge associatively") {
  Rng rng(21);
  const auto gm = random_mixture(rng, 2, 2);
  MixtureAccumulator<double> whole(gm), left(gm), right(gm);
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd o = random_observations(rng, 1, 2).frame(0);
    whole.add_posterior(gm, o, 0.8);
    (i < 12 ? left : right).add_posterior(gm, o, 0.8);
  }
  left.merge(right);
  CHECK((left.occupancy() - whole.occupancy()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((left.mean(0) - whole.mean(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((left.variance(1) - whole.variance(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one EM iteration on the mixture's own samples does not lower the likelihood") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto truth = random_mixture(rng, 3, 2);
    auto model = random_mixture(rng, 3, 2);
    std::vector<Eigen::VectorXd> data;
    for (int i = 0; i < 300; ++i) data.push_back(truth.sample(rng));
    auto total = [&](const GaussianMixtured& g) {
      double s = 0;
      for (const auto& o : data) s += g.log_density(o);
      return s;
    };
    for (int it = 0; it < 5; ++it) {
      MixtureAccumulator<double> acc(model);
      for (const auto& o : data) acc.add_posterior(model, o, 1.0);
      const auto next = reestimate_mixture(acc, Eigen::VectorXd::Constant(2, 1e-4), &model);
      CHECK(total(next) >= total(model) - 1e-8);
      model = next;
    }
  }
}

TEST_CASE("kmeans is deterministic and separates clear clusters") {
  Rng rng(1);
  Eigen::MatrixXd pts(1, 200);
  for (Index i = 0; i < 200; ++i) pts(0, i) = (i % 2 == 0 ? -5.0 : 5.0) + uniform(rng, -0.5, 0.5);
  const auto a = kmeans(pts, 2, 20, 42);
  const auto b = kmeans(pts, 2, 20, 42);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  for (Index i = 2; i < 200; ++i) CHECK(a.assignment[i] == a.assignment[i % 2]);
  CHECK(a.assignment[0] != a.assignment[1]);

  const auto gm = initialize_mixture(pts, 2, Eigen::VectorXd::Constant(1, 1e-4), 20, 42);
  CHECK(gm.weights()(0) == doctest::Approx(0.5));
  CHECK(std::abs(std::abs(gm.means()(0, 0)) - 5.0) < 0.2);
}

TEST_CASE("initialize_mixture with fewer points than components") {
  Eigen::MatrixXd pts(2, 2);
  pts << 0, 1, 0, 1;
  const auto gm = initialize_mixture(pts, 4, Eigen::VectorXd::Constant(2, 1e-3), 20, 1);
  CHECK(gm.components() == 4);
  CHECK(std::abs(gm.weights().sum() - 1.0) < 1e-12);
  CHECK((gm.variances().array() >= 1e-3).all());
}

TEST_CASE("variance floor scales the data variance") {
  Eigen::MatrixXd pts(2, 4);
  pts << 1, -1, 1, -1, 0, 0, 0, 0;
  const Eigen::VectorXd f = variance_floor_from(pts, 1e-4);
  CHECK(f(0) == doctest::Approx(1e-4));
  CHECK(f(1) == kMinVarianceFloor);
}
