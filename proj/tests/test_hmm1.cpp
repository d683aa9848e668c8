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

#include "doctest.h"
#include "hmm2sid/hmm1.hpp"
#include "oracles.hpp"

using namespace hmm2sid;
using namespace hmm2sid::testing;

namespace {

const double kLogStdNormalMode = -0.5 * std::log(2 * std::numbers::pi);

GaussianMixtured standard_normal() {
  return GaussianMixtured::single(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
}

Hmm1Modeld single_state() {
  return Hmm1Modeld(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1), {standard_normal()},
                    Topology::ergodic(1));
}

// Chain 0 -> 1 -> ... -> n-1, every allowed arc with probability one.
Hmm1Modeld forced_chain(Index n) {
  const Topology topo = Topology::chain(n);
  Eigen::MatrixXd a = topo.arcs.cast<double>().matrix();
  Eigen::VectorXd pi = Eigen::VectorXd::Unit(n, 0);
  std::vector<GaussianMixtured> e(static_cast<std::size_t>(n), standard_normal());
  return Hmm1Modeld(pi, a, e, topo);
}

}  // namespace

TEST_CASE("forward1: single-state chain") {
  const auto o = ObservationSequenced(Eigen::MatrixXd::Zero(1, 3));
  CHECK(forward1(single_state(), o).log_likelihood == doctest::Approx(3 * kLogStdNormalMode).epsilon(1e-14));
}

TEST_CASE("forward1: emissions factor out under uniform transitions") {
  const Index n = 4;
  std::vector<GaussianMixtured> e(n, standard_normal());
  const Hmm1Modeld m(Eigen::VectorXd::Constant(n, 0.25), Eigen::MatrixXd::Constant(n, n, 0.25), e,
                     Topology::ergodic(n));
  const auto o = ObservationSequenced(Eigen::MatrixXd::Constant(1, 7, 0.4));
  const double log_b = standard_normal().log_density(Eigen::VectorXd::Constant(1, 0.4));
  CHECK(forward1(m, o).log_likelihood == doctest::Approx(7 * log_b).epsilon(1e-13));
}

TEST_CASE("forward1 and viterbi1 match exhaustive enumeration") {
  Rng rng(101);
  for (int seed = 0; seed < 100; ++seed) {
    const Index n = 1 + seed % 4;
    const Index t_len = 1 + seed % 6;
    const Index d = 1 + seed % 2;
    const auto m = random_hmm1(rng, n, 1 + seed % 2, d);
    const auto o = random_observations(rng, t_len, d);
    const auto e = enumerate(m, o);
    const auto f = forward1(m, o);
    CHECK(rel_err(f.log_likelihood, std::log(e.total)) < 1e-10);
    const auto v = viterbi1(m, o);
    CHECK(v.path == e.argmax);
    CHECK(rel_err(v.score, std::log(e.best)) < 1e-10);
    CHECK(v.score <= f.log_likelihood);
  }
}

TEST_CASE("forward1 x backward1 is constant over time") {
  Rng rng(3);
  const auto m = random_hmm1(rng, 3, 2, 2);
  const auto o = random_observations(rng, 9, 2);
  const auto f = forward1(m, o);
  const Eigen::MatrixXd beta = backward1(m, o);
  for (Index t = 0; t < 9; ++t) {
    CHECK(rel_err(log_sum_exp(f.alpha.col(t) + beta.col(t)), f.log_likelihood) < 1e-12);
  }
}

TEST_CASE("viterbi1: forced chain, single state, no valid path") {
  const auto chain = forced_chain(4);
  Rng rng(4);
  const auto o = random_observations(rng, 4, 1);
  CHECK(viterbi1(chain, o).path == std::vector<Index>{0, 1, 2, 3});

  const auto v = viterbi1(single_state(), random_observations(rng, 5, 1));
  CHECK(v.path == std::vector<Index>(5, 0));

  CHECK_THROWS_AS(viterbi1(chain, random_observations(rng, 5, 1)), NoValidPathError);
  CHECK(forward1(chain, random_observations(rng, 5, 1)).log_likelihood == kLogZero<double>);
}

TEST_CASE("left-to-right paths must end in the last state") {
  Rng rng(41);
  for (int seed = 0; seed < 10; ++seed) {
    const auto m = random_hmm1(rng, 4, 2, 1, Topology::left_to_right(4, 1));
    const auto o = random_observations(rng, 6, 1);
    const auto e = enumerate(m, o);
    CHECK(rel_err(forward1(m, o).log_likelihood, std::log(e.total)) < 1e-10);
    const auto v = viterbi1(m, o);
    CHECK(v.path == e.argmax);
    CHECK(v.path.back() == 3);
  }
  const auto m = random_hmm1(rng, 4, 1, 1, Topology::left_to_right(4, 1));
  const auto short_o = random_observations(rng, 3, 1);
  CHECK(forward1(m, short_o).log_likelihood == kLogZero<double>);
  CHECK_THROWS_AS(viterbi1(m, short_o), NoValidPathError);
}

TEST_CASE("sampling a left-to-right model ends in the last state") {
  Rng rng(42);
  const auto m = random_hmm1(rng, 4, 1, 1, Topology::left_to_right(4, 1));
  for (int i = 0; i < 50; ++i) {
    const auto q = sample(m, 7, rng).first;
    CHECK(q.front() == 0);
    CHECK(q.back() == 3);
  }
  CHECK(sample(m, 4, rng).first == std::vector<Index>{0, 1, 2, 3});
  CHECK_THROWS_AS(sample(m, 3, rng), GeneratorError);
}

TEST_CASE("viterbi1 breaks ties toward the lowest state") {
  const Index n = 3;
  std::vector<GaussianMixtured> e(n, standard_normal());
  const Hmm1Modeld m(Eigen::VectorXd::Constant(n, 1.0 / 3), Eigen::MatrixXd::Constant(n, n, 1.0 / 3), e,
                     Topology::ergodic(n));
  CHECK(viterbi1(m, ObservationSequenced(Eigen::MatrixXd::Zero(1, 4))).path == std::vector<Index>(4, 0));
}

TEST_CASE("dimension mismatch is a usage error") {
  CHECK_THROWS_AS(forward1(single_state(), ObservationSequenced(Eigen::MatrixXd::Zero(2, 3))), UsageError);
  CHECK_THROWS_AS(viterbi1(single_state(), ObservationSequenced(Eigen::MatrixXd::Zero(2, 3))), UsageError);
}

TEST_CASE("model construction validates rows and masks") {
  const Topology topo = Topology::left_to_right(3, 1);
  std::vector<GaussianMixtured> e(3, standard_normal());
  Eigen::MatrixXd a(3, 3);
  a << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 1;
  CHECK_NOTHROW(Hmm1Modeld(Eigen::Vector3d(1, 0, 0), a, e, topo));
  Eigen::MatrixXd jump = a;
  jump(0, 1) = 0.25;
  jump(0, 2) = 0.25;
  CHECK_THROWS_AS(Hmm1Modeld(Eigen::Vector3d(1, 0, 0), jump, e, topo), InvariantError);
  Eigen::MatrixXd short_row = a;
  short_row(1, 2) = 0.4;
  CHECK_THROWS_AS(Hmm1Modeld(Eigen::Vector3d(1, 0, 0), short_row, e, topo), InvariantError);
  CHECK_THROWS_AS(Hmm1Modeld(Eigen::Vector3d(0.5, 0.5, 0), a, e, topo), InvariantError);
}

TEST_CASE("baum_welch1: one iteration on the model's own samples") {
  Rng rng(17);
  const auto m = random_hmm1(rng, 3, 2, 2);
  std::vector<ObservationSequenced> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(sample(m, 30, rng).second);
  TrainConfig cfg;
  cfg.max_iterations = 1;
  const auto r = baum_welch1(m, corpus, cfg);
  REQUIRE(r.log_likelihoods.size() == 2);
  CHECK(r.log_likelihoods[1] >= r.log_likelihoods[0] - 1e-8);
}

TEST_CASE("baum_welch1: single state, single mixture gives the sample mean") {
  Rng rng(5);
  const auto o = random_observations(rng, 25, 3);
  const Hmm1Modeld m(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1),
                     {GaussianMixtured::single(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3))},
                     Topology::ergodic(1));
  TrainConfig cfg;
  cfg.max_iterations = 3;
  const auto r = baum_welch1(m, {o}, cfg);
  const Eigen::VectorXd mean = o.frames().rowwise().mean();
  CHECK((r.model.emissions()[0].means().col(0) - mean).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("baum_welch1: monotone, normalized and mask-respecting on left-to-right models") {
  Rng rng(23);
  for (int seed = 0; seed < 10; ++seed) {
    const auto truth = random_hmm1(rng, 4, 2, 2, Topology::left_to_right(4, 2));
    std::vector<ObservationSequenced> corpus;
    for (int i = 0; i < 8; ++i) corpus.push_back(sample(truth, 25, rng).second);
    TrainConfig cfg;
    cfg.states = 4;
    cfg.mixtures = 2;
    cfg.max_iterations = 8;
    cfg.tolerance = 0;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto r = baum_welch1(initialize_hmm1(corpus, cfg), corpus, cfg);
    for (std::size_t i = 1; i < r.log_likelihoods.size(); ++i) {
      CHECK(r.log_likelihoods[i] >= r.log_likelihoods[i - 1] - 1e-8);
    }
    const auto& a = r.model.transitions();
    for (Index i = 0; i < 4; ++i) {
      CHECK(std::abs(a.row(i).sum() - 1.0) < 1e-9);
      for (Index j = 0; j < 4; ++j) {
        if (!r.model.topology().arc(i, j)) CHECK(a(i, j) == 0.0);
      }
    }
    CHECK(r.model.initial()(0) == 1.0);
  }
}

TEST_CASE("baum_welch1 recovers a two-state transition matrix") {
  Eigen::MatrixXd a(2, 2);
  a << 0.8, 0.2, 0.3, 0.7;
  Eigen::MatrixXd means(1, 2);
  means << -2.0, 2.0;
  const Hmm1Modeld truth(Eigen::Vector2d(0.5, 0.5), a,
                         {GaussianMixtured::single(means.col(0), Eigen::VectorXd::Ones(1)),
                          GaussianMixtured::single(means.col(1), Eigen::VectorXd::Ones(1))},
                         Topology::ergodic(2));
  Rng rng(2024);
  std::vector<ObservationSequenced> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(sample(truth, 50, rng).second);
  const Hmm1Modeld start(Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Constant(2, 2, 0.5),
                         {GaussianMixtured::single(Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Ones(1)),
                          GaussianMixtured::single(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Ones(1))},
                         Topology::ergodic(2));
  TrainConfig cfg;
  cfg.max_iterations = 200;
  cfg.tolerance = 1e-9;
  const auto r = baum_welch1(start, corpus, cfg);
  CHECK((r.model.transitions() - a).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("baum_welch1 names a starved state") {
  std::vector<ObservationSequenced> corpus;
  Rng rng(8);
  for (int i = 0; i < 4; ++i) corpus.push_back(random_observations(rng, 2, 2));
  TrainConfig cfg;
  cfg.states = 3;
  cfg.mixtures = 1;
  const auto m = initialize_hmm1(corpus, cfg);
  try {
    baum_welch1(m, corpus, cfg);
    FAIL("expected StarvedStateError");
  } catch (const StarvedStateError& e) {
    CHECK(e.state() == 1);
  }
  CHECK_THROWS_AS(baum_welch1(m, {}, cfg), UsageError);
}

TEST_CASE("sampling is seed-deterministic") {
  Rng a(77), b(77), rng(1);
  const auto m = random_hmm1(rng, 3, 2, 2);
  const auto x = sample(m, 12, a);
  const auto y = sample(m, 12, b);
  CHECK(x.first == y.first);
  CHECK(x.second.frames() == y.second.frames());
}
