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

#include <algorithm>
#include <random>
#include <string>

#include "doctest.h"
#include "hmm2sid/speakerid.hpp"
#include "hmm2sid/synth.hpp"
#include "oracles.hpp"

using namespace hmm2sid;
using namespace hmm2sid::testing;

namespace {

EnrollConfig small_config(int states = 3, int mixtures = 1) {
  EnrollConfig c;
  c.train.states = states;
  c.train.mixtures = mixtures;
  c.train.max_iterations = 5;
  c.train.threads = 1;
  return c;
}

bool same_model(const AnyModel& a, const AnyModel& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<Hmm2Modeld>(&a)) {
    const auto& y = std::get<Hmm2Modeld>(b);
    bool same = x->initial() == y.initial() && x->first_order() == y.first_order() &&
                x->second_order() == y.second_order();
    for (Index s = 0; s < x->states(); ++s) {
      same = same && x->emissions()[s].means() == y.emissions()[s].means() &&
             x->emissions()[s].variances() == y.emissions()[s].variances() &&
             x->emissions()[s].weights() == y.emissions()[s].weights();
    }
    return same;
  }
  const auto& x = std::get<Hmm1Modeld>(a);
  const auto& y = std::get<Hmm1Modeld>(b);
  return x.initial() == y.initial() && x.transitions() == y.transitions();
}

Trial trial(const std::string& truth, const std::string& predicted) {
  return Trial{truth, predicted, "w", 0, 1.0, -10.0, 10};
}

}  // namespace

TEST_CASE("enroll a single speaker with a single utterance") {
  Rng rng(1);
  std::map<std::string, std::vector<ObservationSequenced>> corpus;
  corpus["only"].push_back(random_observations(rng, 30, 2));
  const SpeakerDb db = enroll(corpus, ModelKind::hmm2, small_config());
  CHECK(db.size() == 1);
  CHECK(db.kind == ModelKind::hmm2);
  CHECK(db.fingerprint.dim == 2);
  for (int i = 0; i < 5; ++i) CHECK(identify(db, random_observations(rng, 12, 2)).speaker == "only");
}

TEST_CASE("identical training data gives identical models") {
  Rng rng(2);
  std::vector<ObservationSequenced> data;
  for (int i = 0; i < 4; ++i) data.push_back(random_observations(rng, 25, 3));
  for (ModelKind kind : {ModelKind::hmm1, ModelKind::hmm2}) {
    const SpeakerDb db = enroll({{"b", data}, {"a", data}}, kind, small_config(3, 2));
    CHECK(same_model(db.model("a", kAllWords), db.model("b", kAllWords)));
    // Shared models tie everywhere, so the lexicographically first id wins.
    const auto id = identify(db, random_observations(rng, 10, 3));
    CHECK(id.speaker == "a");
    CHECK(id.ranking[0].log_likelihood == id.ranking[1].log_likelihood);
  }
}

TEST_CASE("enrollment is independent of the thread count") {
  Rng rng(3);
  std::map<std::string, std::vector<ObservationSequenced>> corpus;
  for (const char* s : {"x", "y", "z"}) {
    for (int i = 0; i < 3; ++i) corpus[s].push_back(random_observations(rng, 20, 2));
  }
  EnrollConfig one = small_config(), many = small_config();
  many.train.threads = 3;
  const SpeakerDb a = enroll(corpus, ModelKind::hmm2, one);
  const SpeakerDb b = enroll(corpus, ModelKind::hmm2, many);
  for (const char* s : {"x", "y", "z"}) CHECK(same_model(a.model(s, kAllWords), b.model(s, kAllWords)));
}

TEST_CASE("training failures name the speaker") {
  Rng rng(4);
  std::map<std::string, std::vector<ObservationSequenced>> corpus;
  corpus["fine"].push_back(random_observations(rng, 40, 2));
  corpus["short"].push_back(random_observations(rng, 1, 2));
  try {
    enroll(corpus, ModelKind::hmm2, small_config());
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.speaker() == "short");
  }
  corpus["empty"] = {};
  CHECK_THROWS_AS(enroll(corpus, ModelKind::hmm1, small_config()), UsageError);
}

TEST_CASE("identify ranks by raw log-likelihood") {
  Rng rng(5);
  std::map<std::string, std::vector<ObservationSequenced>> corpus;
  for (const char* s : {"s1", "s2", "s3", "s4"}) {
    for (int i = 0; i < 2; ++i) corpus[s].push_back(random_observations(rng, 15, 2));
  }
  const SpeakerDb db = enroll(corpus, ModelKind::hmm1, small_config());
  const auto o = random_observations(rng, 20, 2);
  const auto id = identify(db, o);
  REQUIRE(id.ranking.size() == 4);
  CHECK(id.speaker == id.ranking.front().speaker);
  const double top = id.ranking.front().log_likelihood;
  for (std::size_t r = 0; r < id.ranking.size(); ++r) {
    const auto& s = id.ranking[r];
    CHECK(s.log_likelihood == log_likelihood(db.model(s.speaker, kAllWords), o));
    CHECK(s.per_frame == doctest::Approx(s.log_likelihood / 20.0));
    if (r > 0) CHECK(s.log_likelihood <= id.ranking[r - 1].log_likelihood);
  }
  // Shifting every score by the top one leaves the order unchanged.
  auto shifted = id.ranking;
  for (auto& s : shifted) s.log_likelihood -= top;
  CHECK(std::is_sorted(shifted.begin(), shifted.end(),
                       [](const Score& a, const Score& b) { return a.log_likelihood > b.log_likelihood; }));

  CHECK_THROWS_AS(identify(db, random_observations(rng, 5, 3)), UsageError);
  CHECK_THROWS_AS(identify(SpeakerDb{}, o), UsageError);
}

TEST_CASE("summaries and evaluation preconditions") {
  std::vector<Trial> trials;
  for (int i = 0; i < 18; ++i) trials.push_back(trial("a", "a"));
  trials.push_back(trial("a", "b"));
  trials.push_back(trial("b", "a"));
  const EvalReport r = summarize(ModelKind::hmm1, trials);
  CHECK(r.accuracy == 90.0);
  CHECK(r.correct == 18);
  CHECK(r.confusion.at("a").at("a") == 18);
  CHECK(r.confusion.at("a").at("b") == 1);
  CHECK(r.confusion.at("b").at("a") == 1);
  CHECK(r.mean_per_frame_log_likelihood == -1.0);

  std::mt19937_64 rng(6);
  std::shuffle(trials.begin(), trials.end(), rng);
  const EvalReport shuffled = summarize(ModelKind::hmm1, trials);
  CHECK(shuffled.accuracy == r.accuracy);
  CHECK(shuffled.confusion == r.confusion);

  Rng orng(7);
  const SpeakerDb db = enroll({{"a", {random_observations(orng, 20, 2)}}}, ModelKind::hmm1, small_config());
  CHECK_THROWS_AS(evaluate(db, {}), UsageError);
  CHECK_THROWS_AS(evaluate(db, {Utterance{"stranger", kAllWords, 0, Role::test, random_observations(orng, 5, 2)}}),
                  UsageError);
  const EvalReport one = evaluate(db, {Utterance{"a", kAllWords, 0, Role::test, random_observations(orng, 5, 2)}});
  CHECK(one.accuracy == 100.0);
  CHECK(one.trials[0].margin == 0.0);
}

TEST_CASE("a well separated synthetic population is identified") {
  SynthConfig sc;
  sc.speakers = 4;
  sc.words = 2;
  sc.repetitions = 4;
  sc.train_repetitions = 3;
  sc.min_length = 30;
  sc.max_length = 50;
  sc.dim = 4;
  sc.speaker_spread = 3.0;
  const SynthCorpus corpus = synthesize(sc);
  CHECK(corpus.utterances.size() == 32);
  std::vector<Utterance> test;
  for (const auto& u : corpus.utterances) {
    if (u.role == Role::test) test.push_back(u);
  }
  for (bool per_word : {false, true}) {
    EnrollConfig c = small_config(5, 2);
    c.per_word = per_word;
    const SpeakerDb db = enroll(corpus.utterances, ModelKind::hmm2, c);
    CHECK(db.per_word == per_word);
    CHECK(db.entries.at("spk01").size() == (per_word ? 2u : 1u));
    const EvalReport report = evaluate(db, test, 1);
    CHECK(report.accuracy == 100.0);
    for (const auto& t : report.trials) CHECK(t.margin > 0);
  }
  // Fresh draws from a speaker's own generator rank that speaker first.
  const EnrollConfig c = small_config(5, 2);
  const SpeakerDb db = enroll(corpus.utterances, ModelKind::hmm2, c);
  Rng rng(8);
  for (int s = 0; s < sc.speakers; ++s) {
    const auto& g = corpus.generators[static_cast<std::size_t>(s * sc.words)];
    CHECK(identify(db, sample(g, 40, rng).second).speaker == corpus.speakers[s]);
  }
}

TEST_CASE("synthetic corpus shape and determinism") {
  SynthConfig sc;
  sc.speakers = 3;
  sc.words = 2;
  sc.repetitions = 9;
  sc.dim = 3;
  const SynthCorpus a = synthesize(sc), b = synthesize(sc);
  REQUIRE(a.utterances.size() == 54);
  int train = 0;
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    const auto& u = a.utterances[i];
    CHECK(u.obs.frames() == b.utterances[i].obs.frames());
    CHECK(u.obs.length() >= 40);
    CHECK(u.obs.length() <= 120);
    CHECK((u.role == Role::train) == (u.repetition < 6));
    train += u.role == Role::train;
  }
  CHECK(train == 36);
  sc.seed = 2;
  CHECK(synthesize(sc).utterances[0].obs.frames() != a.utterances[0].obs.frames());
  sc.train_repetitions = 10;
  CHECK_THROWS_AS(synthesize(sc), UsageError);
}
