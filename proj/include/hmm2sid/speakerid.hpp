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

// Text-dependent speaker identification: enrollment, scoring, evaluation.

#ifndef HMM2SID_SPEAKERID_HPP_
#define HMM2SID_SPEAKERID_HPP_

#include <map>
#include <string>
#include <vector>

#include "hmm2sid/features.hpp"
#include "hmm2sid/model.hpp"
#include "hmm2sid/train_config.hpp"

namespace hmm2sid {

enum class Role { train, test };

inline std::string to_string(Role r) { return r == Role::train ? "train" : "test"; }
Role parse_role(std::string_view s);

struct Utterance {
  std::string speaker;
  std::string word;
  int repetition = 0;
  Role role = Role::train;
  ObservationSequenced obs;
};

struct EnrollConfig {
  TrainConfig train;
  // One model per (speaker, word) instead of one per speaker.
  bool per_word = false;
  // Recorded in the database; not used for training feature files.
  FeatureConfig features;
};

// Settings every model in a database was built with.
struct Fingerprint {
  FeatureConfig features;
  int states = 0;
  int mixtures = 0;
  int max_jump = 0;
  int dim = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// Key used for the single model of a speaker when models are not per word.
inline const std::string kAllWords = "*";

struct SpeakerDb {
  ModelKind kind = ModelKind::hmm1;
  bool per_word = false;
  Fingerprint fingerprint;
  // speaker -> word (or kAllWords) -> model
  std::map<std::string, std::map<std::string, AnyModel>> entries;

  std::size_t size() const { return entries.size(); }
  // Model used to score `word` for `speaker`.
  const AnyModel& model(const std::string& speaker, const std::string& word) const;
  // Throws InvariantError on an empty db or models that disagree in kind or shape.
  void validate() const;
};

// Trains one model per speaker (or per speaker and word). HMM2 models start
// from the trained HMM1 of the same data, lifted to second order. Only
// utterances with Role::train are used. Failures are rethrown as
// TrainingError naming the speaker.
SpeakerDb enroll(const std::vector<Utterance>& corpus, ModelKind kind, const EnrollConfig& config);

SpeakerDb enroll(const std::map<std::string, std::vector<ObservationSequenced>>& corpus,
                 ModelKind kind, const EnrollConfig& config);

struct Score {
  std::string speaker;
  double log_likelihood = 0;
  double per_frame = 0;
};

struct Identification {
  std::string speaker;
  // Best first; equal scores ordered by speaker id.
  std::vector<Score> ranking;
};

Identification identify(const SpeakerDb& db, const ObservationSequenced& o,
                        const std::string& word = kAllWords);

struct Trial {
  std::string truth;
  std::string predicted;
  std::string word;
  int repetition = 0;
  // True speaker's score minus the best other speaker's (0 with one speaker).
  double margin = 0;
  double true_log_likelihood = 0;
  long frames = 0;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct EvalReport {
  ModelKind kind = ModelKind::hmm1;
  std::vector<Trial> trials;
  long correct = 0;
  double accuracy = 0;
  // Mean over trials of the true speaker's log-likelihood per frame.
  double mean_per_frame_log_likelihood = 0;
  // truth -> predicted -> count
  std::map<std::string, std::map<std::string, long>> confusion;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Recomputes the summary fields from the trial list.
EvalReport summarize(ModelKind kind, std::vector<Trial> trials);

// Scores every utterance in `test` against the database. Trials run in
// parallel; the report lists them in input order.
EvalReport evaluate(const SpeakerDb& db, const std::vector<Utterance>& test, unsigned threads = 0);

// Plain-text accuracy table, one row per report.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace hmm2sid

#endif  // HMM2SID_SPEAKERID_HPP_
