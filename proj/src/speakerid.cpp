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

#include "hmm2sid/speakerid.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hmm2sid/parallel.hpp"

namespace hmm2sid {

Role parse_role(std::string_view s) {
  if (s == "train") return Role::train;
  if (s == "test") return Role::test;
  throw UsageError("unknown role '" + std::string(s) + "' (expected train or test)");
}

const AnyModel& SpeakerDb::model(const std::string& speaker, const std::string& word) const {
  const auto it = entries.find(speaker);
  if (it == entries.end()) throw UsageError("speaker '" + speaker + "' is not enrolled");
  const std::string& key = per_word ? word : kAllWords;
  const auto m = it->second.find(key);
  if (m == it->second.end()) {
    throw UsageError("speaker '" + speaker + "' has no model for word '" + key + "'");
  }
  return m->second;
}

void SpeakerDb::validate() const {
  if (entries.empty()) throw InvariantError("speaker database is empty");
  for (const auto& [speaker, models] : entries) {
    if (models.empty()) throw InvariantError("speaker '" + speaker + "' has no models");
    for (const auto& [word, m] : models) {
      if (!per_word && word != kAllWords) {
        throw InvariantError("speaker '" + speaker + "' has a per-word model in a shared db");
      }
      if (kind_of(m) != kind || states_of(m) != fingerprint.states ||
          mixtures_of(m) != fingerprint.mixtures || dim_of(m) != fingerprint.dim) {
        throw InvariantError("model for speaker '" + speaker + "', word '" + word +
                             "' disagrees with the database kind or shape");
      }
    }
  }
}

namespace {

AnyModel train_one(const std::vector<ObservationSequenced>& seqs, ModelKind kind,
                   const TrainConfig& config) {
  const auto first = baum_welch1(initialize_hmm1(seqs, config), seqs, config);
  if (kind == ModelKind::hmm1) return first.model;
  return baum_welch2(lift_hmm1(first.model), seqs, config).model;
}

}  // namespace

SpeakerDb enroll(const std::vector<Utterance>& corpus, ModelKind kind, const EnrollConfig& config) {
  config.features.validate();
  std::map<std::pair<std::string, std::string>, std::vector<ObservationSequenced>> groups;
  Index dim = -1;
  for (const auto& u : corpus) {
    if (u.role != Role::train) continue;
    if (dim < 0) dim = u.obs.dim();
    if (u.obs.dim() != dim) {
      throw UsageError("training utterance '" + u.obs.source_id() + "' has dimension " +
                       std::to_string(u.obs.dim()) + ", expected " + std::to_string(dim));
    }
    groups[{u.speaker, config.per_word ? u.word : kAllWords}].push_back(u.obs);
  }
  if (groups.empty()) throw UsageError("enroll: no training utterances");

  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& [key, seqs] : groups) keys.push_back(key);
  const unsigned threads = config.train.threads == 0 ? default_thread_count() : config.train.threads;
  TrainConfig inner = config.train;
  inner.threads = keys.size() > 1 ? 1 : threads;

  std::vector<AnyModel> models(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    try {
      models[i] = train_one(groups.at(keys[i]), kind, inner);
    } catch (const Error& e) {
      throw TrainingError(keys[i].first, e.what());
    }
  });

  SpeakerDb db;
  db.kind = kind;
  db.per_word = config.per_word;
  db.fingerprint = Fingerprint{config.features,      config.train.states, config.train.mixtures,
                               config.train.max_jump, static_cast<int>(dim), config.train.seed};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    db.entries[keys[i].first].emplace(keys[i].second, std::move(models[i]));
  }
  db.validate();
  return db;
}

SpeakerDb enroll(const std::map<std::string, std::vector<ObservationSequenced>>& corpus,
                 ModelKind kind, const EnrollConfig& config) {
  std::vector<Utterance> flat;
  for (const auto& [speaker, seqs] : corpus) {
    if (seqs.empty()) throw UsageError("speaker '" + speaker + "' has no training utterances");
    for (const auto& o : seqs) flat.push_back(Utterance{speaker, kAllWords, 0, Role::train, o});
  }
  EnrollConfig c = config;
  c.per_word = false;
  return enroll(flat, kind, c);
}

Identification identify(const SpeakerDb& db, const ObservationSequenced& o, const std::string& word) {
  if (db.entries.empty()) throw UsageError("identify: speaker database is empty");
  if (o.dim() != db.fingerprint.dim) {
    throw UsageError("identify: feature dimension " + std::to_string(o.dim()) +
                     " does not match the database (" + std::to_string(db.fingerprint.dim) + ")");
  }
  Identification out;
  for (const auto& [speaker, models] : db.entries) {
    const double ll = log_likelihood(db.model(speaker, word), o);
    out.ranking.push_back(Score{speaker, ll, ll / static_cast<double>(o.length())});
  }
  // entries is ordered by id, so a stable sort keeps ties lexicographic.
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const Score& a, const Score& b) { return a.log_likelihood > b.log_likelihood; });
  out.speaker = out.ranking.front().speaker;
  return out;
}

EvalReport summarize(ModelKind kind, std::vector<Trial> trials) {
  EvalReport r;
  r.kind = kind;
  r.trials = std::move(trials);
  double per_frame = 0;
  for (const auto& t : r.trials) {
    if (t.truth == t.predicted) ++r.correct;
    ++r.confusion[t.truth][t.predicted];
    per_frame += t.true_log_likelihood / static_cast<double>(t.frames);
  }
  if (!r.trials.empty()) {
    const auto n = static_cast<double>(r.trials.size());
    r.accuracy = 100.0 * static_cast<double>(r.correct) / n;
    r.mean_per_frame_log_likelihood = per_frame / n;
  }
  return r;
}

EvalReport evaluate(const SpeakerDb& db, const std::vector<Utterance>& test, unsigned threads) {
  if (test.empty()) throw UsageError("evaluate: empty test set");
  for (const auto& u : test) {
    if (!db.entries.contains(u.speaker)) {
      throw UsageError("evaluate: test label '" + u.speaker + "' is not enrolled");
    }
  }
  std::vector<Trial> trials(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) {
    const Utterance& u = test[i];
    const Identification id = identify(db, u.obs, u.word);
    Trial& t = trials[i];
    t.truth = u.speaker;
    t.predicted = id.speaker;
    t.word = u.word;
    t.repetition = u.repetition;
    t.frames = static_cast<long>(u.obs.length());
    double best_other = -std::numeric_limits<double>::infinity();
    for (const auto& s : id.ranking) {
      if (s.speaker == u.speaker) {
        t.true_log_likelihood = s.log_likelihood;
      } else {
        best_other = std::max(best_other, s.log_likelihood);
      }
    }
    t.margin = id.ranking.size() > 1 ? t.true_log_likelihood - best_other : 0.0;
  });
  return summarize(db.kind, std::move(trials));
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "Model  Recognition performance  Trials  Mean log-likelihood/frame\n";
  char line[128];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-5s  %22.1f%%  %6zu  %25.4f\n",
                  r.kind == ModelKind::hmm1 ? "HMM1" : "HMM2", r.accuracy, r.trials.size(),
                  r.mean_per_frame_log_likelihood);
    out << line;
  }
  return out.str();
}

}  // namespace hmm2sid
