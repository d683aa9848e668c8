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

#include "hmm2sid/synth.hpp"

#include <cstdio>
#include <random>

#include "hmm2sid/io.hpp"

namespace hmm2sid {

void SynthConfig::validate() const {
  if (speakers < 1 || words < 1 || repetitions < 1) {
    throw UsageError("synth: speakers, words and repetitions must be positive");
  }
  if (train_repetitions < 0 || train_repetitions > repetitions) {
    throw UsageError("synth: train repetitions must lie in [0, repetitions]");
  }
  if (min_length < 1 || max_length < min_length) throw UsageError("synth: bad length range");
  if (dim < 1 || states < 2) throw UsageError("synth: need dim >= 1 and states >= 2");
  if (!(word_spread >= 0) || !(speaker_spread >= 0) || !(noise > 0)) {
    throw UsageError("synth: spreads must be non-negative and noise positive");
  }
}

namespace {

std::string label(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i + 1);
  return buf;
}

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols, double sd) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = g(rng);
  }
  return m;
}

Hmm2Modeld generator(const Eigen::MatrixXd& means, const Eigen::VectorXd& stay_entered,
                     const Eigen::VectorXd& stay_settled, double noise) {
  const Index n = means.cols();
  const Topology topo = Topology::left_to_right(n, 1);
  Eigen::VectorXd initial = Eigen::VectorXd::Zero(n);
  initial(0) = 1.0;
  auto row = [n](Index j, double stay) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    if (j + 1 < n) {
      r(j) = stay;
      r(j + 1) = 1.0 - stay;
    } else {
      r(j) = 1.0;
    }
    return r;
  };
  Eigen::MatrixXd a2(n, n);
  Eigen::MatrixXd a3 = Eigen::MatrixXd::Zero(n * n, n);
  for (Index j = 0; j < n; ++j) a2.row(j) = row(j, stay_entered(j));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (!topo.arc(i, j)) continue;
      a3.row(i * n + j) = row(j, i == j ? stay_settled(j) : stay_entered(j));
    }
  }
  std::vector<GaussianMixtured> emissions;
  for (Index s = 0; s < n; ++s) {
    emissions.push_back(GaussianMixtured::single(
        means.col(s), Eigen::VectorXd::Constant(means.rows(), noise * noise)));
  }
  return Hmm2Modeld(initial, a2, a3, std::move(emissions), topo);
}

}  // namespace

SynthCorpus synthesize(const SynthConfig& config) {
  config.validate();
  SynthCorpus out;
  out.config = config;
  const Index d = config.dim;
  const Index n = config.states;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> entered(0.05, 0.9);
  std::uniform_real_distribution<double> settled(0.85, 0.97);

  std::vector<Eigen::MatrixXd> templates;
  for (int w = 0; w < config.words; ++w) {
    out.words.push_back(label("w", w));
    templates.push_back(gaussian_matrix(rng, d, n, config.word_spread));
  }
  for (int s = 0; s < config.speakers; ++s) {
    out.speakers.push_back(label("spk", s));
    const Eigen::MatrixXd offset = gaussian_matrix(rng, d, n, config.speaker_spread);
    Eigen::VectorXd stay_entered(n), stay_settled(n);
    for (Index j = 0; j < n; ++j) {
      stay_entered(j) = entered(rng);
      stay_settled(j) = settled(rng);
    }
    for (int w = 0; w < config.words; ++w) {
      out.generators.push_back(generator(templates[w] + offset, stay_entered, stay_settled, config.noise));
    }
  }

  std::uniform_int_distribution<int> length(config.min_length, config.max_length);
  for (int s = 0; s < config.speakers; ++s) {
    for (int w = 0; w < config.words; ++w) {
      const Hmm2Modeld& g = out.generators[static_cast<std::size_t>(s * config.words + w)];
      for (int r = 0; r < config.repetitions; ++r) {
        // Each utterance has its own stream so any subset regenerates identically.
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(w),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 urng(seq);
        const auto drawn = sample(g, length(urng), urng);
        const std::string id = out.speakers[s] + "/" + out.words[w] + "/" + std::to_string(r);
        out.utterances.push_back(Utterance{out.speakers[s], out.words[w], r,
                                           r < config.train_repetitions ? Role::train : Role::test,
                                           ObservationSequenced(drawn.second.frames(), id)});
      }
    }
  }
  return out;
}

std::filesystem::path write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");
  CorpusManifest manifest;
  for (const auto& u : corpus.utterances) {
    const fs::path rel = fs::path("features") / (u.speaker + "_" + u.word + "_" + std::to_string(u.repetition) + ".json");
    save_features(u.obs, dir / rel);
    manifest.records.push_back(ManifestRecord{u.speaker, u.word, u.repetition, u.role, fs::absolute(dir / rel)});
  }
  const fs::path path = dir / "manifest.csv";
  save_manifest(manifest, path);
  return path;
}

}  // namespace hmm2sid
