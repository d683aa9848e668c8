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

// Seeded synthetic speaker corpora drawn from second-order generators.

#ifndef HMM2SID_SYNTH_HPP_
#define HMM2SID_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hmm2sid/hmm2.hpp"
#include "hmm2sid/speakerid.hpp"

namespace hmm2sid {

struct SynthConfig {
  int speakers = 20;
  int words = 10;
  int repetitions = 9;
  // Repetitions [0, train_repetitions) are marked train, the rest test.
  int train_repetitions = 6;
  int min_length = 40;
  int max_length = 120;
  int dim = 12;
  int states = 5;
  std::uint64_t seed = 1;
  // Standard deviations of the word templates, the per-speaker offsets added
  // to them, and the frame noise around each state mean.
  double word_spread = 1.5;
  double speaker_spread = 0.75;
  double noise = 1.0;

  void validate() const;
};

// Every (speaker, word) pair gets a left-to-right HMM2 whose state means are
// a word template plus a speaker offset. Dwell behaviour is speaker specific
// and genuinely second order: the chance of staying in a state differs
// between the frame right after entering it and later frames.
struct SynthCorpus {
  SynthConfig config;
  std::vector<std::string> speakers;
  std::vector<std::string> words;
  // generators[s * words + w]
  std::vector<Hmm2Modeld> generators;
  // Ordered by speaker, word, repetition.
  std::vector<Utterance> utterances;
};

SynthCorpus synthesize(const SynthConfig& config);

// Writes features/<speaker>_<word>_<rep>.json under `dir` plus manifest.csv,
// returning the manifest path.
std::filesystem::path write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace hmm2sid

#endif  // HMM2SID_SYNTH_HPP_
