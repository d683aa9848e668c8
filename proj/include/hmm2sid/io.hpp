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

// On-disk formats: models, feature files, corpus manifests, speaker
// databases and evaluation reports. Structured files are versioned JSON with
// probabilities in the linear domain; doubles are written in shortest
// round-trip form, so save/load is bit-exact.

#ifndef HMM2SID_IO_HPP_
#define HMM2SID_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hmm2sid/model.hpp"
#include "hmm2sid/speakerid.hpp"

namespace hmm2sid {

inline constexpr int kFormatVersion = 1;

std::string model_to_text(const AnyModel& m);
// `origin` prefixes error messages.
AnyModel model_from_text(std::string_view text, const std::string& origin = "model");
void save_model(const AnyModel& m, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

void save_features(const ObservationSequenced& o, const std::filesystem::path& path);
ObservationSequenced load_features(const std::filesystem::path& path);

struct ManifestRecord {
  std::string speaker;
  std::string utterance;
  int repetition = 0;
  Role role = Role::train;
  // Absolute after loading; written relative to the manifest when possible.
  std::filesystem::path path;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct CorpusManifest {
  std::vector<ManifestRecord> records;
};

// CSV with header `speaker,utterance,repetition,role,path`. Relative paths are
// resolved against the manifest's directory. Duplicate
// (speaker, utterance, repetition) keys and, when `check_paths` is set,
// missing files are rejected with FormatError.
CorpusManifest load_manifest(const std::filesystem::path& path, bool check_paths = true);
void save_manifest(const CorpusManifest& m, const std::filesystem::path& path);

// Loads every record whose role is in `roles`: `.wav` files go through
// feature extraction, anything else is read as a feature file.
std::vector<Utterance> load_utterances(const CorpusManifest& m, const FeatureConfig& features,
                                       std::initializer_list<Role> roles = {Role::train,
                                                                            Role::test});

// A directory holding db.json and one file per model under models/.
void save_db(const SpeakerDb& db, const std::filesystem::path& dir);
SpeakerDb load_db(const std::filesystem::path& dir);

std::string reports_to_text(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_text(std::string_view text, const std::string& origin = "report");
void save_reports(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
std::vector<EvalReport> load_reports(const std::filesystem::path& path);

// Whole-file helpers; failures raise FormatError naming the path.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace hmm2sid

#endif  // HMM2SID_IO_HPP_
