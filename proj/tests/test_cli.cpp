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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hmm2sid/cli.hpp"
#include "hmm2sid/io.hpp"

using namespace hmm2sid;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "hmm2sid_test_cli";

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path out = kRoot / "stdout.txt", err = kRoot / "stderr.txt";
  const std::string cmd = std::string("cd '") + kRoot.string() + "' && '" + HMM2SID_CLI_PATH + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  return Run{WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_text(out), read_text(err)};
}

const char* kSmallCorpus =
    "--speakers 3 --words 2 --repetitions 3 --train-repetitions 2 --min-length 20 --max-length 30 --dim 3";
const char* kSmallModel = "--states 3 --mixtures 2 --iterations 5";

bool same_tree(const fs::path& a, const fs::path& b) {
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  fs::remove_all(kRoot);
  const Run none = run("");
  CHECK(none.status == 2);
  CHECK(none.err.find("Usage") != std::string::npos);
  const Run train = run("train");
  CHECK(train.status == 2);
  CHECK(train.err.find("Usage: hmm2sid train") != std::string::npos);
  CHECK(train.out.empty());
  CHECK(run("train --manifest m.csv --db d --order 3").status == 2);
  CHECK(run("bench --states 9..3").status == 2);
  CHECK(run("eval --manifest m.csv --db d --paired").status == 2);
  CHECK(run("--help").status == 0);
  const Run help = run("train --help");
  CHECK(help.status == 0);
  CHECK(help.out.find("Usage: hmm2sid train") != std::string::npos);
}

TEST_CASE("runtime failures exit with status 1") {
  const Run r = run("identify --db missing_db --input missing.json");
  CHECK(r.status == 1);
  CHECK(r.err.find("missing_db") != std::string::npos);
}

TEST_CASE("synth, train, identify and eval are reproducible") {
  fs::remove_all(kRoot);
  for (const char* dir : {"a", "b"}) {
    const std::string d = dir;
    REQUIRE(run("synth --out " + d + "/corpus --seed 5 " + kSmallCorpus).status == 0);
    REQUIRE(run("train --manifest " + d + "/corpus/manifest.csv --db " + d + "/db --order 2 --seed 9 " + kSmallModel)
                .status == 0);
    REQUIRE(run("eval --manifest " + d + "/corpus/manifest.csv --db " + d + "/db --report " + d + "/report.json")
                .status == 0);
  }
  CHECK(same_tree(kRoot / "a", kRoot / "b"));
  CHECK(same_tree(kRoot / "b", kRoot / "a"));

  const auto reports = load_reports(kRoot / "a" / "report.json");
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].kind == ModelKind::hmm2);
  CHECK(reports[0].trials.size() == 6);

  const Run id = run("identify --db a/db --input a/corpus/features/spk02_w01_2.json");
  REQUIRE(id.status == 0);
  std::istringstream lines(id.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "rank,speaker,log_likelihood,per_frame");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("eval --paired prints a two-row comparison") {
  fs::remove_all(kRoot);
  REQUIRE(run(std::string("synth --out corpus ") + kSmallCorpus).status == 0);
  const Run r = run(std::string("eval --paired --manifest corpus/manifest.csv --report paired.json ") + kSmallModel);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("Recognition performance") != std::string::npos);
  const auto hmm1 = r.out.find("\nHMM1 "), hmm2 = r.out.find("\nHMM2 ");
  CHECK(hmm1 != std::string::npos);
  CHECK(hmm2 != std::string::npos);
  CHECK(hmm1 < hmm2);
  const auto reports = load_reports(kRoot / "paired.json");
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].kind == ModelKind::hmm1);
  CHECK(reports[1].kind == ModelKind::hmm2);
}

TEST_CASE("features extracts WAV manifests") {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot / "wav");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.1);
  CorpusManifest m;
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXd x(4000);
    for (Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    const fs::path p = kRoot / "wav" / ("s_" + std::to_string(r) + ".wav");
    write_wav(p, x, 8000);
    m.records.push_back(ManifestRecord{"s", "hello", r, r == 0 ? Role::train : Role::test, p});
  }
  save_manifest(m, kRoot / "wav" / "manifest.csv");
  const Run r = run("features --manifest wav/manifest.csv --out feats");
  REQUIRE(r.status == 0);
  const CorpusManifest written = load_manifest(kRoot / "feats" / "manifest.csv");
  REQUIRE(written.records.size() == 2);
  const auto o = load_features(written.records[1].path);
  const auto expected = extract(FeatureConfig{}, load_wav(m.records[1].path, 8000));
  CHECK(o.frames() == expected.frames());
  CHECK(o.length() == 48);

  // The WAV manifest also trains directly.
  CHECK(run("train --manifest wav/manifest.csv --db wavdb --order 1 --states 2 --mixtures 1").status == 0);
  CHECK(run("features --manifest wav/manifest.csv --out bad --sample-rate 16000").status == 1);
}

TEST_CASE("bench writes the timing CSV") {
  const Run r = run("bench --states 3..4 --length 20 --batches 1");
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "order,states,length,seconds");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.find(",20,") != std::string::npos);
  }
  CHECK(rows == 4);
  CHECK(r.err.find("slope") != std::string::npos);
}

TEST_CASE("run_cli can be driven in-process") {
  std::ostringstream out, err;
  CHECK(run_cli({"bench", "--states", "oops"}, out, err) == 2);
  CHECK(err.str().find("oops") != std::string::npos);
}
