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

#include "hmm2sid/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "hmm2sid/bench.hpp"
#include "hmm2sid/io.hpp"
#include "hmm2sid/speakerid.hpp"
#include "hmm2sid/synth.hpp"

namespace hmm2sid {

namespace fs = std::filesystem;

namespace {

void add_feature_options(CLI::App& cmd, FeatureConfig& f) {
  cmd.add_option("--sample-rate", f.sample_rate, "Expected WAV sample rate")->capture_default_str();
  cmd.add_option("--frame-length", f.frame_length, "Samples per analysis frame")->capture_default_str();
  cmd.add_option("--frame-shift", f.frame_shift, "Samples between frame starts")->capture_default_str();
  cmd.add_option("--pre-emphasis", f.pre_emphasis, "Pre-emphasis coefficient")->capture_default_str();
  cmd.add_option("--lpc-order", f.lpc_order, "LPC predictor order")->capture_default_str();
  cmd.add_option("--cepstral-order", f.cepstral_order, "Cepstral coefficients per frame")
      ->capture_default_str();
}

void add_train_options(CLI::App& cmd, EnrollConfig& c) {
  cmd.add_option("--states", c.train.states, "States per model")->capture_default_str();
  cmd.add_option("--mixtures", c.train.mixtures, "Gaussian components per state")->capture_default_str();
  cmd.add_option("--max-jump", c.train.max_jump, "Longest forward jump of the left-to-right topology")
      ->capture_default_str();
  cmd.add_option("--iterations", c.train.max_iterations, "Baum-Welch iteration cap")->capture_default_str();
  cmd.add_option("--tolerance", c.train.tolerance, "Relative log-likelihood gain to stop at")
      ->capture_default_str();
  cmd.add_option("--seed", c.train.seed, "Initialization seed")->capture_default_str();
  cmd.add_option("--threads", c.train.threads, "Worker threads (0 = all cores)")->capture_default_str();
  cmd.add_flag("--per-word", c.per_word, "Train one model per speaker and word");
}

void check_train(const EnrollConfig& c) {
  const auto& t = c.train;
  if (t.states < 1 || t.mixtures < 1 || t.max_jump < 0 || t.max_iterations < 0) {
    throw UsageError("states and mixtures must be positive; max-jump and iterations non-negative");
  }
}

std::vector<Utterance> of_role(const std::vector<Utterance>& all, Role role) {
  std::vector<Utterance> out;
  for (const auto& u : all) {
    if (u.role == role) out.push_back(u);
  }
  return out;
}

ObservationSequenced load_input(const fs::path& p, const FeatureConfig& f) {
  if (p.extension() == ".wav" || p.extension() == ".WAV") {
    return extract(f, load_wav(p, f.sample_rate), p.string());
  }
  return load_features(p);
}

void emit_report(const std::vector<EvalReport>& reports, const std::string& path, std::ostream& out) {
  out << format_table(reports);
  if (!path.empty()) save_reports(reports, path);
}

const CLI::App* active_subcommand(const CLI::App& app) {
  const auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.back();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speaker identification with first- and second-order hidden Markov models", "hmm2sid"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  FeatureConfig features;
  EnrollConfig enroll_config;
  std::string manifest, out_dir, db_dir, input, word = kAllWords, report;
  int order = 2;
  bool paired = false;

  auto* cmd_features = app.add_subcommand("features", "Extract LPC-cepstral feature files for a manifest");
  cmd_features->add_option("--manifest", manifest, "Corpus manifest (CSV)")->required();
  cmd_features->add_option("--out", out_dir, "Output directory")->required();
  add_feature_options(*cmd_features, features);

  auto* cmd_train = app.add_subcommand("train", "Enroll every speaker in a manifest into a database");
  cmd_train->add_option("--manifest", manifest, "Corpus manifest (CSV)")->required();
  cmd_train->add_option("--db", db_dir, "Database directory to write")->required();
  cmd_train->add_option("--order", order, "Model order")->check(CLI::IsMember({1, 2}))->capture_default_str();
  add_train_options(*cmd_train, enroll_config);
  add_feature_options(*cmd_train, features);

  auto* cmd_identify = app.add_subcommand("identify", "Rank enrolled speakers for one utterance");
  cmd_identify->add_option("--db", db_dir, "Database directory")->required();
  cmd_identify->add_option("--input", input, "Feature file or WAV")->required();
  cmd_identify->add_option("--word", word, "Word label, for per-word databases");

  auto* cmd_eval = app.add_subcommand("eval", "Score the test records of a manifest");
  cmd_eval->add_option("--manifest", manifest, "Corpus manifest (CSV)")->required();
  auto* db_opt = cmd_eval->add_option("--db", db_dir, "Database directory");
  auto* paired_opt = cmd_eval->add_flag("--paired", paired, "Train both orders on the manifest and compare");
  db_opt->excludes(paired_opt);
  cmd_eval->add_option("--report", report, "Write the structured report here");
  add_train_options(*cmd_eval, enroll_config);
  add_feature_options(*cmd_eval, features);

  SynthConfig synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic speaker corpus");
  cmd_synth->add_option("--out", out_dir, "Output directory")->required();
  cmd_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  cmd_synth->add_option("--speakers", synth.speakers)->capture_default_str();
  cmd_synth->add_option("--words", synth.words)->capture_default_str();
  cmd_synth->add_option("--repetitions", synth.repetitions)->capture_default_str();
  cmd_synth->add_option("--train-repetitions", synth.train_repetitions)->capture_default_str();
  cmd_synth->add_option("--min-length", synth.min_length)->capture_default_str();
  cmd_synth->add_option("--max-length", synth.max_length)->capture_default_str();
  cmd_synth->add_option("--dim", synth.dim)->capture_default_str();
  cmd_synth->add_option("--states", synth.states)->capture_default_str();
  cmd_synth->add_option("--word-spread", synth.word_spread)->capture_default_str();
  cmd_synth->add_option("--speaker-spread", synth.speaker_spread)->capture_default_str();
  cmd_synth->add_option("--noise", synth.noise)->capture_default_str();

  BenchConfig bench;
  std::string states_range = "3..9", bench_out;
  auto* cmd_bench = app.add_subcommand("bench", "Time the forward recursions of both orders");
  cmd_bench->add_option("--states", states_range, "State counts, A..B")->capture_default_str();
  cmd_bench->add_option("--length", bench.length, "Sequence length")->capture_default_str();
  cmd_bench->add_option("--seed", bench.seed)->capture_default_str();
  cmd_bench->add_option("--batches", bench.batches, "Timed batches per point (best is kept)")
      ->capture_default_str();
  cmd_bench->add_option("--out", bench_out, "Write the CSV here instead of standard output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    const CLI::App* sub = active_subcommand(app);
    out << (sub != nullptr ? sub->help("hmm2sid") : app.help());
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = active_subcommand(app);
    err << (sub != nullptr ? sub->help("hmm2sid") : app.help());
    return 2;
  }

  try {
    if (*cmd_features) {
      features.validate();
      const CorpusManifest m = load_manifest(manifest);
      CorpusManifest written;
      for (const auto& r : m.records) {
        const fs::path rel = fs::path("features") /
                             (r.speaker + "_" + r.utterance + "_" + std::to_string(r.repetition) + ".json");
        save_features(load_input(r.path, features), fs::path(out_dir) / rel);
        ManifestRecord w = r;
        w.path = fs::absolute(fs::path(out_dir) / rel);
        written.records.push_back(std::move(w));
      }
      save_manifest(written, fs::path(out_dir) / "manifest.csv");
      err << "wrote " << written.records.size() << " feature files to " << out_dir << "\n";
    } else if (*cmd_train) {
      check_train(enroll_config);
      enroll_config.features = features;
      const auto corpus = load_utterances(load_manifest(manifest), features, {Role::train});
      if (corpus.empty()) throw UsageError("manifest has no train records");
      const SpeakerDb db = enroll(corpus, order == 1 ? ModelKind::hmm1 : ModelKind::hmm2, enroll_config);
      save_db(db, db_dir);
      err << "enrolled " << db.size() << " speakers into " << db_dir << "\n";
    } else if (*cmd_identify) {
      const SpeakerDb db = load_db(db_dir);
      const auto id = identify(db, load_input(input, db.fingerprint.features), word);
      out << "rank,speaker,log_likelihood,per_frame\n";
      int rank = 1;
      char line[64];
      for (const auto& s : id.ranking) {
        std::snprintf(line, sizeof line, ",%.17g,%.17g\n", s.log_likelihood, s.per_frame);
        out << rank++ << "," << s.speaker << line;
      }
    } else if (*cmd_eval) {
      const CorpusManifest m = load_manifest(manifest);
      if (paired) {
        check_train(enroll_config);
        enroll_config.features = features;
        const auto all = load_utterances(m, features);
        const auto test = of_role(all, Role::test);
        if (test.empty()) throw UsageError("manifest has no test records");
        std::vector<EvalReport> reports;
        for (ModelKind kind : {ModelKind::hmm1, ModelKind::hmm2}) {
          const SpeakerDb db = enroll(all, kind, enroll_config);
          reports.push_back(evaluate(db, test, enroll_config.train.threads));
        }
        emit_report(reports, report, out);
      } else {
        if (db_dir.empty()) throw UsageError("eval needs --db or --paired");
        const SpeakerDb db = load_db(db_dir);
        const auto test = load_utterances(m, db.fingerprint.features, {Role::test});
        if (test.empty()) throw UsageError("manifest has no test records");
        emit_report({evaluate(db, test, enroll_config.train.threads)}, report, out);
      }
    } else if (*cmd_synth) {
      const fs::path path = write_corpus(synthesize(synth), out_dir);
      out << path.string() << "\n";
    } else if (*cmd_bench) {
      std::tie(bench.min_states, bench.max_states) = parse_range(states_range);
      const auto rows = run_bench(bench);
      const std::string csv = bench_csv(rows);
      if (bench_out.empty()) {
        out << csv;
      } else {
        write_text(bench_out, csv);
      }
      if (bench.max_states > bench.min_states) {
        char line[96];
        std::snprintf(line, sizeof line, "log-log slope: order 1 %.3f, order 2 %.3f\n", loglog_slope(rows, 1),
                      loglog_slope(rows, 2));
        err << line;
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace hmm2sid
