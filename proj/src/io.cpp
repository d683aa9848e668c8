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

#include "hmm2sid/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace hmm2sid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "hmm2sid-model";
constexpr const char* kFeatureFormat = "hmm2sid-features";
constexpr const char* kDbFormat = "hmm2sid-db";
constexpr const char* kReportFormat = "hmm2sid-report";

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(vec(m.row(r).transpose()));
  return out;
}

json columns(const Eigen::MatrixXd& m) { return rows(m.transpose()); }

json mask_vec(const MaskVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i) ? 1 : 0);
  return out;
}

json mask_rows(const MaskMatrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(mask_vec(m.row(r).transpose()));
  return out;
}

// JSON has no infinities; they are spelled as strings.
json real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double get_real(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw FormatError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

Eigen::VectorXd get_vec(const json& j, Index n, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw FormatError(std::string(what) + ": expected an array of " + std::to_string(n));
  }
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::MatrixXd get_rows(const json& j, Index r, Index c, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != r) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(r) + " rows");
  }
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) m.row(i) = get_vec(j[static_cast<std::size_t>(i)], c, what);
  return m;
}

MaskVector get_mask_vec(const json& j, Index n, const char* what) {
  const Eigen::VectorXd v = get_vec(j, n, what);
  if (((v.array() != 0) && (v.array() != 1)).any()) {
    throw FormatError(std::string(what) + ": mask entries must be 0 or 1");
  }
  return v.array() != 0;
}

MaskMatrix get_mask_rows(const json& j, Index n, const char* what) {
  const Eigen::MatrixXd m = get_rows(j, n, n, what);
  if (((m.array() != 0) && (m.array() != 1)).any()) {
    throw FormatError(std::string(what) + ": mask entries must be 0 or 1");
  }
  return m.array() != 0;
}

void check_header(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw FormatError(std::string("not a ") + format + " file");
  }
  const int version = j.at("version").get<int>();
  if (version != kFormatVersion) {
    throw FormatError(std::string(format) + " version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
}

json header(const char* format) { return json{{"format", format}, {"version", kFormatVersion}}; }

json mixture_json(const GaussianMixtured& g) {
  return json{{"weights", vec(g.weights())},
              {"means", columns(g.means())},
              {"variances", columns(g.variances())}};
}

GaussianMixtured mixture_from(const json& j, Index m, Index d) {
  return GaussianMixtured(get_vec(j.at("weights"), m, "weights"),
                          get_rows(j.at("means"), m, d, "means").transpose(),
                          get_rows(j.at("variances"), m, d, "variances").transpose());
}

json model_json(const AnyModel& model) {
  json j = header(kModelFormat);
  std::visit(
      [&j](const auto& m) {
        const Index n = m.states();
        j["states"] = n;
        j["mixtures"] = m.mixtures();
        j["dim"] = m.dim();
        j["topology"] = json{{"initial", mask_vec(m.topology().initial)},
                             {"arcs", mask_rows(m.topology().arcs)},
                             {"final", mask_vec(m.topology().final)}};
        j["initial"] = vec(m.initial());
        json emissions = json::array();
        for (const auto& g : m.emissions()) emissions.push_back(mixture_json(g));
        j["emissions"] = std::move(emissions);
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Hmm1Modeld>) {
          j["kind"] = "hmm1";
          j["transitions"] = rows(m.transitions());
        } else {
          j["kind"] = "hmm2";
          j["first_order"] = rows(m.first_order());
          json a3 = json::array();
          for (Index i = 0; i < n; ++i) {
            a3.push_back(rows(m.second_order().middleRows(i * n, n)));
          }
          j["second_order"] = std::move(a3);
        }
      },
      model);
  return j;
}

AnyModel model_from_json(const json& j) {
  check_header(j, kModelFormat);
  const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
  const Index n = j.at("states").get<Index>();
  const Index m = j.at("mixtures").get<Index>();
  const Index d = j.at("dim").get<Index>();
  if (n < 1 || m < 1 || d < 1) throw FormatError("states, mixtures and dim must be positive");
  const Topology topo{get_mask_vec(j.at("topology").at("initial"), n, "topology initial"),
                      get_mask_rows(j.at("topology").at("arcs"), n, "topology arcs"),
                      get_mask_vec(j.at("topology").at("final"), n, "topology final")};
  const Eigen::VectorXd initial = get_vec(j.at("initial"), n, "initial");
  const json& em = j.at("emissions");
  if (!em.is_array() || static_cast<Index>(em.size()) != n) {
    throw FormatError("emissions: expected one mixture per state");
  }
  std::vector<GaussianMixtured> emissions;
  for (const auto& e : em) emissions.push_back(mixture_from(e, m, d));
  if (kind == ModelKind::hmm1) {
    return Hmm1Modeld(initial, get_rows(j.at("transitions"), n, n, "transitions"),
                      std::move(emissions), topo);
  }
  const json& a3 = j.at("second_order");
  if (!a3.is_array() || static_cast<Index>(a3.size()) != n) {
    throw FormatError("second_order: expected an N x N x N array");
  }
  Eigen::MatrixXd second(n * n, n);
  for (Index i = 0; i < n; ++i) {
    second.middleRows(i * n, n) = get_rows(a3[static_cast<std::size_t>(i)], n, n, "second_order");
  }
  return Hmm2Modeld(initial, get_rows(j.at("first_order"), n, n, "first_order"), std::move(second),
                    std::move(emissions), topo);
}

// Runs a parser, turning JSON and shape problems into FormatError and
// prefixing every message with where the data came from.
template <typename Fn>
auto parse_guarded(const std::string& origin, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(origin + ": " + e.what());
  } catch (const UsageError& e) {
    throw FormatError(origin + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

json trial_json(const Trial& t) {
  return json{{"truth", t.truth},
              {"predicted", t.predicted},
              {"word", t.word},
              {"repetition", t.repetition},
              {"margin", real(t.margin)},
              {"true_log_likelihood", real(t.true_log_likelihood)},
              {"frames", t.frames}};
}

Trial trial_from(const json& j) {
  Trial t;
  t.truth = j.at("truth").get<std::string>();
  t.predicted = j.at("predicted").get<std::string>();
  t.word = j.at("word").get<std::string>();
  t.repetition = j.at("repetition").get<int>();
  t.margin = get_real(j.at("margin"));
  t.true_log_likelihood = get_real(j.at("true_log_likelihood"));
  t.frames = j.at("frames").get<long>();
  return t;
}

json report_json(const EvalReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) trials.push_back(trial_json(t));
  json confusion = json::object();
  for (const auto& [truth, row] : r.confusion) {
    for (const auto& [pred, count] : row) confusion[truth][pred] = count;
  }
  return json{{"kind", to_string(r.kind)},
              {"accuracy", r.accuracy},
              {"correct", r.correct},
              {"total", r.trials.size()},
              {"mean_per_frame_log_likelihood", real(r.mean_per_frame_log_likelihood)},
              {"confusion", std::move(confusion)},
              {"trials", std::move(trials)}};
}

EvalReport report_from(const json& j) {
  std::vector<Trial> trials;
  for (const auto& t : j.at("trials")) trials.push_back(trial_from(t));
  EvalReport r = summarize(parse_model_kind(j.at("kind").get<std::string>()), std::move(trials));
  // The stored summary must agree with the trials it was computed from.
  if (j.at("total").get<std::size_t>() != r.trials.size() || j.at("correct").get<long>() != r.correct ||
      j.at("accuracy").get<double>() != r.accuracy) {
    throw FormatError("report totals do not match its trials");
  }
  std::map<std::string, std::map<std::string, long>> confusion;
  for (const auto& [truth, row] : j.at("confusion").items()) {
    for (const auto& [pred, count] : row.items()) confusion[truth][pred] = count.get<long>();
  }
  if (confusion != r.confusion) throw FormatError("report confusion counts do not match its trials");
  r.mean_per_frame_log_likelihood = get_real(j.at("mean_per_frame_log_likelihood"));
  return r;
}

json fingerprint_json(const Fingerprint& f) {
  return json{{"sample_rate", f.features.sample_rate},
              {"frame_length", f.features.frame_length},
              {"frame_shift", f.features.frame_shift},
              {"pre_emphasis", f.features.pre_emphasis},
              {"lpc_order", f.features.lpc_order},
              {"cepstral_order", f.features.cepstral_order},
              {"states", f.states},
              {"mixtures", f.mixtures},
              {"max_jump", f.max_jump},
              {"dim", f.dim},
              {"seed", f.seed}};
}

Fingerprint fingerprint_from(const json& j) {
  Fingerprint f;
  f.features.sample_rate = j.at("sample_rate").get<int>();
  f.features.frame_length = j.at("frame_length").get<int>();
  f.features.frame_shift = j.at("frame_shift").get<int>();
  f.features.pre_emphasis = j.at("pre_emphasis").get<double>();
  f.features.lpc_order = j.at("lpc_order").get<int>();
  f.features.cepstral_order = j.at("cepstral_order").get<int>();
  f.states = j.at("states").get<int>();
  f.mixtures = j.at("mixtures").get<int>();
  f.max_jump = j.at("max_jump").get<int>();
  f.dim = j.at("dim").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
}

std::string model_to_text(const AnyModel& m) { return model_json(m).dump(1) + "\n"; }

AnyModel model_from_text(std::string_view text, const std::string& origin) {
  return parse_guarded(origin, [&] { return model_from_json(json::parse(text)); });
}

void save_model(const AnyModel& m, const fs::path& path) { write_text(path, model_to_text(m)); }

AnyModel load_model(const fs::path& path) { return model_from_text(read_text(path), path.string()); }

void save_features(const ObservationSequenced& o, const fs::path& path) {
  json j = header(kFeatureFormat);
  j["source"] = o.source_id();
  j["dim"] = o.dim();
  j["frames"] = columns(o.frames());
  write_text(path, j.dump() + "\n");
}

ObservationSequenced load_features(const fs::path& path) {
  const std::string text = read_text(path);
  return parse_guarded(path.string(), [&] {
    const json j = json::parse(text);
    check_header(j, kFeatureFormat);
    const Index d = j.at("dim").get<Index>();
    const json& frames = j.at("frames");
    if (!frames.is_array() || frames.empty()) throw FormatError("frames: expected T >= 1 frames");
    return ObservationSequenced(get_rows(frames, static_cast<Index>(frames.size()), d, "frames").transpose(),
                                j.at("source").get<std::string>());
  });
}

CorpusManifest load_manifest(const fs::path& path, bool check_paths) {
  const std::string text = read_text(path);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::istringstream in(text);
  std::string line;
  const std::string where = path.string();
  if (!std::getline(in, line)) throw FormatError(where + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "speaker,utterance,repetition,role,path") {
    throw FormatError(where + ": header must be 'speaker,utterance,repetition,role,path'");
  }
  CorpusManifest m;
  std::set<std::tuple<std::string, std::string, int>> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string at = where + ":" + std::to_string(line_no) + ": ";
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw FormatError(at + "expected 5 fields");
    ManifestRecord r;
    r.speaker = f[0];
    r.utterance = f[1];
    if (r.speaker.empty() || r.utterance.empty() || f[4].empty()) {
      throw FormatError(at + "speaker, utterance and path must be non-empty");
    }
    try {
      std::size_t used = 0;
      r.repetition = std::stoi(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument(f[2]);
      r.role = parse_role(f[3]);
    } catch (const std::exception& e) {
      throw FormatError(at + "bad repetition or role");
    }
    const fs::path p(f[4]);
    r.path = fs::absolute(p.is_absolute() ? p : base / p).lexically_normal();
    if (!seen.emplace(r.speaker, r.utterance, r.repetition).second) {
      throw FormatError(at + "duplicate record (" + r.speaker + ", " + r.utterance + ", " +
                        std::to_string(r.repetition) + ")");
    }
    if (check_paths && !fs::exists(r.path)) {
      throw FormatError(at + "file '" + r.path.string() + "' does not exist");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const CorpusManifest& m, const fs::path& path) {
  const fs::path base = fs::absolute(path.has_parent_path() ? path.parent_path() : fs::path("."));
  std::string out = "speaker,utterance,repetition,role,path\n";
  for (const auto& r : m.records) {
    for (const auto* field : {&r.speaker, &r.utterance}) {
      if (field->find_first_of(",\n") != std::string::npos) {
        throw UsageError("manifest fields may not contain commas or newlines: '" + *field + "'");
      }
    }
    fs::path p = r.path;
    if (p.is_absolute()) {
      const fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out += r.speaker + "," + r.utterance + "," + std::to_string(r.repetition) + "," +
           to_string(r.role) + "," + p.generic_string() + "\n";
  }
  write_text(path, out);
}

std::vector<Utterance> load_utterances(const CorpusManifest& m, const FeatureConfig& features,
                                       std::initializer_list<Role> roles) {
  std::vector<Utterance> out;
  for (const auto& r : m.records) {
    if (std::find(roles.begin(), roles.end(), r.role) == roles.end()) continue;
    Utterance u{r.speaker, r.utterance, r.repetition, r.role, {}};
    if (r.path.extension() == ".wav" || r.path.extension() == ".WAV") {
      u.obs = extract(features, load_wav(r.path, features.sample_rate), r.path.string());
    } else {
      u.obs = load_features(r.path);
    }
    out.push_back(std::move(u));
  }
  return out;
}

void save_db(const SpeakerDb& db, const fs::path& dir) {
  db.validate();
  fs::create_directories(dir / "models");
  json j = header(kDbFormat);
  j["kind"] = to_string(db.kind);
  j["per_word"] = db.per_word;
  j["fingerprint"] = fingerprint_json(db.fingerprint);
  json speakers = json::array();
  int index = 0;
  for (const auto& [speaker, models] : db.entries) {
    json entry{{"id", speaker}, {"models", json::array()}};
    for (const auto& [word, model] : models) {
      char name[32];
      std::snprintf(name, sizeof name, "models/%05d.json", index++);
      save_model(model, dir / name);
      entry["models"].push_back(json{{"word", word}, {"file", name}});
    }
    speakers.push_back(std::move(entry));
  }
  j["speakers"] = std::move(speakers);
  write_text(dir / "db.json", j.dump(1) + "\n");
}

SpeakerDb load_db(const fs::path& dir) {
  const fs::path index = dir / "db.json";
  const std::string text = read_text(index);
  SpeakerDb db = parse_guarded(index.string(), [&] {
    const json j = json::parse(text);
    check_header(j, kDbFormat);
    SpeakerDb out;
    out.kind = parse_model_kind(j.at("kind").get<std::string>());
    out.per_word = j.at("per_word").get<bool>();
    out.fingerprint = fingerprint_from(j.at("fingerprint"));
    for (const auto& s : j.at("speakers")) {
      auto& models = out.entries[s.at("id").get<std::string>()];
      for (const auto& m : s.at("models")) {
        models.emplace(m.at("word").get<std::string>(), load_model(dir / m.at("file").get<std::string>()));
      }
    }
    return out;
  });
  db.validate();
  return db;
}

std::string reports_to_text(const std::vector<EvalReport>& reports) {
  json j = header(kReportFormat);
  json list = json::array();
  for (const auto& r : reports) list.push_back(report_json(r));
  j["reports"] = std::move(list);
  return j.dump(1) + "\n";
}

std::vector<EvalReport> reports_from_text(std::string_view text, const std::string& origin) {
  return parse_guarded(origin, [&] {
    const json j = json::parse(text);
    check_header(j, kReportFormat);
    std::vector<EvalReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from(r));
    return out;
  });
}

void save_reports(const std::vector<EvalReport>& reports, const fs::path& path) {
  write_text(path, reports_to_text(reports));
}

std::vector<EvalReport> load_reports(const fs::path& path) {
  return reports_from_text(read_text(path), path.string());
}

}  // namespace hmm2sid
