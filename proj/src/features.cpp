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

#include "hmm2sid/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "hmm2sid/errors.hpp"

namespace hmm2sid {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                              char((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const std::array<char, 2> b{char(v & 0xff), char((v >> 8) & 0xff)};
  out.write(b.data(), 2);
}

}  // namespace

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw UsageError("sample rate must be positive");
  if (frame_length <= 0) throw UsageError("frame length must be positive");
  if (frame_shift <= 0 || frame_shift > frame_length) {
    throw UsageError("frame shift must satisfy 0 < shift <= frame length");
  }
  if (lpc_order < 1) throw UsageError("LPC order must be >= 1");
  if (lpc_order >= frame_length) throw UsageError("LPC order must be smaller than the frame length");
  if (cepstral_order < 1) throw UsageError("cepstral order must be >= 1");
  if (!(pre_emphasis >= 0 && pre_emphasis < 1)) throw UsageError("pre-emphasis must lie in [0, 1)");
}

Eigen::VectorXd load_wav(const std::filesystem::path& path, int expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "'" + path.string() + "': ";
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE") {
    throw IngestionError(where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4));
    const std::uint32_t size = read_u32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > bytes.size()) throw IngestionError(where + "truncated fmt chunk");
      format = read_u16(&bytes[body]);
      channels = read_u16(&bytes[body + 2]);
      rate = read_u32(&bytes[body + 4]);
      bits = read_u16(&bytes[body + 14]);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IngestionError(where + "data chunk before fmt chunk");
      if (format != 1) throw IngestionError(where + "unsupported encoding " + std::to_string(format) + " (need PCM)");
      if (channels != 1) {
        throw IngestionError(where + "expected mono audio, found " + std::to_string(channels) + " channels");
      }
      if (bits != 16) throw IngestionError(where + "expected 16-bit samples, found " + std::to_string(bits));
      if (rate != static_cast<std::uint32_t>(expected_rate)) {
        throw IngestionError(where + "sample rate " + std::to_string(rate) + " Hz, expected " +
                             std::to_string(expected_rate) + " Hz");
      }
      if (body + size > bytes.size()) throw IngestionError(where + "truncated data chunk");
      const std::size_t n = size / 2;
      Eigen::VectorXd samples(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(&bytes[body + 2 * i]));
        samples(static_cast<Eigen::Index>(i)) = double(v) / 32768.0;
      }
      return samples;
    }
    pos = body + size + (size & 1);
  }
  throw IngestionError(where + "no data chunk");
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double scaled = std::round(samples(i) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
  }
}

Eigen::VectorXd autocorrelate(const Eigen::Ref<const Eigen::VectorXd>& frame, int order) {
  if (order < 0 || frame.size() <= order) throw UsageError("autocorrelate: frame must be longer than the order");
  Eigen::VectorXd r(order + 1);
  const Eigen::Index n = frame.size();
  for (int k = 0; k <= order; ++k) r(k) = frame.head(n - k).dot(frame.tail(n - k));
  return r;
}

LpcResult levinson_durbin(const Eigen::VectorXd& r) {
  if (r.size() < 2) throw UsageError("levinson_durbin: need r_0..r_p with p >= 1");
  if (!(r(0) > 0)) throw SilentFrameError("levinson_durbin: r_0 <= 0 (silent frame)");
  const Eigen::Index p = r.size() - 1;
  LpcResult out{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), r(0)};
  Eigen::VectorXd& a = out.coefficients;
  Eigen::VectorXd prev(p);
  for (Eigen::Index i = 1; i <= p; ++i) {
    double acc = r(i);
    for (Eigen::Index j = 1; j < i; ++j) acc -= a(j - 1) * r(i - j);
    const double k = acc / out.error;
    prev.head(i - 1) = a.head(i - 1);
    a(i - 1) = k;
    for (Eigen::Index j = 1; j < i; ++j) a(j - 1) = prev(j - 1) - k * prev(i - j - 1);
    out.reflection(i - 1) = k;
    out.error *= 1.0 - k * k;
    if (!(out.error > 0)) {
      out.error = 0;
      break;
    }
  }
  return out;
}

Eigen::VectorXd lpc_to_cepstrum(const Eigen::VectorXd& a, int n_ceps) {
  if (n_ceps < 1) throw UsageError("lpc_to_cepstrum: need at least one coefficient");
  const Eigen::Index p = a.size();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_ceps);
  for (Eigen::Index n = 1; n <= n_ceps; ++n) {
    double v = n <= p ? a(n - 1) : 0.0;
    for (Eigen::Index k = std::max<Eigen::Index>(1, n - p); k < n; ++k) {
      v += (double(k) / double(n)) * c(k - 1) * a(n - k - 1);
    }
    c(n - 1) = v;
  }
  return c;
}

Eigen::Index frame_count(Eigen::Index samples, const FeatureConfig& config) {
  if (samples < config.frame_length) {
    throw UsageError("signal of " + std::to_string(samples) + " samples is shorter than one frame (" +
                     std::to_string(config.frame_length) + ")");
  }
  return (samples - config.frame_length) / config.frame_shift + 1;
}

Eigen::MatrixXd lpc_analysis(const FeatureConfig& config, const Eigen::VectorXd& samples) {
  config.validate();
  const Eigen::Index frames = frame_count(samples.size(), config);
  const Eigen::Index len = config.frame_length;

  Eigen::VectorXd emphasized = samples;
  if (config.pre_emphasis > 0) {
    emphasized.tail(samples.size() - 1) -= config.pre_emphasis * samples.head(samples.size() - 1);
  }
  Eigen::VectorXd window(len);
  for (Eigen::Index n = 0; n < len; ++n) {
    window(n) = len == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(n) / double(len - 1));
  }

  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(config.lpc_order, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::VectorXd frame = emphasized.segment(t * config.frame_shift, len).cwiseProduct(window);
    const Eigen::VectorXd r = autocorrelate(frame, config.lpc_order);
    if (r(0) <= kSilenceEnergy) continue;
    coeffs.col(t) = levinson_durbin(r).coefficients;
  }
  return coeffs;
}

ObservationSequenced extract(const FeatureConfig& config, const Eigen::VectorXd& samples,
                             std::string source_id) {
  const Eigen::MatrixXd lpc = lpc_analysis(config, samples);
  Eigen::MatrixXd ceps(config.cepstral_order, lpc.cols());
  for (Eigen::Index t = 0; t < lpc.cols(); ++t) ceps.col(t) = lpc_to_cepstrum(lpc.col(t), config.cepstral_order);
  return ObservationSequenced(std::move(ceps), std::move(source_id));
}

}  // namespace hmm2sid
