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

// Audio ingestion and LPC-cepstral feature extraction.

#ifndef HMM2SID_FEATURES_HPP_
#define HMM2SID_FEATURES_HPP_

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "hmm2sid/observation.hpp"

namespace hmm2sid {

struct FeatureConfig {
  int sample_rate = 8000;
  int frame_length = 240;  // 30 ms at 8 kHz
  int frame_shift = 80;    // 10 ms at 8 kHz
  double pre_emphasis = 0.97;
  int lpc_order = 12;
  int cepstral_order = 12;

  // Throws UsageError when a field is out of range.
  void validate() const;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Reads a mono 16-bit PCM RIFF/WAVE file recorded at `expected_rate`.
// Samples are scaled by 1/32768 into [-1, 1). Anything else is rejected with
// IngestionError; there is no resampling or down-mixing.
Eigen::VectorXd load_wav(const std::filesystem::path& path, int expected_rate);

// Writes mono 16-bit PCM, clipping to the representable range.
void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate);

// r_k = sum_n x_n x_{n+k}, k = 0..order.
Eigen::VectorXd autocorrelate(const Eigen::Ref<const Eigen::VectorXd>& frame, int order);

struct LpcResult {
  // Predictor x_n ~ sum_{k=1..p} a_k x_{n-k}; coefficients(k-1) = a_k.
  Eigen::VectorXd coefficients;
  Eigen::VectorXd reflection;
  double error = 0;
};

// Solves the Toeplitz normal equations for a predictor of order r.size() - 1.
// Throws SilentFrameError when r_0 <= 0. If the prediction error reaches
// zero the recursion stops and the remaining coefficients stay zero.
LpcResult levinson_durbin(const Eigen::VectorXd& r);

// Cepstrum of the all-pole model 1 / (1 - sum a_k z^-k):
// c_n = a_n + sum_{k=1}^{n-1} (k / n) c_k a_{n-k}, with a_n = 0 for n > p.
Eigen::VectorXd lpc_to_cepstrum(const Eigen::VectorXd& a, int n_ceps);

// floor((samples - frame_length) / frame_shift) + 1; UsageError when the
// signal is shorter than one frame.
Eigen::Index frame_count(Eigen::Index samples, const FeatureConfig& config);

// Frames with autocorrelation energy at or below this are treated as silence.
inline constexpr double kSilenceEnergy = 1e-12;

// Per-frame LPC coefficients (lpc_order x T) after pre-emphasis and Hamming
// windowing. Silent frames get all-zero coefficients.
Eigen::MatrixXd lpc_analysis(const FeatureConfig& config, const Eigen::VectorXd& samples);

// Full pipeline: pre-emphasis, Hamming window, autocorrelation,
// Levinson-Durbin and the cepstral recursion. Silent frames map to a zero
// cepstral vector.
ObservationSequenced extract(const FeatureConfig& config, const Eigen::VectorXd& samples,
                             std::string source_id = {});

}  // namespace hmm2sid

#endif  // HMM2SID_FEATURES_HPP_
