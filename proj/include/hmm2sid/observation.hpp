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

#ifndef HMM2SID_OBSERVATION_HPP_
#define HMM2SID_OBSERVATION_HPP_

#include <string>
#include <utility>

#include <Eigen/Core>

#include "hmm2sid/errors.hpp"
#include "hmm2sid/numerics.hpp"

namespace hmm2sid {

// T feature vectors of dimension d, stored one frame per column.
template <typename Scalar>
class ObservationSequence {
 public:
  using Matrix = MatrixX<Scalar>;

  ObservationSequence() = default;
  explicit ObservationSequence(Matrix frames, std::string source_id = {})
      : frames_(std::move(frames)), source_id_(std::move(source_id)) {
    if (frames_.cols() < 1) throw UsageError("observation sequence needs T >= 1");
    if (frames_.rows() < 1) throw UsageError("observation sequence needs dimension >= 1");
    if (!frames_.allFinite()) {
      throw UsageError("observation sequence '" + source_id_ + "' has non-finite values");
    }
  }

  Index length() const { return frames_.cols(); }
  Index dim() const { return frames_.rows(); }
  auto frame(Index t) const { return frames_.col(t); }
  const Matrix& frames() const { return frames_; }
  const std::string& source_id() const { return source_id_; }

 private:
  Matrix frames_;
  std::string source_id_;
};

using ObservationSequenced = ObservationSequence<double>;

}  // namespace hmm2sid

#endif  // HMM2SID_OBSERVATION_HPP_
