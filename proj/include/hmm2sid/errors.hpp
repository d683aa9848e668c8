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

#ifndef HMM2SID_ERRORS_HPP_
#define HMM2SID_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hmm2sid {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad dimensions, empty input, bad flags).
// The CLI maps this to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Every entry of a distribution was zero / -inf.
class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

// A mixture component (or all of them) received zero responsibility mass.
class ComponentStarvedError : public Error {
 public:
  using Error::Error;
};

// No state path has non-zero probability for the observation sequence.
class NoValidPathError : public Error {
 public:
  using Error::Error;
};

class StarvedStateError : public Error {
 public:
  explicit StarvedStateError(int state)
      : Error("state " + std::to_string(state) +
              " received no occupancy from the training corpus"),
        state_(state) {}
  int state() const noexcept { return state_; }

 private:
  int state_;
};

// LPC analysis of a frame with no energy.
class SilentFrameError : public Error {
 public:
  using Error::Error;
};

// Audio input in an unsupported layout.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or wrong-version file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Parameters that break a model invariant (row sums, masks, floors).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class GeneratorError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(std::string speaker, const std::string& what)
      : Error("training failed for speaker '" + speaker + "': " + what),
        speaker_(std::move(speaker)) {}
  const std::string& speaker() const noexcept { return speaker_; }

 private:
  std::string speaker_;
};

}  // namespace hmm2sid

#endif  // HMM2SID_ERRORS_HPP_
