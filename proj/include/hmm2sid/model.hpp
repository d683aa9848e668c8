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

// A trained model of either order behind one type.

#ifndef HMM2SID_MODEL_HPP_
#define HMM2SID_MODEL_HPP_

#include <string>
#include <string_view>
#include <variant>

#include "hmm2sid/errors.hpp"
#include "hmm2sid/hmm1.hpp"
#include "hmm2sid/hmm2.hpp"

namespace hmm2sid {

enum class ModelKind { hmm1, hmm2 };

inline std::string to_string(ModelKind k) { return k == ModelKind::hmm1 ? "hmm1" : "hmm2"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "hmm1" || s == "1") return ModelKind::hmm1;
  if (s == "hmm2" || s == "2") return ModelKind::hmm2;
  throw UsageError("unknown model kind '" + std::string(s) + "' (expected hmm1 or hmm2)");
}

using AnyModel = std::variant<Hmm1Modeld, Hmm2Modeld>;

inline ModelKind kind_of(const AnyModel& m) {
  return std::holds_alternative<Hmm1Modeld>(m) ? ModelKind::hmm1 : ModelKind::hmm2;
}

inline Index states_of(const AnyModel& m) {
  return std::visit([](const auto& x) { return x.states(); }, m);
}
inline Index mixtures_of(const AnyModel& m) {
  return std::visit([](const auto& x) { return x.mixtures(); }, m);
}
inline Index dim_of(const AnyModel& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

// log P(O | model) through forward1 or forward2.
inline double log_likelihood(const AnyModel& m, const ObservationSequenced& o) {
  if (const auto* m1 = std::get_if<Hmm1Modeld>(&m)) return forward1(*m1, o).log_likelihood;
  return forward2(std::get<Hmm2Modeld>(m), o).log_likelihood;
}

}  // namespace hmm2sid

#endif  // HMM2SID_MODEL_HPP_
