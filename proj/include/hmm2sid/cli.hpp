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

// Command-line front end.

#ifndef HMM2SID_CLI_HPP_
#define HMM2SID_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace hmm2sid {

// Exit status: 0 on success, 2 on usage errors, 1 on any other failure.
// Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace hmm2sid

#endif  // HMM2SID_CLI_HPP_
