// Copyright 2026 The fsed Authors
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

#pragma once

#include <ostream>

namespace fsed::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

/// Entry point of the `fsed` tool: train, eval, ablate, gradcheck, synth,
/// stats, defaults.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsed::cli
