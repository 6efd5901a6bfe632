// Copyright 2026 The dynmatch Authors
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
#include <string>
#include <string_view>
#include <vector>

namespace dynmatch::cli {

/// Exit statuses of parse_and_dispatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "DYNMATCH_OUTPUT_DIR";

/**
 * Parses `argv` (argv[0] is the program name) and runs one subcommand:
 * simulate, ode, stationary, sweep, compare, scaling or ratio.
 *
 * Artifacts and a manifest.json echoing the resolved configuration go to the
 * output directory. Returns kExitOk on success, kExitVerdictFailed when a
 * requested assertion fails, kExitUsage on invalid input (one-line diagnostic on
 * `err`) and kExitRuntime when an engine fails.
 */
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with `args` excluding the program name.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step" (inclusive) or a comma list "a,b,c".
std::vector<double> parse_values(std::string_view text);

}  // namespace dynmatch::cli
