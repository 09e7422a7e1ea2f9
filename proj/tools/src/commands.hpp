// Copyright 2026 The LPL Authors. All Rights Reserved.
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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lpl/error.hpp"
#include "run_config.hpp"

namespace lpl::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitMissingInput = 3,
  kExitNumeric = 4,
  kExitShape = 5,
};

int exit_code_for(ErrorKind kind);

/// Flag values of one command invocation after defaults are applied. Stored
/// in the manifest so a run can be replayed.
struct Invocation {
  std::string command;
  RunConfig config;
  std::map<std::string, std::string> args;
  std::vector<std::string> argv;
};

/// Resolves a user-supplied output path, honoring LPL_OUTPUT_ROOT for
/// relative paths.
std::filesystem::path output_path(const std::string& path);

/// Each command writes its artifacts plus manifest.json into `out` and
/// returns an exit code. Library errors propagate as lpl::Error.
int cmd_synth(const Invocation& inv, const std::filesystem::path& out);
int cmd_train(const Invocation& inv, const std::filesystem::path& out);
int cmd_eval(const Invocation& inv, const std::filesystem::path& out);
int cmd_ablate(const Invocation& inv, const std::filesystem::path& out);
int cmd_sweep(const Invocation& inv, const std::filesystem::path& out);

int run(const Invocation& inv, const std::filesystem::path& out);

/// Re-executes the invocation recorded in a manifest into `out`.
int cmd_replay(const std::filesystem::path& manifest, const std::filesystem::path& out);

/// Entry point shared by the executable and tests. Never throws.
int main_entry(int argc, char** argv);

}  // namespace lpl::cli
