// Copyright 2026 The tadbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Operator commands. The tadbench binary is a thin wrapper over run_cli so
// the same code paths are exercised in-process by the tests.
//
// Settings are layered: config file, then key=value overrides (dotted paths
// into the config, values parsed as JSON when possible), then flags.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tadbench/domain.hpp"

namespace tadbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFailed = 3;  // nothing produced / missing inputs
inline constexpr int kExitCredential = 4;

struct CliInvocation {
  std::string command;  // generate | evaluate | report | validate-store
  std::optional<std::filesystem::path> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> store;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::optional<std::vector<std::string>> tasks;
  std::optional<int> samples_per_task;
  bool final_only = false;
  bool scripted = false;
};

// Config file plus overrides plus flags. Throws ConfigError.
Json effective_config(const CliInvocation& inv);

// Sets a dotted path ("caps.max_init_loops") in a JSON object.
void apply_override(Json& config, const std::string& key, const std::string& value);

int cmd_generate(const CliInvocation& inv, std::ostream& out, std::ostream& err);
int cmd_evaluate(const CliInvocation& inv, std::ostream& out, std::ostream& err);
int cmd_report(const CliInvocation& inv, std::ostream& out, std::ostream& err);
int cmd_validate_store(const CliInvocation& inv, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; usage errors exit 2.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tadbench
