/*
 * Copyright 2026 The dagcausal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAGCAUSAL_TOOLS_CLI_H_
#define DAGCAUSAL_TOOLS_CLI_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dagcausal::cli {

struct CommandContext {
  nlohmann::json config = nlohmann::json::object();
  // Relative paths inside the config resolve against this directory.
  std::filesystem::path base_dir = ".";
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::size_t jobs = 1;
};

// Applies a dotted `key=value` override. The value is parsed as JSON when
// possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

void cmd_simulate(const CommandContext& ctx);
void cmd_train(const CommandContext& ctx);
void cmd_estimate(const CommandContext& ctx);
void cmd_tune(const CommandContext& ctx);
void cmd_evaluate(const CommandContext& ctx);

// Parses argv, runs one subcommand and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace dagcausal::cli

#endif  // DAGCAUSAL_TOOLS_CLI_H_
