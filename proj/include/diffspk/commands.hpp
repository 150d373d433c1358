// Copyright 2026 The diffspk Authors
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

// Command implementations behind the CLI. Each writes only below the
// configured dataset, checkpoint and report directories.

#pragma once

#include "diffspk/config.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace diffspk {

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;  // relative paths resolve against the command's output dir
  std::optional<std::filesystem::path> audio;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> pred_dir;
  std::optional<std::string> split;
  std::optional<int> style;
  std::optional<int> item;  // dataset item used by `sample` when no audio file is given
  std::optional<double> guidance;
  std::function<void(const std::string&)> log;
};

// Applies command-specific overrides (e.g. --seed) and returns the effective config.
RunConfig effective_config(std::string_view command, RunConfig config, const CommandOptions& options);

std::filesystem::path cmd_gen_data(const RunConfig& config, const CommandOptions& options);
std::filesystem::path cmd_train(const RunConfig& config, const CommandOptions& options);
std::filesystem::path cmd_sample(const RunConfig& config, const CommandOptions& options);
std::filesystem::path cmd_eval(const RunConfig& config, const CommandOptions& options);
std::filesystem::path cmd_ablate(const RunConfig& config, const CommandOptions& options);
std::filesystem::path cmd_bench(const RunConfig& config, const CommandOptions& options);

// Resolves overrides, logs the config hash and dispatches; returns the main output path.
std::filesystem::path run_command(std::string_view command, const RunConfig& config,
                                  const CommandOptions& options);

}  // namespace diffspk
