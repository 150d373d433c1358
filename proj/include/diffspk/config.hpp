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

// Run configuration: flat `section.key = value` text, one entry per line,
// `#` starts a comment. Unknown or repeated keys are errors.

#pragma once

#include "diffspk/attention.hpp"
#include "diffspk/data.hpp"
#include "diffspk/denoiser.hpp"
#include "diffspk/diffusion.hpp"
#include "diffspk/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace diffspk {

struct PathsConfig {
  std::filesystem::path dataset_dir = "data";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";
};

struct EvalConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string split = "test";
};

struct AblateConfig {
  std::vector<AttentionVariant> variants{AttentionVariant::Full, AttentionVariant::NoCrossBias};
  std::vector<double> guidance{0.0, 1.0};
  bool train_missing = true;
};

struct BenchConfig {
  std::vector<double> durations{10.0, 90.0};
  int repeats = 3;
  int warmups = 1;
  std::uint64_t seed = 1;
  int throughput_threads = 1;
};

struct RunConfig {
  SyntheticDatasetSpec data;
  double val_fraction = 0.125;
  double test_fraction = 0.125;
  DenoiserConfig model;  // vertex_count, feature_dim, subject_count and fps follow `data`
  std::uint64_t init_seed = 1;
  ScheduleKind schedule = ScheduleKind::Linear;
  SamplerConfig sampler;
  TrainConfig train;
  PathsConfig paths;
  EvalConfig eval;
  AblateConfig ablate;
  BenchConfig bench;

  // Applies one `key = value` entry; throws ErrorKind::Config on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  // Copies data dimensions into the model and checks every section.
  void finalize();
  // Sorted `key = value` lines for every key, with effective values.
  std::string canonical_text() const;
  std::uint64_t hash() const;
};

struct ConfigKeyInfo {
  std::string key;
  std::string description;
};

// Every accepted key with a one-line description.
std::vector<ConfigKeyInfo> config_reference();

RunConfig parse_config(std::string_view text);
// Relative paths in the file resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace diffspk
