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

// Motion metrics and the ablation harness.
//
// LVE: mean over frames of the largest Euclidean error among lip vertices.
// FDD: for each upper-face vertex take the standard deviation over time of
//      its displacement norm in prediction and ground truth; FDD is the mean
//      absolute difference of the two.
// Motion std map: per vertex, sqrt of the summed per-axis temporal variance
//      of its offsets, pooled over all frames of all sequences.

#pragma once

#include "diffspk/checkpoint.hpp"
#include "diffspk/data.hpp"
#include "diffspk/diffusion.hpp"
#include "diffspk/training.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diffspk {

double lip_vertex_error(const Matrix& pred, const Matrix& gt, std::span<const int> lip_mask);
double facial_dynamics_deviation(const Matrix& pred, const Matrix& gt, std::span<const int> upper_mask);
std::vector<double> motion_std_map(std::span<const Matrix> sequences);

void write_std_map_csv(const std::filesystem::path& path, const std::vector<double>& std_map,
                       const MeshTemplate* mesh = nullptr);

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> ci_half_width;  // 95% Student-t; absent for fewer than 2 values
};

MetricSummary summarize(std::span<const double> values);

struct MetricReport {
  std::string variant;
  double guidance = 0.0;
  std::vector<std::uint64_t> seeds;
  MetricSummary lve;
  MetricSummary fdd;
  MetricSummary upper_std;  // mean motion std over upper-face vertices
  std::vector<double> per_vertex_std;
};

// Predictions for one seed, aligned with items.
MetricReport score_predictions(std::span<const DatasetItem> items, std::span<const MotionSequence> predictions,
                               const MeshTemplate& mesh);

// Samples every item once per seed and reports mean and CI over seeds.
MetricReport evaluate_checkpoint(const Checkpoint& ckpt, std::span<const DatasetItem> items,
                                 const MeshTemplate& mesh, const SamplerConfig& sampler,
                                 std::span<const std::uint64_t> seeds);

struct AblationOptions {
  DenoiserConfig model;  // variant is overridden per row
  ScheduleKind schedule = ScheduleKind::Linear;
  TrainConfig train;
  SamplerConfig sampler;  // guidance is overridden per row
  std::filesystem::path checkpoint_dir;
  bool train_missing = true;
  std::uint64_t init_seed = 1;
  int threads = 1;
};

std::filesystem::path ablation_checkpoint_path(const std::filesystem::path& dir, AttentionVariant v);

// One report per (variant, guidance) pair, variants outermost.
std::vector<MetricReport> run_ablation(const DatasetSplit& split, const MeshTemplate& mesh,
                                       std::span<const AttentionVariant> variants,
                                       std::span<const double> guidance_values,
                                       std::span<const std::uint64_t> seeds, const AblationOptions& options);

void write_report_csv(const std::filesystem::path& path, std::span<const MetricReport> reports);

}  // namespace diffspk
