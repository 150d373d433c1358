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

// Noise schedules, forward noising and a DDIM sampler written around a
// network that predicts the clean sample, with classifier-free guidance.

#pragma once

#include "diffspk/common.hpp"

#include <functional>
#include <string_view>
#include <vector>

namespace diffspk {

enum class ScheduleKind { Linear, Cosine };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(std::string_view name);

struct DiffusionSchedule {
  int steps = 0;                   // N
  std::vector<double> betas;       // betas[n - 1] for n in 1..N
  std::vector<double> alpha_bars;  // alpha_bars[n] for n in 0..N, alpha_bars[0] == 1

  void validate() const;
};

// Linear betas span 1e-4 .. 2e-2 at N = 1000 and are rescaled by 1000 / N
// (capped at 0.999) so short chains still end near pure noise.
DiffusionSchedule make_schedule(int steps, ScheduleKind kind);

Matrix forward_noise(const Matrix& clean, int step, const Matrix& noise, const DiffusionSchedule& schedule);

// One DDIM transition from step to prev_step given the predicted clean sample.
// eta = 0 is deterministic and never touches rng.
Matrix ddim_step(const Matrix& noisy, const Matrix& predicted_clean, int step, int prev_step,
                 const DiffusionSchedule& schedule, double eta, Rng& rng);

Matrix guided_x0(const Matrix& conditional, const Matrix& unconditional, double guidance_scale);

struct SamplerConfig {
  int step_count = 10;  // S
  double eta = 0.0;
  double guidance_scale = 0.0;

  void validate(const DiffusionSchedule& schedule) const;
};

// Strictly decreasing N .. 0 with step_count transitions, uniformly spaced.
std::vector<int> substep_schedule(int max_step, int step_count);

// Predicts the clean sample at a step; conditional == false means nulled audio.
using DenoiseFn = std::function<Matrix(const Matrix& noisy, int step, bool conditional)>;

struct SampleResult {
  Matrix motion;
  int denoiser_passes = 0;
};

SampleResult sample(const DenoiseFn& denoiser, Eigen::Index frames, Eigen::Index motion_dim,
                    const SamplerConfig& config, const DiffusionSchedule& schedule, Rng& rng);

}  // namespace diffspk
