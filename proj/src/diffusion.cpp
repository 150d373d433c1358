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

#include "diffspk/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace diffspk {

namespace {

constexpr double kBetaStart = 1e-4;
constexpr double kBetaEnd = 2e-2;
constexpr double kMaxBeta = 0.999;
constexpr double kCosineOffset = 0.008;

double cosine_alpha_bar(double t) {
  const double v = std::cos((t + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
  return v * v;
}

}  // namespace

std::string_view to_string(ScheduleKind k) { return k == ScheduleKind::Linear ? "linear" : "cosine"; }

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "cosine") return ScheduleKind::Cosine;
  fail(ErrorKind::Config, "unknown schedule kind '" + std::string(name) + "'");
}

void DiffusionSchedule::validate() const {
  require(steps >= 1 && static_cast<int>(betas.size()) == steps &&
              static_cast<int>(alpha_bars.size()) == steps + 1,
          ErrorKind::InvalidArgument, "schedule arrays do not match N");
  require(alpha_bars[0] == 1.0, ErrorKind::Numeric, "schedule must start at alpha_bar = 1");
  for (int n = 1; n <= steps; ++n)
    require(std::isfinite(alpha_bars[n]) && alpha_bars[n] < alpha_bars[n - 1], ErrorKind::Numeric,
            "alpha_bar not strictly decreasing at step " + std::to_string(n));
  require(alpha_bars[steps] > 0.0 && alpha_bars[steps] < 0.02, ErrorKind::Numeric,
          "alpha_bar_N outside (0, 0.02)");
}

DiffusionSchedule make_schedule(int steps, ScheduleKind kind) {
  require(steps >= 1, ErrorKind::Config, "diffusion.steps must be >= 1");
  DiffusionSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  if (kind == ScheduleKind::Linear) {
    const double scale = 1000.0 / steps;
    for (int n = 1; n <= steps; ++n) {
      const double frac = steps > 1 ? static_cast<double>(n - 1) / (steps - 1) : 1.0;
      s.betas[n - 1] = std::min(kMaxBeta, scale * (kBetaStart + (kBetaEnd - kBetaStart) * frac));
    }
  } else {
    const double f0 = cosine_alpha_bar(0.0);
    for (int n = 1; n <= steps; ++n) {
      const double prev = cosine_alpha_bar(static_cast<double>(n - 1) / steps) / f0;
      const double cur = cosine_alpha_bar(static_cast<double>(n) / steps) / f0;
      s.betas[n - 1] = std::min(kMaxBeta, 1.0 - cur / prev);
    }
  }
  s.alpha_bars.resize(steps + 1);
  s.alpha_bars[0] = 1.0;
  for (int n = 1; n <= steps; ++n) s.alpha_bars[n] = s.alpha_bars[n - 1] * (1.0 - s.betas[n - 1]);
  s.validate();
  return s;
}

Matrix forward_noise(const Matrix& clean, int step, const Matrix& noise, const DiffusionSchedule& schedule) {
  require(step >= 0 && step <= schedule.steps, ErrorKind::InvalidArgument,
          "diffusion step " + std::to_string(step) + " outside [0, N]");
  require(clean.rows() == noise.rows() && clean.cols() == noise.cols(), ErrorKind::Shape,
          "noise shape differs from sample");
  const double ab = schedule.alpha_bars[step];
  return std::sqrt(ab) * clean + std::sqrt(1.0 - ab) * noise;
}

Matrix ddim_step(const Matrix& noisy, const Matrix& predicted_clean, int step, int prev_step,
                 const DiffusionSchedule& schedule, double eta, Rng& rng) {
  require(step > prev_step && prev_step >= 0 && step <= schedule.steps, ErrorKind::InvalidArgument,
          "ddim step needs N >= n > n_prev >= 0");
  require(eta >= 0.0, ErrorKind::InvalidArgument, "eta must be non-negative");
  require(noisy.rows() == predicted_clean.rows() && noisy.cols() == predicted_clean.cols(),
          ErrorKind::Shape, "prediction shape differs from sample");
  const double ab = schedule.alpha_bars[step];
  const double ab_prev = schedule.alpha_bars[prev_step];
  require(ab < 1.0, ErrorKind::Numeric, "alpha_bar is 1 at a positive step");

  const Matrix eps = (noisy - std::sqrt(ab) * predicted_clean) / std::sqrt(1.0 - ab);
  const double sigma =
      eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(std::max(0.0, 1.0 - ab / ab_prev));
  const double direction = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
  Matrix out = std::sqrt(ab_prev) * predicted_clean + direction * eps;
  if (eta > 0.0 && sigma > 0.0) out += sigma * standard_normal(out.rows(), out.cols(), rng);
  return out;
}

Matrix guided_x0(const Matrix& conditional, const Matrix& unconditional, double guidance_scale) {
  require(conditional.rows() == unconditional.rows() && conditional.cols() == unconditional.cols(),
          ErrorKind::Shape, "guidance branches differ in shape");
  if (guidance_scale == 0.0) return conditional;
  return (1.0 + guidance_scale) * conditional - guidance_scale * unconditional;
}

void SamplerConfig::validate(const DiffusionSchedule& schedule) const {
  require(step_count >= 1 && step_count <= schedule.steps, ErrorKind::Config,
          "sampler.steps must lie in [1, diffusion.steps]");
  require(eta >= 0.0, ErrorKind::Config, "sampler.eta must be >= 0");
  require(guidance_scale >= 0.0, ErrorKind::Config, "sampler.guidance must be >= 0");
}

std::vector<int> substep_schedule(int max_step, int step_count) {
  require(step_count >= 1 && step_count <= max_step, ErrorKind::InvalidArgument,
          "substep count must lie in [1, N]");
  std::vector<int> steps(step_count + 1);
  for (int i = 0; i <= step_count; ++i)
    steps[i] = static_cast<int>(std::lround(static_cast<double>(max_step) * (step_count - i) / step_count));
  return steps;
}

SampleResult sample(const DenoiseFn& denoiser, Eigen::Index frames, Eigen::Index motion_dim,
                    const SamplerConfig& config, const DiffusionSchedule& schedule, Rng& rng) {
  require(frames >= 1, ErrorKind::InvalidArgument, "sampling needs T >= 1");
  config.validate(schedule);
  SampleResult r;
  Matrix x = standard_normal(frames, motion_dim, rng);
  const auto steps = substep_schedule(schedule.steps, config.step_count);
  const bool guided = config.guidance_scale > 0.0;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    Matrix clean = denoiser(x, steps[i], true);
    ++r.denoiser_passes;
    if (guided) {
      clean = guided_x0(clean, denoiser(x, steps[i], false), config.guidance_scale);
      ++r.denoiser_passes;
    }
    x = ddim_step(x, clean, steps[i], steps[i + 1], schedule, config.eta, rng);
  }
  r.motion = std::move(x);
  return r;
}

}  // namespace diffspk
