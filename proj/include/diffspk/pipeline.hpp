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

// Glue between the denoiser and the sampler.

#pragma once

#include "diffspk/data.hpp"
#include "diffspk/denoiser.hpp"
#include "diffspk/diffusion.hpp"

#include <cstdint>
#include <functional>

namespace diffspk {

// Encodes audio and style once per branch; only the step token changes per call.
DenoiseFn make_denoise_fn(const DenoiserConfig& config, const DenoiserParams& params,
                          const Matrix& audio_features, const RowVector& style_weights);

struct GeneratedMotion {
  MotionSequence motion;
  int denoiser_passes = 0;
};

GeneratedMotion sample_motion(const DenoiserConfig& config, const DenoiserParams& params,
                              const DiffusionSchedule& schedule, const AudioFeatureSequence& audio,
                              const StyleOneHot& style, const SamplerConfig& sampler, Rng& rng);

// Independent stream per (seed, item) so results do not depend on evaluation order.
Rng item_rng(std::uint64_t seed, std::uint64_t item);

// Runs fn(i) for i in [0, count) on up to `threads` workers; exceptions are rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// Worker cap from DIFFSPK_THREADS, defaulting to 1.
int worker_threads();

}  // namespace diffspk
