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

#include "diffspk/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace diffspk {

DenoiseFn make_denoise_fn(const DenoiserConfig& config, const DenoiserParams& params,
                          const Matrix& audio_features, const RowVector& style_weights) {
  ConditionEncodings cond{audio_encode(audio_features, params), style_embedding(style_weights, params), {}};
  ConditionEncodings uncond{
      audio_encode(Matrix::Zero(audio_features.rows(), audio_features.cols()), params), cond.style, {}};
  auto biases = std::make_shared<const VariantBiases>(
      variant_biases(config.variant, static_cast<int>(audio_features.rows()), config.fps));
  return [config, &params, biases, cond = std::move(cond), uncond = std::move(uncond)](
             const Matrix& noisy, int step, bool conditional) mutable {
    auto& enc = conditional ? cond : uncond;
    enc.step = step_embedding(step, config, params);
    return denoise(noisy, enc, config, params, *biases);
  };
}

GeneratedMotion sample_motion(const DenoiserConfig& config, const DenoiserParams& params,
                              const DiffusionSchedule& schedule, const AudioFeatureSequence& audio,
                              const StyleOneHot& style, const SamplerConfig& sampler, Rng& rng) {
  audio.validate();
  require(audio.feature_dim() == config.feature_dim, ErrorKind::Incompatible,
          "audio feature dimension differs from the model");
  require(style.subject_count == config.subject_count, ErrorKind::Incompatible,
          "style subject count differs from the model");
  require(config.max_step == schedule.steps, ErrorKind::Incompatible,
          "model step range differs from the schedule");
  const auto fn = make_denoise_fn(config, params, audio.features.cast<double>(), style.dense());
  const auto r = sample(fn, audio.frames(), config.motion_dim(), sampler, schedule, rng);
  require(r.motion.allFinite(), ErrorKind::Numeric, "sampled motion is not finite");
  GeneratedMotion out;
  out.motion.fps = audio.fps;
  out.motion.vertex_count = config.vertex_count;
  out.motion.offsets = r.motion.cast<float>();
  out.denoiser_passes = r.denoiser_passes;
  return out;
}

Rng item_rng(std::uint64_t seed, std::uint64_t item) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32)};
  return Rng(seq);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int worker_threads() {
  if (const char* env = std::getenv("DIFFSPK_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace diffspk
