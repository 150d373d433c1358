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

// Parallel diffusion decoding versus frame-by-frame autoregressive decoding.

#pragma once

#include "diffspk/data.hpp"
#include "diffspk/denoiser.hpp"
#include "diffspk/diffusion.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace diffspk {

struct AutoregressiveResult {
  MotionSequence motion;
  int passes = 0;
};

// One decoder pass per frame. Each pass re-projects the whole generated
// prefix (no key/value cache) under causal periodic self bias and diagonal
// audio alignment; the style embedding is the start token.
AutoregressiveResult autoregressive_decode(const DenoiserConfig& config, const DenoiserParams& params,
                                           const AudioFeatureSequence& audio, const StyleOneHot& style);

enum class DecoderKind { Diffusion, Autoregressive };

struct LatencyRecord {
  DecoderKind decoder = DecoderKind::Diffusion;
  double audio_seconds = 0.0;
  int frames = 0;
  int denoiser_passes = 0;
  double wall_ms = 0.0;  // median over repeats
  int repeats = 3;
  int warmups = 1;
  std::string note;
};

struct BenchOptions {
  DenoiserConfig model;
  ScheduleKind schedule = ScheduleKind::Linear;
  SamplerConfig sampler;
  int repeats = 3;
  int warmups = 1;
  std::uint64_t seed = 1;
  int threads = 1;  // > 1 runs repeats concurrently (throughput mode)
};

// Times both decoders per duration with randomly initialized, equally sized weights.
std::vector<LatencyRecord> bench_latency(std::span<const double> durations_seconds, const BenchOptions& options);

void write_latency_csv(const std::filesystem::path& path, std::span<const LatencyRecord> records);

}  // namespace diffspk
