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

#include "diffspk/bench.hpp"

#include "diffspk/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace diffspk {

namespace {

using Clock = std::chrono::steady_clock;

Matrix affine(const Matrix& x, const LinearParams& p) {
  Matrix y = x * p.weight;
  y.rowwise() += p.bias;
  return y;
}

// Causal periodic bias for query positions [first, first + rows) over keys [0, keys).
BiasMatrix causal_rows(int first, int rows, int keys, int period) {
  BiasMatrix b{Matrix::Constant(rows, keys, kMaskedBias)};
  for (int r = 0; r < rows; ++r) {
    const int i = first + r;
    for (int j = 0; j <= i && j < keys; ++j) b.values(r, j) = -static_cast<double>((i - j) / period);
  }
  return b;
}

BiasMatrix aligned_rows(int first, int rows, int keys) {
  BiasMatrix b{Matrix::Constant(rows, keys, kMaskedBias)};
  for (int r = 0; r < rows; ++r) b.values(r, first + r) = 0.0;
  return b;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

AutoregressiveResult autoregressive_decode(const DenoiserConfig& config, const DenoiserParams& params,
                                           const AudioFeatureSequence& audio, const StyleOneHot& style) {
  audio.validate();
  check_params(config, params);
  require(audio.feature_dim() == config.feature_dim, ErrorKind::Incompatible,
          "audio feature dimension differs from the model");
  const int T = audio.frames();
  const int C = config.hidden_dim;
  const Matrix no_conditions(0, C);
  const Matrix audio_enc = audio_encode(audio.features.cast<double>(), params);
  std::vector<Matrix> memory_keys, memory_values;
  for (const auto& b : params.blocks) {
    memory_keys.push_back(affine(audio_enc, b.cross_attn.key));
    memory_values.push_back(affine(audio_enc, b.cross_attn.value));
  }

  Matrix tokens(T, C);
  tokens.row(0) = style_embedding(style, params);
  AutoregressiveResult r;
  r.motion.fps = audio.fps;
  r.motion.vertex_count = config.vertex_count;
  r.motion.offsets.resize(T, config.motion_dim());

  for (int t = 0; t < T; ++t) {
    Matrix h = tokens.topRows(t + 1);
    for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
      const auto& b = params.blocks[bi];
      // Only the newest position feeds the output after the final block.
      const bool last = bi + 1 == params.blocks.size();
      const int first = last ? t : 0;
      const Matrix rows = h.bottomRows(t + 1 - first);
      const Matrix q = affine(rows, b.self_attn.query);
      const Matrix k = affine(h, b.self_attn.key);
      const Matrix v = affine(h, b.self_attn.value);
      Matrix x = rows + biased_conditional_attention(q, k, v, no_conditions,
                                                     causal_rows(first, static_cast<int>(rows.rows()), t + 1,
                                                                 config.fps),
                                                     config.heads, b.self_attn.output.weight,
                                                     b.self_attn.output.bias)
                            .output;
      const Matrix qc = affine(x, b.cross_attn.query);
      x += biased_conditional_attention(qc, memory_keys[bi], memory_values[bi], no_conditions,
                                        aligned_rows(first, static_cast<int>(x.rows()), T), config.heads,
                                        b.cross_attn.output.weight, b.cross_attn.output.bias)
               .output;
      x += affine(gelu(affine(x, b.ff_in)), b.ff_out);
      h = std::move(x);
    }
    const Matrix frame = affine(h.bottomRows(1), params.output);
    r.motion.offsets.row(t) = frame.cast<float>();
    if (t + 1 < T) tokens.row(t + 1) = affine(frame, params.input);
    ++r.passes;
  }
  return r;
}

std::vector<LatencyRecord> bench_latency(std::span<const double> durations_seconds, const BenchOptions& options) {
  require(options.repeats >= 3, ErrorKind::Config, "bench.repeats must be >= 3");
  require(options.warmups >= 0, ErrorKind::Config, "bench.warmups must be >= 0");
  const auto& model = options.model;
  const auto schedule = make_schedule(model.max_step, options.schedule);
  options.sampler.validate(schedule);
  const auto params = init_params(model, options.seed);
  const StyleOneHot style{0, model.subject_count};
  const double resolution_ms =
      1000.0 * static_cast<double>(Clock::period::num) / static_cast<double>(Clock::period::den);

  SyntheticDatasetSpec audio_spec;
  audio_spec.feature_dim = model.feature_dim;
  audio_spec.fps = model.fps;

  std::vector<LatencyRecord> records;
  for (double seconds : durations_seconds) {
    require(seconds > 0.0, ErrorKind::Config, "bench durations must be positive");
    const int T = std::max(1, static_cast<int>(std::lround(seconds * model.fps)));
    Rng audio_rng(options.seed + static_cast<std::uint64_t>(T));
    const auto audio = synthesize_audio(audio_spec, T, audio_rng);

    for (auto kind : {DecoderKind::Diffusion, DecoderKind::Autoregressive}) {
      LatencyRecord rec;
      rec.decoder = kind;
      rec.audio_seconds = seconds;
      rec.frames = T;
      rec.repeats = options.repeats;
      rec.warmups = options.warmups;
      auto run_once = [&] {
        if (kind == DecoderKind::Diffusion) {
          Rng rng(options.seed);
          return sample_motion(model, params, schedule, audio, style, options.sampler, rng).denoiser_passes;
        }
        return autoregressive_decode(model, params, audio, style).passes;
      };
      for (int w = 0; w < options.warmups; ++w) rec.denoiser_passes = run_once();
      std::vector<double> times(options.repeats);
      if (options.threads > 1) {
        const double total = time_ms([&] {
          parallel_for(times.size(), options.threads, [&](std::size_t) { run_once(); });
        });
        std::fill(times.begin(), times.end(), total / options.repeats);
        rec.note = "throughput";
      } else {
        for (auto& t : times) t = time_ms([&] { rec.denoiser_passes = run_once(); });
      }
      if (rec.denoiser_passes == 0) rec.denoiser_passes = run_once();
      rec.wall_ms = median(times);
      if (rec.wall_ms < 100.0 * resolution_ms)
        rec.note += rec.note.empty() ? "low_clock_resolution" : ";low_clock_resolution";
      records.push_back(rec);
    }
  }
  return records;
}

void write_latency_csv(const std::filesystem::path& path, std::span<const LatencyRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + path.string());
  out << "decoder,audio_seconds,frames,denoiser_passes,wall_ms,ms_per_pass,repeats,warmups,note\n";
  out << std::setprecision(6);
  for (const auto& r : records) {
    out << (r.decoder == DecoderKind::Diffusion ? "diffusion" : "autoregressive") << "," << r.audio_seconds << ","
        << r.frames << "," << r.denoiser_passes << "," << r.wall_ms << "," << r.wall_ms / r.denoiser_passes << ","
        << r.repeats << "," << r.warmups << "," << r.note << "\n";
  }
}

}  // namespace diffspk
