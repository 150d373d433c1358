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

#include "diffspk/diffspk.h"

#include "diffspk/checkpoint.hpp"
#include "diffspk/commands.hpp"
#include "diffspk/eval.hpp"
#include "diffspk/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct dspk_config {
  diffspk::RunConfig value;
};

struct dspk_options {
  diffspk::CommandOptions value;
};

struct dspk_model {
  diffspk::Checkpoint checkpoint;
  diffspk::DiffusionSchedule schedule;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
dspk_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DSPK_OK;
  } catch (const diffspk::Error& e) {
    last_error = e.what();
    return static_cast<dspk_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return DSPK_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  diffspk::require(p != nullptr, diffspk::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

void copy_out(const std::string& s, char* buffer, std::size_t capacity, std::size_t* required) {
  if (required) *required = s.size() + 1;
  if (!buffer) return;
  diffspk::require(capacity > s.size(), diffspk::ErrorKind::InvalidArgument, "output buffer too small");
  std::memcpy(buffer, s.c_str(), s.size() + 1);
}

diffspk::Matrix to_matrix(const float* data, int frames, int cols) {
  need(data, "motion");
  diffspk::require(frames > 0 && cols > 0, diffspk::ErrorKind::InvalidArgument, "empty motion");
  return Eigen::Map<const diffspk::Matrixf>(data, frames, cols).cast<double>();
}

}  // namespace

extern "C" {

const char* dspk_last_error(void) { return last_error.c_str(); }

const char* dspk_version(void) { return "0.1.0"; }

dspk_status dspk_config_new(dspk_config** out) {
  return guarded([&] {
    need(out, "out");
    auto c = std::make_unique<dspk_config>();
    c->value.finalize();
    *out = c.release();
  });
}

dspk_status dspk_config_load(const char* path, dspk_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new dspk_config{diffspk::load_config(path)};
  });
}

dspk_status dspk_config_parse(const char* text, dspk_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new dspk_config{diffspk::parse_config(text)};
  });
}

dspk_status dspk_config_set(dspk_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    auto updated = config->value;
    updated.set(key, value);
    updated.finalize();
    config->value = std::move(updated);
  });
}

dspk_status dspk_config_hash(const dspk_config* config, uint64_t* out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = config->value.hash();
  });
}

dspk_status dspk_config_text(const dspk_config* config, char* buffer, size_t capacity, size_t* required) {
  return guarded([&] {
    need(config, "config");
    copy_out(config->value.canonical_text(), buffer, capacity, required);
  });
}

void dspk_config_free(dspk_config* config) { delete config; }

dspk_status dspk_options_new(dspk_options** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dspk_options{};
  });
}

#define DSPK_OPTION_SETTER(name, type, field, convert)    \
  dspk_status dspk_options_set_##name(dspk_options* options, type v) { \
    return guarded([&] {                                  \
      need(options, "options");                           \
      options->value.field = convert;                     \
    });                                                   \
  }

DSPK_OPTION_SETTER(seed, uint64_t, seed, v)
DSPK_OPTION_SETTER(style, int, style, v)
DSPK_OPTION_SETTER(item, int, item, v)
DSPK_OPTION_SETTER(guidance, double, guidance, v)

#undef DSPK_OPTION_SETTER

#define DSPK_STRING_SETTER(name, field, convert)                        \
  dspk_status dspk_options_set_##name(dspk_options* options, const char* v) { \
    return guarded([&] {                                                \
      need(options, "options");                                         \
      need(v, #name);                                                   \
      options->value.field = convert;                                   \
    });                                                                 \
  }

DSPK_STRING_SETTER(out, out, std::filesystem::path(v))
DSPK_STRING_SETTER(audio, audio, std::filesystem::path(v))
DSPK_STRING_SETTER(checkpoint, checkpoint, std::filesystem::path(v))
DSPK_STRING_SETTER(pred_dir, pred_dir, std::filesystem::path(v))
DSPK_STRING_SETTER(split, split, std::string(v))

#undef DSPK_STRING_SETTER

dspk_status dspk_options_set_log(dspk_options* options, dspk_log_fn fn, void* user) {
  return guarded([&] {
    need(options, "options");
    if (fn)
      options->value.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    else
      options->value.log = nullptr;
  });
}

void dspk_options_free(dspk_options* options) { delete options; }

dspk_status dspk_run(const char* command, const dspk_config* config, const dspk_options* options, char* out_path,
                     size_t out_capacity) {
  return guarded([&] {
    need(command, "command");
    need(config, "config");
    const diffspk::CommandOptions defaults;
    const auto path = diffspk::run_command(command, config->value, options ? options->value : defaults);
    if (out_path) copy_out(path.string(), out_path, out_capacity, nullptr);
  });
}

dspk_status dspk_model_load(const char* checkpoint_path, dspk_model** out) {
  return guarded([&] {
    need(checkpoint_path, "checkpoint_path");
    need(out, "out");
    auto model = std::make_unique<dspk_model>();
    model->checkpoint = diffspk::load_checkpoint(checkpoint_path);
    model->schedule = diffspk::make_schedule(model->checkpoint.config.max_step, model->checkpoint.schedule);
    *out = model.release();
  });
}

dspk_status dspk_model_dims(const dspk_model* model, int* vertex_count, int* feature_dim, int* subject_count) {
  return guarded([&] {
    need(model, "model");
    const auto& c = model->checkpoint.config;
    if (vertex_count) *vertex_count = c.vertex_count;
    if (feature_dim) *feature_dim = c.feature_dim;
    if (subject_count) *subject_count = c.subject_count;
  });
}

dspk_status dspk_model_sample(const dspk_model* model, const float* audio, int frames, int style, int step_count,
                              double eta, double guidance, uint64_t seed, float* motion, size_t motion_len,
                              int* denoiser_passes) {
  return guarded([&] {
    need(model, "model");
    need(audio, "audio");
    need(motion, "motion");
    const auto& c = model->checkpoint.config;
    diffspk::require(frames > 0, diffspk::ErrorKind::InvalidArgument, "frames must be positive");
    diffspk::require(motion_len == static_cast<std::size_t>(frames) * c.motion_dim(),
                     diffspk::ErrorKind::InvalidArgument, "motion buffer has the wrong length");
    diffspk::AudioFeatureSequence a;
    a.fps = c.fps;
    a.features = Eigen::Map<const diffspk::Matrixf>(audio, frames, c.feature_dim);
    const diffspk::StyleOneHot s{style, c.subject_count};
    s.validate();
    diffspk::SamplerConfig sampler{step_count, eta, guidance};
    auto rng = diffspk::item_rng(seed, 0);
    const auto r = diffspk::sample_motion(c, model->checkpoint.params, model->schedule, a, s, sampler, rng);
    std::memcpy(motion, r.motion.offsets.data(), motion_len * sizeof(float));
    if (denoiser_passes) *denoiser_passes = r.denoiser_passes;
  });
}

void dspk_model_free(dspk_model* model) { delete model; }

dspk_status dspk_lip_vertex_error(const float* pred, const float* gt, int frames, int vertex_count, const int* mask,
                                  int mask_len, double* out) {
  return guarded([&] {
    need(mask, "mask");
    need(out, "out");
    *out = diffspk::lip_vertex_error(to_matrix(pred, frames, 3 * vertex_count), to_matrix(gt, frames, 3 * vertex_count),
                                     std::span<const int>(mask, static_cast<std::size_t>(std::max(mask_len, 0))));
  });
}

dspk_status dspk_facial_dynamics_deviation(const float* pred, const float* gt, int frames, int vertex_count,
                                           const int* mask, int mask_len, double* out) {
  return guarded([&] {
    need(mask, "mask");
    need(out, "out");
    *out = diffspk::facial_dynamics_deviation(
        to_matrix(pred, frames, 3 * vertex_count), to_matrix(gt, frames, 3 * vertex_count),
        std::span<const int>(mask, static_cast<std::size_t>(std::max(mask_len, 0))));
  });
}

}  // extern "C"
