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

// The denoising network: condition encoders for audio, style and diffusion
// step feeding a transformer decoder built from biased conditional attention.
// The network predicts the clean motion directly from a noisy input.

#pragma once

#include "diffspk/attention.hpp"
#include "diffspk/data.hpp"

#include <functional>
#include <string>
#include <vector>

namespace diffspk {

struct DenoiserConfig {
  int hidden_dim = 64;
  int ff_dim = 128;
  int heads = 4;
  int blocks = 1;
  int vertex_count = 40;
  int feature_dim = 16;
  int subject_count = 4;
  int fps = 25;
  int max_step = 50;  // N, the largest diffusion step the step encoder accepts
  AttentionVariant variant = AttentionVariant::Full;

  int motion_dim() const { return 3 * vertex_count; }
  void validate() const;
  bool operator==(const DenoiserConfig&) const = default;
};

// y = x * weight + bias, weight stored fan_in x fan_out.
struct LinearParams {
  Matrix weight;
  RowVector bias;
};

struct AttentionParams {
  LinearParams query, key, value, output;
};

struct BlockParams {
  AttentionParams self_attn;
  AttentionParams cross_attn;
  LinearParams ff_in, ff_out;
};

struct DenoiserParams {
  // Temporal convolutions keep kernel-3 weights in im2col layout: (3 * in) x out.
  LinearParams audio_conv1, audio_conv2, audio_proj;
  Matrix style;  // K x C
  LinearParams step;
  LinearParams input, output;
  std::vector<BlockParams> blocks;

  using Visitor = std::function<void(const std::string& name, Eigen::Map<Matrix> tensor)>;
  using ConstVisitor = std::function<void(const std::string& name, Eigen::Map<const Matrix> tensor)>;

  // Visits every tensor in a fixed order; this order defines the flat view.
  void visit(const Visitor& f);
  void visit(const ConstVisitor& f) const;

  std::size_t scalar_count() const;
  double& scalar(std::size_t flat_index);
  double scalar(std::size_t flat_index) const;

  DenoiserParams zeros_like() const;
  bool all_finite() const;
};

// Xavier-uniform weights, zero biases.
DenoiserParams init_params(const DenoiserConfig& config, std::uint64_t seed);
DenoiserParams zero_params(const DenoiserConfig& config);
void check_params(const DenoiserConfig& config, const DenoiserParams& params);

// Interleaved [sin(n f_0), cos(n f_0), sin(n f_1), ...] with f_i = 10000^(-2i / C).
RowVector step_frequency_encoding(int step, int channels);
RowVector step_embedding(int step, const DenoiserConfig& config, const DenoiserParams& params);

RowVector style_embedding(const StyleOneHot& style, const DenoiserParams& params);
// Arbitrary style weights (one-hot, or zero for no style) times the style table.
RowVector style_embedding(const RowVector& style_weights, const DenoiserParams& params);

Matrix audio_encode(const Matrix& features, const DenoiserParams& params);

Matrix gelu(const Matrix& x);

struct ConditionEncodings {
  Matrix audio;     // T x C
  RowVector style;  // 1 x C
  RowVector step;   // 1 x C
};

// The decoder on precomputed encodings; use this to plug in an external audio encoder.
Matrix denoise(const Matrix& noisy, const ConditionEncodings& enc, const DenoiserConfig& config,
               const DenoiserParams& params);
// Same, with biases from variant_biases(config.variant, T, config.fps) built by the caller.
Matrix denoise(const Matrix& noisy, const ConditionEncodings& enc, const DenoiserConfig& config,
               const DenoiserParams& params, const VariantBiases& biases);

struct DenoiserInput {
  Matrix noisy;           // T x V*3
  Matrix audio_features;  // T x D, all zeros for the unconditional branch
  RowVector style;        // K weights
  int step = 0;
};

// Full network G: encoders followed by the decoder. Parameter gradients for a
// loss gradient w.r.t. the output are produced by denoiser_backward.
struct DenoiserTrace;

Matrix denoiser_forward(const DenoiserInput& input, const DenoiserConfig& config,
                        const DenoiserParams& params, DenoiserTrace* trace = nullptr);

// Accumulates d loss / d params into grads.
void denoiser_backward(const DenoiserTrace& trace, const Matrix& d_output,
                       const DenoiserConfig& config, const DenoiserParams& params,
                       DenoiserParams& grads);

struct BlockTrace {
  Matrix h_in, q_self, k_self, v_self;
  AttentionResult self_attn;
  Matrix h_mid, q_cross, k_cross, v_cross;
  AttentionResult cross_attn;
  Matrix h_ff, ff_pre, ff_act;
};

struct DenoiserTrace {
  DenoiserInput input;
  VariantBiases biases;
  Matrix conv1_cols, conv1_pre, conv1_act, conv2_cols, conv2_pre, conv2_act;
  RowVector step_code;
  ConditionEncodings enc;
  Matrix conditions;  // [e_s; e_n]
  std::vector<BlockTrace> blocks;
  Matrix h_final;
};

}  // namespace diffspk
