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

// Static attention biases and multi-head attention with condition tokens.
//
// A bias matrix for T queries over T' keys carries m extra leading columns,
// one per condition token (m = 2 for style + step, m = 0 when a variant drops
// them). Column indices below are 0-based, so the two condition columns are 0
// and 1 and the key aligned with query i sits at column i + 2.

#pragma once

#include "diffspk/common.hpp"

#include <string_view>
#include <vector>

namespace diffspk {

// Masked entries hold this additive value; exp underflows to exactly 0.
inline constexpr double kMaskedBias = -1e9;

inline bool is_masked(double b) { return b <= 0.5 * kMaskedBias; }

enum class AttentionVariant {
  Full,
  NoCrossBias,
  NoSelfBias,
  NoCondSelfAttn,
  FaceFormerBias,
  FullySelfAttn,
};

std::string_view to_string(AttentionVariant v);
AttentionVariant parse_variant(std::string_view name);
const std::vector<AttentionVariant>& all_variants();

struct BiasMatrix {
  Matrix values;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  bool masked(int i, int j) const { return is_masked(values(i, j)); }
  // Every row needs a finite entry.
  void validate() const;
};

BiasMatrix cross_attention_bias(int frames);

// Motion columns get -floor(d / period) for frame distance d; condition columns 0.
BiasMatrix self_attention_bias(int frames, int period);

struct FaceFormerBiases {
  BiasMatrix self;   // causal, -floor((i - j) / period) on and below the diagonal
  BiasMatrix cross;  // diagonal alignment
};

FaceFormerBiases faceformer_bias(int frames, int period);

// FaceFormer biases over the sequence [e_s, e_n, x_1..x_T], keeping the rows
// of the T motion queries: the condition tokens are biased like any other position.
FaceFormerBiases faceformer_conditioned_bias(int frames, int period);

// Symmetric periodic bias over a single concatenated token sequence.
BiasMatrix joint_sequence_bias(int tokens, int period);

struct VariantBiases {
  BiasMatrix self;
  BiasMatrix cross;
  bool self_uses_conditions = true;
};

// Biases used by the denoiser for a given variant. FullySelfAttn has no
// cross-attention; its self bias spans the 2T + 2 joint sequence.
VariantBiases variant_biases(AttentionVariant variant, int frames, int period);

struct AttentionResult {
  Matrix output;               // T x C, after the output projection
  Matrix mixed;                // T x C, concatenated heads before projection
  std::vector<Matrix> weights; // per head, T x (m + T')
};

// q: T x C, keys/values: T' x C, conditions: m x C prepended to both keys and
// values. Per head: softmax(q_h [cond; k]_h^T / sqrt(C / heads) + bias) [cond; v]_h.
AttentionResult biased_conditional_attention(const Matrix& q, const Matrix& keys,
                                             const Matrix& values, const Matrix& conditions,
                                             const BiasMatrix& bias, int heads,
                                             const Matrix& out_weight, const RowVector& out_bias);

// Head-averaged attention probabilities, T x (m + T').
Matrix attention_weights_debug(const Matrix& q, const Matrix& keys, const Matrix& conditions,
                               const BiasMatrix& bias, int heads);

struct AttentionGrads {
  Matrix d_q;
  Matrix d_keys;
  Matrix d_values;
  Matrix d_conditions;
  Matrix d_out_weight;
  RowVector d_out_bias;
};

AttentionGrads biased_conditional_attention_backward(const Matrix& q, const Matrix& keys,
                                                     const Matrix& values,
                                                     const Matrix& conditions, int heads,
                                                     const Matrix& out_weight,
                                                     const AttentionResult& forward,
                                                     const Matrix& d_output);

}  // namespace diffspk
