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

#include "diffspk/attention.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace diffspk {

namespace {

constexpr int kConditionTokens = 2;

struct VariantName {
  AttentionVariant variant;
  std::string_view name;
};

constexpr VariantName kVariantNames[] = {
    {AttentionVariant::Full, "full"},
    {AttentionVariant::NoCrossBias, "no_cross_bias"},
    {AttentionVariant::NoSelfBias, "no_self_bias"},
    {AttentionVariant::NoCondSelfAttn, "no_cond_self_attn"},
    {AttentionVariant::FaceFormerBias, "faceformer_bias"},
    {AttentionVariant::FullySelfAttn, "fully_self_attn"},
};

double period_penalty(int distance, int period) {
  return -static_cast<double>(distance / period);
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), bottom.cols());
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

// Softmax over a row of logits; masked positions get exactly zero.
void masked_softmax_row(Eigen::Ref<RowVector> logits, const Eigen::Ref<const RowVector>& bias) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    if (!is_masked(bias[j]) && logits[j] > max_logit) max_logit = logits[j];
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    if (is_masked(bias[j])) {
      logits[j] = 0.0;
    } else {
      logits[j] = std::exp(logits[j] - max_logit);
      total += logits[j];
    }
  }
  logits /= total;
}

void check_attention_shapes(const Matrix& q, const Matrix& keys, const Matrix* values,
                            const Matrix& conditions, const BiasMatrix& bias, int heads) {
  const auto C = q.cols();
  require(heads > 0 && C % heads == 0, ErrorKind::Shape,
          "channel count " + std::to_string(C) + " not divisible by " + std::to_string(heads) +
              " heads");
  require(keys.cols() == C && (conditions.rows() == 0 || conditions.cols() == C), ErrorKind::Shape,
          "attention channel mismatch");
  if (values) require(values->rows() == keys.rows() && values->cols() == C, ErrorKind::Shape,
                      "attention values do not match keys");
  require(bias.rows() == q.rows() && bias.cols() == conditions.rows() + keys.rows(),
          ErrorKind::Shape,
          "bias is " + std::to_string(bias.rows()) + "x" + std::to_string(bias.cols()) +
              ", expected " + std::to_string(q.rows()) + "x" +
              std::to_string(conditions.rows() + keys.rows()));
  bias.validate();
}

std::vector<Matrix> head_weights(const Matrix& q, const Matrix& memory_keys,
                                 const BiasMatrix& bias, int heads) {
  const auto dh = q.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Matrix> weights(heads);
  for (int h = 0; h < heads; ++h) {
    Matrix logits = q.middleCols(h * dh, dh) * memory_keys.middleCols(h * dh, dh).transpose();
    logits *= scale;
    logits += bias.values;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) masked_softmax_row(logits.row(i), bias.values.row(i));
    weights[h] = std::move(logits);
  }
  return weights;
}

}  // namespace

std::string_view to_string(AttentionVariant v) {
  for (const auto& n : kVariantNames)
    if (n.variant == v) return n.name;
  return "unknown";
}

AttentionVariant parse_variant(std::string_view name) {
  for (const auto& n : kVariantNames)
    if (n.name == name) return n.variant;
  fail(ErrorKind::Config, "unknown attention variant '" + std::string(name) + "'");
}

const std::vector<AttentionVariant>& all_variants() {
  static const std::vector<AttentionVariant> variants = [] {
    std::vector<AttentionVariant> out;
    for (const auto& n : kVariantNames) out.push_back(n.variant);
    return out;
  }();
  return variants;
}

void BiasMatrix::validate() const {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    bool any_finite = false;
    for (Eigen::Index j = 0; j < values.cols() && !any_finite; ++j) any_finite = !is_masked(values(i, j));
    require(any_finite, ErrorKind::Shape, "bias row " + std::to_string(i) + " is fully masked");
  }
}

BiasMatrix cross_attention_bias(int frames) {
  require(frames >= 1, ErrorKind::InvalidArgument, "cross bias needs T >= 1");
  BiasMatrix b{Matrix::Constant(frames, frames + kConditionTokens, kMaskedBias)};
  for (int i = 0; i < frames; ++i) {
    b.values(i, 0) = 0.0;
    b.values(i, 1) = 0.0;
    b.values(i, i + kConditionTokens) = 0.0;
  }
  return b;
}

BiasMatrix self_attention_bias(int frames, int period) {
  require(frames >= 1 && period >= 1, ErrorKind::InvalidArgument, "self bias needs T >= 1, p >= 1");
  BiasMatrix b{Matrix::Zero(frames, frames + kConditionTokens)};
  for (int i = 0; i < frames; ++i)
    for (int j = 0; j < frames; ++j) b.values(i, j + kConditionTokens) = period_penalty(std::abs(i - j), period);
  return b;
}

FaceFormerBiases faceformer_bias(int frames, int period) {
  require(frames >= 1 && period >= 1, ErrorKind::InvalidArgument, "faceformer bias needs T >= 1, p >= 1");
  FaceFormerBiases b{BiasMatrix{Matrix::Constant(frames, frames, kMaskedBias)},
                     BiasMatrix{Matrix::Constant(frames, frames, kMaskedBias)}};
  for (int i = 0; i < frames; ++i) {
    for (int j = 0; j <= i; ++j) b.self.values(i, j) = period_penalty(i - j, period);
    b.cross.values(i, i) = 0.0;
  }
  return b;
}

FaceFormerBiases faceformer_conditioned_bias(int frames, int period) {
  const auto full = faceformer_bias(frames + kConditionTokens, period);
  return {BiasMatrix{full.self.values.bottomRows(frames)}, BiasMatrix{full.cross.values.bottomRows(frames)}};
}

BiasMatrix joint_sequence_bias(int tokens, int period) {
  require(tokens >= 1 && period >= 1, ErrorKind::InvalidArgument, "joint bias needs n >= 1, p >= 1");
  BiasMatrix b{Matrix(tokens, tokens)};
  for (int i = 0; i < tokens; ++i)
    for (int j = 0; j < tokens; ++j) b.values(i, j) = period_penalty(std::abs(i - j), period);
  return b;
}

VariantBiases variant_biases(AttentionVariant variant, int frames, int period) {
  switch (variant) {
    case AttentionVariant::Full:
      return {self_attention_bias(frames, period), cross_attention_bias(frames), true};
    case AttentionVariant::NoCrossBias:
      return {self_attention_bias(frames, period),
              BiasMatrix{Matrix::Zero(frames, frames + kConditionTokens)}, true};
    case AttentionVariant::NoSelfBias:
      return {BiasMatrix{Matrix::Zero(frames, frames + kConditionTokens)}, cross_attention_bias(frames),
              true};
    case AttentionVariant::NoCondSelfAttn:
      return {BiasMatrix{self_attention_bias(frames, period).values.rightCols(frames)},
              cross_attention_bias(frames), false};
    case AttentionVariant::FaceFormerBias: {
      auto ff = faceformer_conditioned_bias(frames, period);
      return {std::move(ff.self), std::move(ff.cross), true};
    }
    case AttentionVariant::FullySelfAttn:
      return {joint_sequence_bias(2 * frames + kConditionTokens, period), BiasMatrix{}, false};
  }
  fail(ErrorKind::InvalidArgument, "unhandled attention variant");
}

AttentionResult biased_conditional_attention(const Matrix& q, const Matrix& keys,
                                             const Matrix& values, const Matrix& conditions,
                                             const BiasMatrix& bias, int heads,
                                             const Matrix& out_weight, const RowVector& out_bias) {
  check_attention_shapes(q, keys, &values, conditions, bias, heads);
  const auto C = q.cols();
  require(out_weight.rows() == C && out_bias.size() == out_weight.cols(), ErrorKind::Shape,
          "attention output projection shape mismatch");
  const auto dh = C / heads;

  AttentionResult r;
  const Matrix memory_values = stack_rows(conditions, values);
  r.weights = head_weights(q, stack_rows(conditions, keys), bias, heads);
  r.mixed.resize(q.rows(), C);
  for (int h = 0; h < heads; ++h)
    r.mixed.middleCols(h * dh, dh).noalias() = r.weights[h] * memory_values.middleCols(h * dh, dh);
  r.output = r.mixed * out_weight;
  r.output.rowwise() += out_bias;
  return r;
}

Matrix attention_weights_debug(const Matrix& q, const Matrix& keys, const Matrix& conditions,
                               const BiasMatrix& bias, int heads) {
  check_attention_shapes(q, keys, nullptr, conditions, bias, heads);
  const auto weights = head_weights(q, stack_rows(conditions, keys), bias, heads);
  Matrix mean = Matrix::Zero(bias.rows(), bias.cols());
  for (const auto& w : weights) mean += w;
  return mean / static_cast<double>(heads);
}

AttentionGrads biased_conditional_attention_backward(const Matrix& q, const Matrix& keys,
                                                     const Matrix& values,
                                                     const Matrix& conditions, int heads,
                                                     const Matrix& out_weight,
                                                     const AttentionResult& forward,
                                                     const Matrix& d_output) {
  const auto C = q.cols();
  const auto m = conditions.rows();
  const auto dh = C / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix memory_keys = stack_rows(conditions, keys);
  const Matrix memory_values = stack_rows(conditions, values);

  AttentionGrads g;
  g.d_out_weight = forward.mixed.transpose() * d_output;
  g.d_out_bias = d_output.colwise().sum();
  const Matrix d_mixed = d_output * out_weight.transpose();

  g.d_q = Matrix::Zero(q.rows(), C);
  Matrix d_mem_keys = Matrix::Zero(memory_keys.rows(), C);
  Matrix d_mem_values = Matrix::Zero(memory_values.rows(), C);
  for (int h = 0; h < heads; ++h) {
    const Matrix& p = forward.weights[h];
    const auto d_head = d_mixed.middleCols(h * dh, dh);
    d_mem_values.middleCols(h * dh, dh).noalias() = p.transpose() * d_head;
    Matrix d_p = d_head * memory_values.middleCols(h * dh, dh).transpose();
    // Softmax Jacobian row-wise: p * (dp - <dp, p>).
    const Eigen::VectorXd inner = (d_p.cwiseProduct(p)).rowwise().sum();
    Matrix d_logits = p.cwiseProduct(d_p.colwise() - inner);
    d_logits *= scale;
    g.d_q.middleCols(h * dh, dh).noalias() = d_logits * memory_keys.middleCols(h * dh, dh);
    d_mem_keys.middleCols(h * dh, dh).noalias() = d_logits.transpose() * q.middleCols(h * dh, dh);
  }
  g.d_conditions = d_mem_keys.topRows(m) + d_mem_values.topRows(m);
  g.d_keys = d_mem_keys.bottomRows(keys.rows());
  g.d_values = d_mem_values.bottomRows(values.rows());
  return g;
}

}  // namespace diffspk
