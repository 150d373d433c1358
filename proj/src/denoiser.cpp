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

#include "diffspk/denoiser.hpp"

#include <cmath>
#include <numbers>

namespace diffspk {

namespace {

constexpr int kKernel = 3;
constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

Matrix affine(const Matrix& x, const LinearParams& p) {
  Matrix y = x * p.weight;
  y.rowwise() += p.bias;
  return y;
}

void affine_backward(const Matrix& x, const Matrix& d_y, const LinearParams& p, LinearParams& g,
                     Matrix* d_x) {
  g.weight.noalias() += x.transpose() * d_y;
  g.bias += d_y.colwise().sum();
  if (d_x) d_x->noalias() += d_y * p.weight.transpose();
}

Matrix gelu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double inner = kSqrt2OverPi * (v + kGeluCoeff * v * v * v);
    const double th = std::tanh(inner);
    const double d_inner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * v * v);
    return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * d_inner;
  });
}

// Rows [x_{t-1}, x_t, x_{t+1}] with zero padding at both ends.
Matrix im2col(const Matrix& x) {
  const auto T = x.rows();
  const auto D = x.cols();
  Matrix cols = Matrix::Zero(T, kKernel * D);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 0; k < kKernel; ++k) {
      const auto src = t + k - 1;
      if (src >= 0 && src < T) cols.block(t, k * D, 1, D) = x.row(src);
    }
  return cols;
}

Matrix col2im(const Matrix& d_cols, Eigen::Index channels) {
  const auto T = d_cols.rows();
  Matrix d_x = Matrix::Zero(T, channels);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 0; k < kKernel; ++k) {
      const auto src = t + k - 1;
      if (src >= 0 && src < T) d_x.row(src) += d_cols.block(t, k * channels, 1, channels);
    }
  return d_x;
}

LinearParams xavier_linear(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  LinearParams p{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = u(rng);
  return p;
}

LinearParams zero_linear(int fan_in, int fan_out) {
  return {Matrix::Zero(fan_in, fan_out), RowVector::Zero(fan_out)};
}

template <typename MakeLinear>
DenoiserParams build_params(const DenoiserConfig& c, MakeLinear&& make, Matrix style) {
  const int C = c.hidden_dim;
  DenoiserParams p;
  p.audio_conv1 = make(kKernel * c.feature_dim, C);
  p.audio_conv2 = make(kKernel * C, C);
  p.audio_proj = make(C, C);
  p.style = std::move(style);
  p.step = make(C, C);
  p.input = make(c.motion_dim(), C);
  p.blocks.resize(c.blocks);
  for (auto& b : p.blocks) {
    for (auto* a : {&b.self_attn, &b.cross_attn}) {
      a->query = make(C, C);
      a->key = make(C, C);
      a->value = make(C, C);
      a->output = make(C, C);
    }
    b.ff_in = make(C, c.ff_dim);
    b.ff_out = make(c.ff_dim, C);
  }
  p.output = make(C, c.motion_dim());
  return p;
}

template <typename Params, typename Fn>
void visit_all(Params& p, Fn&& f) {
  auto linear = [&](const std::string& name, auto& l) {
    f(name + ".weight", l.weight);
    f(name + ".bias", l.bias);
  };
  linear("audio.conv1", p.audio_conv1);
  linear("audio.conv2", p.audio_conv2);
  linear("audio.proj", p.audio_proj);
  f(std::string("style.table"), p.style);
  linear("step.proj", p.step);
  linear("input", p.input);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const auto prefix = "block" + std::to_string(i) + ".";
    auto& b = p.blocks[i];
    for (auto [name, a] : {std::pair{"self", &b.self_attn}, std::pair{"cross", &b.cross_attn}}) {
      linear(prefix + name + ".query", a->query);
      linear(prefix + name + ".key", a->key);
      linear(prefix + name + ".value", a->value);
      linear(prefix + name + ".output", a->output);
    }
    linear(prefix + "ff.in", b.ff_in);
    linear(prefix + "ff.out", b.ff_out);
  }
  linear("output", p.output);
}

void check_shape(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_rows,
                 Eigen::Index want_cols) {
  require(rows == want_rows && cols == want_cols, ErrorKind::Incompatible,
          "parameter " + name + " is " + std::to_string(rows) + "x" + std::to_string(cols) +
              ", config expects " + std::to_string(want_rows) + "x" + std::to_string(want_cols));
}

}  // namespace

void DenoiserConfig::validate() const {
  require(hidden_dim > 0 && ff_dim > 0 && heads > 0 && blocks > 0 && vertex_count > 0 &&
              feature_dim > 0 && subject_count > 0 && fps > 0 && max_step > 0,
          ErrorKind::Config, "denoiser config values must be positive");
  require(hidden_dim % heads == 0, ErrorKind::Config, "model.hidden_dim must be divisible by model.heads");
  require(hidden_dim % 2 == 0, ErrorKind::Config, "model.hidden_dim must be even for the step encoding");
}

void DenoiserParams::visit(const Visitor& f) {
  visit_all(*this, [&](const std::string& name, auto& t) {
    f(name, Eigen::Map<Matrix>(t.data(), t.rows(), t.cols()));
  });
}

void DenoiserParams::visit(const ConstVisitor& f) const {
  visit_all(*this, [&](const std::string& name, const auto& t) {
    f(name, Eigen::Map<const Matrix>(t.data(), t.rows(), t.cols()));
  });
}

std::size_t DenoiserParams::scalar_count() const {
  std::size_t n = 0;
  visit(ConstVisitor([&](const std::string&, Eigen::Map<const Matrix> t) { n += t.size(); }));
  return n;
}

double& DenoiserParams::scalar(std::size_t flat_index) {
  double* found = nullptr;
  std::size_t offset = 0;
  visit(Visitor([&](const std::string&, Eigen::Map<Matrix> t) {
    const auto n = static_cast<std::size_t>(t.size());
    if (!found && flat_index < offset + n) found = t.data() + (flat_index - offset);
    offset += n;
  }));
  require(found != nullptr, ErrorKind::InvalidArgument, "parameter index out of range");
  return *found;
}

double DenoiserParams::scalar(std::size_t flat_index) const {
  return const_cast<DenoiserParams&>(*this).scalar(flat_index);
}

DenoiserParams DenoiserParams::zeros_like() const {
  DenoiserParams z = *this;
  z.visit(Visitor([](const std::string&, Eigen::Map<Matrix> t) { t.setZero(); }));
  return z;
}

bool DenoiserParams::all_finite() const {
  bool ok = true;
  visit(ConstVisitor([&](const std::string&, Eigen::Map<const Matrix> t) { ok = ok && t.allFinite(); }));
  return ok;
}

DenoiserParams init_params(const DenoiserConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto make = [&](int in, int out) { return xavier_linear(in, out, rng); };
  const auto style = xavier_linear(config.subject_count, config.hidden_dim, rng).weight;
  return build_params(config, make, style);
}

DenoiserParams zero_params(const DenoiserConfig& config) {
  config.validate();
  return build_params(config, zero_linear, Matrix::Zero(config.subject_count, config.hidden_dim));
}

void check_params(const DenoiserConfig& config, const DenoiserParams& params) {
  config.validate();
  const auto expected = zero_params(config);
  require(expected.blocks.size() == params.blocks.size(), ErrorKind::Incompatible,
          "checkpoint block count differs from config");
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> want;
  expected.visit(DenoiserParams::ConstVisitor(
      [&](const std::string& name, Eigen::Map<const Matrix> t) { want.push_back({name, {t.rows(), t.cols()}}); }));
  std::size_t i = 0;
  params.visit(DenoiserParams::ConstVisitor([&](const std::string& name, Eigen::Map<const Matrix> t) {
    check_shape(name, t.rows(), t.cols(), want[i].second.first, want[i].second.second);
    ++i;
  }));
  require(params.all_finite(), ErrorKind::Numeric, "parameters contain non-finite values");
}

RowVector step_frequency_encoding(int step, int channels) {
  require(channels > 0 && channels % 2 == 0, ErrorKind::InvalidArgument,
          "step encoding needs an even channel count");
  RowVector code(channels);
  for (int i = 0; i < channels / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / channels);
    code[2 * i] = std::sin(step * freq);
    code[2 * i + 1] = std::cos(step * freq);
  }
  return code;
}

RowVector step_embedding(int step, const DenoiserConfig& config, const DenoiserParams& params) {
  require(step >= 0 && step <= config.max_step, ErrorKind::InvalidArgument,
          "diffusion step " + std::to_string(step) + " outside [0, " + std::to_string(config.max_step) + "]");
  return step_frequency_encoding(step, config.hidden_dim) * params.step.weight + params.step.bias;
}

RowVector style_embedding(const StyleOneHot& style, const DenoiserParams& params) {
  style.validate();
  require(style.subject_count == params.style.rows(), ErrorKind::Shape,
          "style subject count differs from the style table");
  return params.style.row(style.subject_index);
}

RowVector style_embedding(const RowVector& style_weights, const DenoiserParams& params) {
  require(style_weights.size() == params.style.rows(), ErrorKind::Shape,
          "style weight length differs from the style table");
  return style_weights * params.style;
}

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCoeff * v * v * v)));
  });
}

Matrix audio_encode(const Matrix& features, const DenoiserParams& params) {
  require(features.rows() >= 1 && features.cols() * kKernel == params.audio_conv1.weight.rows(),
          ErrorKind::Shape, "audio feature dimension differs from the encoder");
  require(features.allFinite(), ErrorKind::Numeric, "audio features not finite");
  const Matrix h1 = gelu(affine(im2col(features), params.audio_conv1));
  const Matrix h2 = gelu(affine(im2col(h1), params.audio_conv2));
  return affine(h2, params.audio_proj);
}

namespace {

Matrix stack_conditions(const ConditionEncodings& enc) {
  Matrix c(2, enc.style.size());
  c.row(0) = enc.style;
  c.row(1) = enc.step;
  return c;
}

AttentionResult run_attention(const AttentionParams& a, const Matrix& q, const Matrix& k,
                              const Matrix& v, const Matrix& conditions, const BiasMatrix& bias,
                              int heads) {
  return biased_conditional_attention(q, k, v, conditions, bias, heads, a.output.weight, a.output.bias);
}

// Decoder core shared by denoise() and denoiser_forward().
Matrix decode(const Matrix& noisy, const ConditionEncodings& enc, const DenoiserConfig& config,
              const DenoiserParams& params, const VariantBiases& biases, DenoiserTrace& tr) {
  const auto T = noisy.rows();
  require(noisy.cols() == config.motion_dim(), ErrorKind::Shape, "noisy motion width differs from V*3");
  require(enc.audio.rows() == T && enc.audio.cols() == config.hidden_dim, ErrorKind::Shape,
          "audio encoding must be T x C");
  require(noisy.allFinite(), ErrorKind::Numeric, "noisy motion not finite");
  const bool joint = config.variant == AttentionVariant::FullySelfAttn;
  require(biases.self.rows() == (joint ? 2 * T + 2 : T), ErrorKind::Shape,
          "attention biases were built for a different length");
  tr.conditions = stack_conditions(enc);
  const Matrix no_conditions(0, config.hidden_dim);

  Matrix h = affine(noisy, params.input);
  if (joint) {
    Matrix z(2 * T + 2, config.hidden_dim);
    z.topRows(2) = tr.conditions;
    z.middleRows(2, T) = h;
    z.bottomRows(T) = enc.audio;
    h = std::move(z);
  }

  tr.blocks.resize(params.blocks.size());
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const auto& bp = params.blocks[b];
    auto& bt = tr.blocks[b];
    bt.h_in = h;
    bt.q_self = affine(h, bp.self_attn.query);
    bt.k_self = affine(h, bp.self_attn.key);
    bt.v_self = affine(h, bp.self_attn.value);
    const Matrix& self_conditions = biases.self_uses_conditions ? tr.conditions : no_conditions;
    bt.self_attn = run_attention(bp.self_attn, bt.q_self, bt.k_self, bt.v_self, self_conditions,
                                 biases.self, config.heads);
    h += bt.self_attn.output;
    bt.h_mid = h;
    if (!joint) {
      bt.q_cross = affine(h, bp.cross_attn.query);
      bt.k_cross = affine(enc.audio, bp.cross_attn.key);
      bt.v_cross = affine(enc.audio, bp.cross_attn.value);
      bt.cross_attn = run_attention(bp.cross_attn, bt.q_cross, bt.k_cross, bt.v_cross, tr.conditions,
                                    biases.cross, config.heads);
      h += bt.cross_attn.output;
    }
    bt.h_ff = h;
    bt.ff_pre = affine(h, bp.ff_in);
    bt.ff_act = gelu(bt.ff_pre);
    h += affine(bt.ff_act, bp.ff_out);
  }
  tr.h_final = joint ? Matrix(h.middleRows(2, T)) : h;
  return affine(tr.h_final, params.output);
}

}  // namespace

Matrix denoise(const Matrix& noisy, const ConditionEncodings& enc, const DenoiserConfig& config,
               const DenoiserParams& params) {
  return denoise(noisy, enc, config, params,
                 variant_biases(config.variant, static_cast<int>(noisy.rows()), config.fps));
}

Matrix denoise(const Matrix& noisy, const ConditionEncodings& enc, const DenoiserConfig& config,
               const DenoiserParams& params, const VariantBiases& biases) {
  DenoiserTrace tr;
  return decode(noisy, enc, config, params, biases, tr);
}

Matrix denoiser_forward(const DenoiserInput& input, const DenoiserConfig& config,
                        const DenoiserParams& params, DenoiserTrace* trace) {
  DenoiserTrace local;
  DenoiserTrace& tr = trace ? *trace : local;
  require(input.audio_features.rows() == input.noisy.rows(), ErrorKind::Shape,
          "audio and motion frame counts differ");
  require(input.noisy.rows() >= 1, ErrorKind::Shape, "need at least one frame");
  require(input.audio_features.allFinite(), ErrorKind::Numeric, "audio features not finite");
  if (trace) tr.input = input;

  tr.conv1_cols = im2col(input.audio_features);
  require(tr.conv1_cols.cols() == params.audio_conv1.weight.rows(), ErrorKind::Shape,
          "audio feature dimension differs from the encoder");
  tr.conv1_pre = affine(tr.conv1_cols, params.audio_conv1);
  tr.conv1_act = gelu(tr.conv1_pre);
  tr.conv2_cols = im2col(tr.conv1_act);
  tr.conv2_pre = affine(tr.conv2_cols, params.audio_conv2);
  tr.conv2_act = gelu(tr.conv2_pre);
  tr.enc.audio = affine(tr.conv2_act, params.audio_proj);
  tr.enc.style = style_embedding(input.style, params);
  tr.enc.step = step_embedding(input.step, config, params);
  tr.step_code = step_frequency_encoding(input.step, config.hidden_dim);
  tr.biases = variant_biases(config.variant, static_cast<int>(input.noisy.rows()), config.fps);
  return decode(input.noisy, tr.enc, config, params, tr.biases, tr);
}

void denoiser_backward(const DenoiserTrace& tr, const Matrix& d_output, const DenoiserConfig& config,
                       const DenoiserParams& params, DenoiserParams& g) {
  const auto T = tr.input.noisy.rows();
  const bool joint = config.variant == AttentionVariant::FullySelfAttn;
  const int C = config.hidden_dim;

  Matrix d_h_final = Matrix::Zero(T, C);
  affine_backward(tr.h_final, d_output, params.output, g.output, &d_h_final);

  Matrix d_h;
  if (joint) {
    d_h = Matrix::Zero(2 * T + 2, C);
    d_h.middleRows(2, T) = d_h_final;
  } else {
    d_h = std::move(d_h_final);
  }
  Matrix d_conditions = Matrix::Zero(2, C);
  Matrix d_audio = Matrix::Zero(T, C);

  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const auto& bp = params.blocks[bi];
    auto& bg = g.blocks[bi];
    const auto& bt = tr.blocks[bi];

    // Feedforward residual.
    Matrix d_act = Matrix::Zero(bt.ff_act.rows(), bt.ff_act.cols());
    affine_backward(bt.ff_act, d_h, bp.ff_out, bg.ff_out, &d_act);
    const Matrix d_pre = d_act.cwiseProduct(gelu_grad(bt.ff_pre));
    affine_backward(bt.h_ff, d_pre, bp.ff_in, bg.ff_in, &d_h);

    if (!joint) {
      const auto ga = biased_conditional_attention_backward(
          bt.q_cross, bt.k_cross, bt.v_cross, tr.conditions, config.heads, bp.cross_attn.output.weight,
          bt.cross_attn, d_h);
      bg.cross_attn.output.weight += ga.d_out_weight;
      bg.cross_attn.output.bias += ga.d_out_bias;
      d_conditions += ga.d_conditions;
      affine_backward(bt.h_mid, ga.d_q, bp.cross_attn.query, bg.cross_attn.query, &d_h);
      affine_backward(tr.enc.audio, ga.d_keys, bp.cross_attn.key, bg.cross_attn.key, &d_audio);
      affine_backward(tr.enc.audio, ga.d_values, bp.cross_attn.value, bg.cross_attn.value, &d_audio);
    }

    const Matrix no_conditions(0, C);
    const Matrix& self_conditions = tr.biases.self_uses_conditions ? tr.conditions : no_conditions;
    const auto gs = biased_conditional_attention_backward(bt.q_self, bt.k_self, bt.v_self, self_conditions,
                                                          config.heads, bp.self_attn.output.weight,
                                                          bt.self_attn, d_h);
    bg.self_attn.output.weight += gs.d_out_weight;
    bg.self_attn.output.bias += gs.d_out_bias;
    if (tr.biases.self_uses_conditions) d_conditions += gs.d_conditions;
    affine_backward(bt.h_in, gs.d_q, bp.self_attn.query, bg.self_attn.query, &d_h);
    affine_backward(bt.h_in, gs.d_keys, bp.self_attn.key, bg.self_attn.key, &d_h);
    affine_backward(bt.h_in, gs.d_values, bp.self_attn.value, bg.self_attn.value, &d_h);
  }

  Matrix d_motion_tokens;
  if (joint) {
    d_conditions += d_h.topRows(2);
    d_motion_tokens = d_h.middleRows(2, T);
    d_audio += d_h.bottomRows(T);
  } else {
    d_motion_tokens = std::move(d_h);
  }
  affine_backward(tr.input.noisy, d_motion_tokens, params.input, g.input, nullptr);

  // Style and step encoders.
  g.style.noalias() += tr.input.style.transpose() * d_conditions.row(0);
  g.step.weight.noalias() += tr.step_code.transpose() * d_conditions.row(1);
  g.step.bias += d_conditions.row(1);

  // Audio encoder.
  Matrix d_conv2_act = Matrix::Zero(T, C);
  affine_backward(tr.conv2_act, d_audio, params.audio_proj, g.audio_proj, &d_conv2_act);
  const Matrix d_conv2_pre = d_conv2_act.cwiseProduct(gelu_grad(tr.conv2_pre));
  Matrix d_conv2_cols = Matrix::Zero(T, tr.conv2_cols.cols());
  affine_backward(tr.conv2_cols, d_conv2_pre, params.audio_conv2, g.audio_conv2, &d_conv2_cols);
  const Matrix d_conv1_act = col2im(d_conv2_cols, C);
  const Matrix d_conv1_pre = d_conv1_act.cwiseProduct(gelu_grad(tr.conv1_pre));
  affine_backward(tr.conv1_cols, d_conv1_pre, params.audio_conv1, g.audio_conv1, nullptr);
}

}  // namespace diffspk
