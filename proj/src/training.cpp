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

#include "diffspk/training.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace diffspk {

namespace {

void check_pair(const Matrix& target, const Matrix& pred) {
  require(target.rows() == pred.rows() && target.cols() == pred.cols(), ErrorKind::Shape,
          "loss inputs differ in shape");
  require(target.rows() >= 1, ErrorKind::Shape, "loss needs at least one frame");
}

// Frame differences x_{t-1} - x_t for t = 2..T.
Matrix backward_differences(const Matrix& x) {
  return x.topRows(x.rows() - 1) - x.bottomRows(x.rows() - 1);
}

}  // namespace

void TrainConfig::validate() const {
  require(batch_size > 0 && steps >= 0, ErrorKind::Config, "train.batch_size and train.steps must be positive");
  require(learning_rate >= 0.0 && weight_decay >= 0.0, ErrorKind::Config,
          "train.learning_rate and train.weight_decay must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0, ErrorKind::Config,
          "invalid optimizer moments");
  require(lambda_rec >= 0.0 && lambda_vel >= 0.0, ErrorKind::Config, "loss weights must be non-negative");
  require(uncond_prob >= 0.0 && uncond_prob <= 1.0, ErrorKind::Config, "train.uncond_prob must lie in [0, 1]");
  require(checkpoint_every >= 0, ErrorKind::Config, "train.checkpoint_every must be >= 0");
}

double rec_loss(const Matrix& target, const Matrix& pred) {
  check_pair(target, pred);
  return (target - pred).squaredNorm() / static_cast<double>(target.rows());
}

double vel_loss(const Matrix& target, const Matrix& pred) {
  check_pair(target, pred);
  if (target.rows() < 2) {
    std::clog << "warning: velocity loss needs T >= 2, using 0\n";
    return 0.0;
  }
  return (backward_differences(target) - backward_differences(pred)).squaredNorm() /
         static_cast<double>(target.rows());
}

LossTerms total_loss(const Matrix& target, const Matrix& pred, double lambda_rec, double lambda_vel) {
  LossTerms l;
  l.rec = rec_loss(target, pred);
  l.vel = vel_loss(target, pred);
  l.total = lambda_rec * l.rec + lambda_vel * l.vel;
  return l;
}

Matrix total_loss_grad(const Matrix& target, const Matrix& pred, double lambda_rec, double lambda_vel) {
  check_pair(target, pred);
  const auto T = target.rows();
  const double inv_t = 1.0 / static_cast<double>(T);
  Matrix g = (-2.0 * lambda_rec * inv_t) * (target - pred);
  if (T >= 2) {
    const Matrix r = backward_differences(target) - backward_differences(pred);
    // r_t depends on -pred_{t-1} and +pred_t.
    g.topRows(T - 1) -= (2.0 * lambda_vel * inv_t) * r;
    g.bottomRows(T - 1) += (2.0 * lambda_vel * inv_t) * r;
  }
  return g;
}

AdamW::AdamW(const DenoiserParams& like, const TrainConfig& config)
    : config_(config), first_moment_(like.zeros_like()), second_moment_(like.zeros_like()) {
  config_.validate();
}

void AdamW::step(DenoiserParams& params, const DenoiserParams& grads) {
  ++iterations_;
  const double lr = config_.learning_rate;
  const double bc1 = 1.0 - std::pow(config_.beta1, iterations_);
  const double bc2 = 1.0 - std::pow(config_.beta2, iterations_);
  std::vector<Eigen::Map<const Matrix>> g;
  grads.visit(DenoiserParams::ConstVisitor(
      [&](const std::string&, Eigen::Map<const Matrix> t) { g.push_back(t); }));
  std::vector<Eigen::Map<Matrix>> m, v;
  first_moment_.visit(DenoiserParams::Visitor([&](const std::string&, Eigen::Map<Matrix> t) { m.push_back(t); }));
  second_moment_.visit(DenoiserParams::Visitor([&](const std::string&, Eigen::Map<Matrix> t) { v.push_back(t); }));
  std::size_t i = 0;
  params.visit(DenoiserParams::Visitor([&](const std::string&, Eigen::Map<Matrix> p) {
    m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
    v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i].cwiseAbs2();
    const Matrix update =
        (m[i] / bc1).array() / ((v[i] / bc2).array().sqrt() + config_.epsilon) + config_.weight_decay * p.array();
    p -= lr * update;
    ++i;
  }));
}

DenoiserInput make_input(const Matrix& noisy, const AudioFeatureSequence& audio, const StyleOneHot& style,
                         int step, bool conditional) {
  DenoiserInput in;
  in.noisy = noisy;
  in.audio_features = conditional ? Matrix(audio.features.cast<double>())
                                  : Matrix(Matrix::Zero(audio.frames(), audio.feature_dim()));
  in.style = style.dense();
  in.step = step;
  return in;
}

TrainStepStats train_step(std::span<const DatasetItem> batch, DenoiserParams& params, AdamW& optimizer,
                          const DiffusionSchedule& schedule, const DenoiserConfig& model,
                          const TrainConfig& config, Rng& rng) {
  require(!batch.empty(), ErrorKind::InvalidArgument, "empty training batch");
  std::uniform_int_distribution<int> step_dist(1, schedule.steps);
  std::bernoulli_distribution drop_audio(config.uncond_prob);
  DenoiserParams grads = params.zeros_like();
  TrainStepStats stats;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& item = batch[b];
    const Matrix clean = item.motion.offsets.cast<double>();
    const int n = step_dist(rng);
    const Matrix noise = standard_normal(clean.rows(), clean.cols(), rng);
    const bool unconditional = drop_audio(rng);
    stats.sampled_steps.push_back(n);
    if (unconditional) ++stats.unconditional_items;

    DenoiserTrace trace;
    const auto input = make_input(forward_noise(clean, n, noise, schedule), item.audio, item.style, n,
                                  !unconditional);
    const Matrix pred = denoiser_forward(input, model, params, &trace);
    const auto loss = total_loss(clean, pred, config.lambda_rec, config.lambda_vel);
    if (!std::isfinite(loss.total)) {
      std::ostringstream msg;
      msg << "non-finite loss (rec " << loss.rec << ", vel " << loss.vel << ") for batch item " << b
          << " at diffusion step " << n << ", T = " << clean.rows();
      fail(ErrorKind::Numeric, msg.str());
    }
    stats.loss.total += inv_batch * loss.total;
    stats.loss.rec += inv_batch * loss.rec;
    stats.loss.vel += inv_batch * loss.vel;
    const Matrix d_pred = inv_batch * total_loss_grad(clean, pred, config.lambda_rec, config.lambda_vel);
    denoiser_backward(trace, d_pred, model, params, grads);
  }
  optimizer.step(params, grads);
  require(params.all_finite(), ErrorKind::Numeric, "parameters became non-finite after the optimizer step");
  return stats;
}

double validation_rec_loss(std::span<const DatasetItem> items, const DenoiserParams& params,
                           const DiffusionSchedule& schedule, const DenoiserConfig& model,
                           std::uint64_t seed) {
  require(!items.empty(), ErrorKind::InvalidArgument, "empty validation set");
  Rng rng(seed);
  std::uniform_int_distribution<int> step_dist(1, schedule.steps);
  double total = 0.0;
  for (const auto& item : items) {
    const Matrix clean = item.motion.offsets.cast<double>();
    const int n = step_dist(rng);
    const Matrix noise = standard_normal(clean.rows(), clean.cols(), rng);
    const auto input = make_input(forward_noise(clean, n, noise, schedule), item.audio, item.style, n, true);
    total += rec_loss(clean, denoiser_forward(input, model, params));
  }
  return total / static_cast<double>(items.size());
}

DenoiserParams train(std::span<const DatasetItem> items, DenoiserParams params,
                     const DiffusionSchedule& schedule, const DenoiserConfig& model,
                     const TrainConfig& config, const TrainCallback& on_step) {
  config.validate();
  check_params(model, params);
  require(!items.empty(), ErrorKind::Data, "no training sequences");
  Rng rng(config.seed);
  AdamW optimizer(params, config);
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  std::vector<DatasetItem> batch(config.batch_size);
  for (int step = 1; step <= config.steps; ++step) {
    for (auto& slot : batch) slot = items[pick(rng)];
    const auto stats = train_step(batch, params, optimizer, schedule, model, config, rng);
    if (on_step) on_step(TrainLogRow{step, stats.loss}, params);
  }
  return params;
}

}  // namespace diffspk
