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

#pragma once

#include "diffspk/data.hpp"
#include "diffspk/denoiser.hpp"
#include "diffspk/diffusion.hpp"

#include <functional>
#include <span>
#include <vector>

namespace diffspk {

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int steps = 300;
  double lambda_rec = 1.0;
  double lambda_vel = 1.0;
  double uncond_prob = 0.1;
  std::uint64_t seed = 1;
  int checkpoint_every = 100;

  void validate() const;
};

struct LossTerms {
  double total = 0.0;
  double rec = 0.0;
  double vel = 0.0;
};

// (1/T) sum_t ||target_t - pred_t||^2
double rec_loss(const Matrix& target, const Matrix& pred);

// (1/T) sum_{t>=2} ||(target_{t-1} - target_t) - (pred_{t-1} - pred_t)||^2; 0 when T < 2.
double vel_loss(const Matrix& target, const Matrix& pred);

LossTerms total_loss(const Matrix& target, const Matrix& pred, double lambda_rec, double lambda_vel);

// d total_loss / d pred.
Matrix total_loss_grad(const Matrix& target, const Matrix& pred, double lambda_rec, double lambda_vel);

// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const DenoiserParams& like, const TrainConfig& config);

  void step(DenoiserParams& params, const DenoiserParams& grads);
  int iterations() const { return iterations_; }

 private:
  TrainConfig config_;
  DenoiserParams first_moment_;
  DenoiserParams second_moment_;
  int iterations_ = 0;
};

struct TrainStepStats {
  LossTerms loss;  // mean over the batch
  int unconditional_items = 0;
  std::vector<int> sampled_steps;
};

// One optimizer step: per item draws n in 1..N and Gaussian noise, drops the
// audio with probability uncond_prob, and backpropagates the total loss
// averaged over the batch.
TrainStepStats train_step(std::span<const DatasetItem> batch, DenoiserParams& params, AdamW& optimizer,
                          const DiffusionSchedule& schedule, const DenoiserConfig& model,
                          const TrainConfig& config, Rng& rng);

// Mean reconstruction loss over items at fixed-seed steps and noise, audio kept.
double validation_rec_loss(std::span<const DatasetItem> items, const DenoiserParams& params,
                           const DiffusionSchedule& schedule, const DenoiserConfig& model,
                           std::uint64_t seed);

struct TrainLogRow {
  int step = 0;
  LossTerms loss;
};

using TrainCallback = std::function<void(const TrainLogRow& row, const DenoiserParams& params)>;

// Runs config.steps optimizer steps over batches drawn uniformly from items.
DenoiserParams train(std::span<const DatasetItem> items, DenoiserParams params,
                     const DiffusionSchedule& schedule, const DenoiserConfig& model,
                     const TrainConfig& config, const TrainCallback& on_step = {});

DenoiserInput make_input(const Matrix& noisy, const AudioFeatureSequence& audio, const StyleOneHot& style,
                         int step, bool conditional);

}  // namespace diffspk
