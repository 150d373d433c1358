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
#include "gradcheck.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>

using namespace diffspk;

namespace {

double naive_rec(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < a.rows(); ++t)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += (a(t, j) - b(t, j)) * (a(t, j) - b(t, j));
  return s / static_cast<double>(a.rows());
}

double naive_vel(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index t = 1; t < a.rows(); ++t)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double da = a(t - 1, j) - a(t, j);
      const double db = b(t - 1, j) - b(t, j);
      s += (da - db) * (da - db);
    }
  return s / static_cast<double>(a.rows());
}

DatasetSplit tiny_split(int items, int frames, std::uint64_t seed) {
  SyntheticDatasetSpec spec;
  spec.vertex_count = 3;
  spec.feature_dim = 4;
  spec.subject_count = 3;
  spec.sequence_count = items;
  spec.min_frames = spec.max_frames = frames;
  spec.rng_seed = seed;
  DatasetSplit s;
  s.train = generate_dataset(spec).items;
  return s;
}

DenoiserConfig tiny_model() {
  auto c = gradcheck::tiny_config();
  c.fps = 25;
  return c;
}

}  // namespace

TEST_CASE("rec loss of a single perturbed entry is delta squared over T") {
  const int T = 7;
  Matrix a = Matrix::Zero(T, 9), b = a;
  b(3, 4) = 0.25;
  CHECK(rec_loss(a, b) == doctest::Approx(0.0625 / T).epsilon(1e-15));
  CHECK(rec_loss(a, a) == 0.0);
}

TEST_CASE("losses match naive summation oracles") {
  Rng rng(1);
  for (int T : {1, 2, 4, 5, 30}) {
    const Matrix a = standard_normal(T, 9, rng);
    const Matrix b = standard_normal(T, 9, rng);
    CHECK(std::abs(rec_loss(a, b) - naive_rec(a, b)) < 1e-7);
    CHECK(std::abs(vel_loss(a, b) - naive_vel(a, b)) < 1e-7);
    const auto l = total_loss(a, b, 1.0, 1.0);
    CHECK(std::abs(l.total - (naive_rec(a, b) + naive_vel(a, b))) < 1e-9);
    CHECK(total_loss(a, b, 1.0, 0.0).total == rec_loss(a, b));
    CHECK(total_loss(a, a, 1.0, 1.0).total == 0.0);
    CHECK(l.rec >= 0.0);
    CHECK(l.vel >= 0.0);
  }
}

TEST_CASE("velocity loss ignores a constant per-sequence offset") {
  Rng rng(2);
  const Matrix a = standard_normal(12, 6, rng);
  const RowVector shift = standard_normal(1, 6, rng);
  const Matrix b = a.rowwise() + shift;
  CHECK(vel_loss(a, b) < 1e-24);
  CHECK(vel_loss(a, a) == 0.0);
}

TEST_CASE("velocity loss is zero for a single frame and shapes must agree") {
  CHECK(vel_loss(Matrix::Ones(1, 3), Matrix::Zero(1, 3)) == 0.0);
  CHECK_THROWS_AS(rec_loss(Matrix::Zero(2, 3), Matrix::Zero(3, 3)), Error);
  CHECK_THROWS_AS(vel_loss(Matrix::Zero(2, 3), Matrix::Zero(2, 6)), Error);
}

TEST_CASE("loss gradient with respect to the prediction matches central differences") {
  Rng rng(3);
  const Matrix a = standard_normal(6, 6, rng);
  Matrix b = standard_normal(6, 6, rng);
  const Matrix g = total_loss_grad(a, b, 0.8, 1.3);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double keep = b.data()[i];
    b.data()[i] = keep + h;
    const double up = total_loss(a, b, 0.8, 1.3).total;
    b.data()[i] = keep - h;
    const double down = total_loss(a, b, 0.8, 1.3).total;
    b.data()[i] = keep;
    const double numeric = (up - down) / (2 * h);
    CHECK(std::abs(numeric - g.data()[i]) / std::max({std::abs(numeric), std::abs(g.data()[i]), 1e-6}) < 1e-3);
  }
}

TEST_CASE("AdamW first step moves each parameter by lr times the sign of its gradient") {
  const auto cfg = tiny_model();
  auto params = init_params(cfg, 4);
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.weight_decay = 0.0;
  tc.epsilon = 1e-12;
  AdamW opt(params, tc);
  auto grads = params.zeros_like();
  for (std::size_t i = 0; i < grads.scalar_count(); ++i) grads.scalar(i) = (i % 3 == 0) ? -2.0 : 0.5;
  const auto before = params;
  opt.step(params, grads);
  CHECK(opt.iterations() == 1);
  for (std::size_t i = 0; i < params.scalar_count(); i += 7) {
    const double expected = before.scalar(i) - 0.01 * (grads.scalar(i) > 0 ? 1.0 : -1.0);
    CHECK(params.scalar(i) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("AdamW weight decay is decoupled from the gradient moments") {
  const auto cfg = tiny_model();
  auto params = init_params(cfg, 5);
  TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.weight_decay = 0.5;
  AdamW opt(params, tc);
  const auto before = params;
  opt.step(params, params.zeros_like());
  for (std::size_t i = 0; i < params.scalar_count(); i += 5)
    CHECK(params.scalar(i) == doctest::Approx(before.scalar(i) * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const auto split = tiny_split(3, 6, 1);
  const auto cfg = tiny_model();
  const auto schedule = make_schedule(cfg.max_step, ScheduleKind::Linear);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 2;
  tc.steps = 3;
  const auto start = init_params(cfg, 6);
  const auto out = train(split.train, start, schedule, cfg, tc);
  for (std::size_t i = 0; i < start.scalar_count(); ++i) CHECK(out.scalar(i) == start.scalar(i));
}

TEST_CASE("unconditional probability one drops audio for every item") {
  const auto split = tiny_split(4, 6, 2);
  const auto cfg = tiny_model();
  const auto schedule = make_schedule(cfg.max_step, ScheduleKind::Linear);
  TrainConfig tc;
  tc.uncond_prob = 1.0;
  auto params = init_params(cfg, 7);
  AdamW opt(params, tc);
  Rng rng(1);
  for (int k = 0; k < 5; ++k) {
    const auto stats = train_step(split.train, params, opt, schedule, cfg, tc, rng);
    CHECK(stats.unconditional_items == 4);
  }
  tc.uncond_prob = 0.0;
  AdamW opt2(params, tc);
  CHECK(train_step(split.train, params, opt2, schedule, cfg, tc, rng).unconditional_items == 0);
}

TEST_CASE("diffusion steps are sampled per item over the full range") {
  const auto split = tiny_split(8, 5, 3);
  const auto cfg = tiny_model();
  const auto schedule = make_schedule(cfg.max_step, ScheduleKind::Linear);
  TrainConfig tc;
  auto params = init_params(cfg, 8);
  AdamW opt(params, tc);
  Rng rng(2);
  std::vector<int> seen(cfg.max_step + 1, 0);
  for (int k = 0; k < 30; ++k)
    for (int n : train_step(split.train, params, opt, schedule, cfg, tc, rng).sampled_steps) {
      REQUIRE(n >= 1);
      REQUIRE(n <= cfg.max_step);
      ++seen[n];
    }
  for (int n = 1; n <= cfg.max_step; ++n) CHECK(seen[n] > 0);
  CHECK(seen[0] == 0);
}

TEST_CASE("non-finite inputs abort the training step") {
  auto split = tiny_split(1, 5, 4);
  split.train[0].motion.offsets(2, 1) = std::numeric_limits<float>::quiet_NaN();
  const auto cfg = tiny_model();
  const auto schedule = make_schedule(cfg.max_step, ScheduleKind::Linear);
  TrainConfig tc;
  auto params = init_params(cfg, 9);
  AdamW opt(params, tc);
  Rng rng(3);
  try {
    train_step(split.train, params, opt, schedule, cfg, tc, rng);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("training run reproduces the recorded loss trace") {
  const auto split = tiny_split(2, 6, 5);
  const auto cfg = tiny_model();
  const auto schedule = make_schedule(cfg.max_step, ScheduleKind::Linear);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.steps = 5;
  tc.learning_rate = 1e-2;
  tc.seed = 11;
  std::vector<double> trace;
  train(split.train, init_params(cfg, 12), schedule, cfg, tc,
        [&](const TrainLogRow& row, const DenoiserParams&) { trace.push_back(row.loss.total); });
  REQUIRE(trace.size() == 5);

  const std::filesystem::path golden = std::filesystem::path(DSPK_TEST_DATA_DIR) / "golden_train_trace.txt";
  if (std::getenv("DSPK_REGENERATE_GOLDEN")) {
    std::ofstream out(golden);
    out << std::setprecision(17);
    for (double v : trace) out << v << "\n";
  }
  std::ifstream in(golden);
  REQUIRE_MESSAGE(in.good(), "missing fixture ", golden.string());
  std::vector<double> recorded;
  for (double v; in >> v;) recorded.push_back(v);
  REQUIRE(recorded.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i)
    CHECK(trace[i] == doctest::Approx(recorded[i]).epsilon(1e-9));
}
