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

#include "diffspk/eval.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>

using namespace diffspk;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("LVE of a single lip vertex offset in one frame is delta over F") {
  const int F = 8;
  const std::vector<int> lips{1, 2};
  Matrix gt = Matrix::Zero(F, 12), pred = gt;
  pred(5, 3 * 2 + 1) = 0.4;
  CHECK(lip_vertex_error(pred, gt, lips) == doctest::Approx(0.4 / F).epsilon(1e-14));
  CHECK(lip_vertex_error(gt, gt, lips) == 0.0);
}

TEST_CASE("LVE and FDD match brute-force oracles") {
  std::mt19937_64 rng(1);
  const std::vector<int> lips{0, 2, 5}, upper{1, 3, 4};
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix gt = oracle::random_matrix(6, 18, rng);
    const Matrix pred = oracle::random_matrix(6, 18, rng);
    CHECK(std::abs(lip_vertex_error(pred, gt, lips) - oracle::lve(pred, gt, lips)) < 1e-7);
    CHECK(std::abs(facial_dynamics_deviation(pred, gt, upper) - oracle::fdd(pred, gt, upper)) < 1e-6);
  }
}

TEST_CASE("FDD of a static prediction is the mean ground-truth deviation") {
  std::mt19937_64 rng(2);
  const std::vector<int> upper{0, 3};
  const Matrix gt = oracle::random_matrix(20, 12, rng);
  double want = 0.0;
  for (int v : upper) {
    std::vector<double> norms;
    for (int t = 0; t < gt.rows(); ++t) norms.push_back(gt.block(t, 3 * v, 1, 3).norm());
    double m = 0.0, s = 0.0;
    for (double x : norms) m += x / norms.size();
    for (double x : norms) s += (x - m) * (x - m) / norms.size();
    want += std::sqrt(s) / upper.size();
  }
  CHECK(facial_dynamics_deviation(Matrix::Zero(20, 12), gt, upper) == doctest::Approx(want).epsilon(1e-12));
  CHECK(facial_dynamics_deviation(gt, gt, upper) == 0.0);
}

TEST_CASE("metrics ignore errors outside their masks and scale linearly") {
  std::mt19937_64 rng(3);
  const std::vector<int> lips{0, 1}, upper{2, 3};
  const Matrix gt = oracle::random_matrix(9, 15, rng);
  Matrix pred = gt;
  pred.col(3 * 4 + 2).array() += 1.5;
  CHECK(lip_vertex_error(pred, gt, lips) == 0.0);
  CHECK(facial_dynamics_deviation(pred, gt, upper) == 0.0);
  const Matrix p2 = oracle::random_matrix(9, 15, rng);
  for (double c : {0.5, 2.0, 7.0})
    CHECK(lip_vertex_error(c * p2, c * gt, lips) == doctest::Approx(c * lip_vertex_error(p2, gt, lips)).epsilon(1e-12));
}

TEST_CASE("metric preconditions") {
  const Matrix a = Matrix::Zero(4, 9);
  CHECK_THROWS_AS(lip_vertex_error(a, a, std::vector<int>{}), Error);
  CHECK_THROWS_AS(facial_dynamics_deviation(a, a, std::vector<int>{}), Error);
  CHECK_THROWS_AS(facial_dynamics_deviation(Matrix::Zero(1, 9), Matrix::Zero(1, 9), std::vector<int>{0}), Error);
  CHECK_THROWS_AS(lip_vertex_error(a, Matrix::Zero(5, 9), std::vector<int>{0}), Error);
  CHECK_THROWS_AS(lip_vertex_error(a, a, std::vector<int>{3}), Error);
}

TEST_CASE("std map of zero motion is zero") {
  const std::vector<Matrix> seqs{Matrix::Zero(10, 12), Matrix::Zero(7, 12)};
  for (double s : motion_std_map(seqs)) CHECK(s == 0.0);
}

TEST_CASE("std map of a sinusoid is its RMS") {
  const double A = 0.8;
  const double pi = std::acos(-1.0);
  for (int T : {500, 1000, 1237}) {
    Matrix m = Matrix::Zero(T, 3);
    for (int t = 0; t < T; ++t) m(t, 1) = A * std::sin(2 * pi * t / 37.3);
    const std::vector<Matrix> seqs{m};
    CHECK(motion_std_map(seqs)[0] == doctest::Approx(A / std::sqrt(2.0)).epsilon(0.02));
  }
}

TEST_CASE("std map is invariant to duplicating sequences") {
  std::mt19937_64 rng(4);
  const Matrix m = oracle::random_matrix(30, 9, rng);
  const std::vector<Matrix> one{m}, two{m, m};
  const auto a = motion_std_map(one), b = motion_std_map(two);
  for (std::size_t v = 0; v < a.size(); ++v) CHECK(a[v] == doctest::Approx(b[v]).epsilon(1e-12));
}

TEST_CASE("summaries use the Student t quantile") {
  const std::vector<double> one{3.5};
  CHECK(summarize(one).mean == 3.5);
  CHECK(!summarize(one).ci_half_width.has_value());
  const std::vector<double> three{1.0, 2.0, 4.0};
  const auto s = summarize(three);
  CHECK(s.mean == doctest::Approx(7.0 / 3.0));
  const double sd = std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                               (4 - 7.0 / 3) * (4 - 7.0 / 3)) / 2.0);
  REQUIRE(s.ci_half_width.has_value());
  CHECK(*s.ci_half_width == doctest::Approx(4.302652729911275 * sd / std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("scoring ground truth against itself gives zero") {
  SyntheticDatasetSpec spec;
  spec.sequence_count = 4;
  const auto ds = generate_dataset(spec);
  std::vector<MotionSequence> preds;
  for (const auto& item : ds.items) preds.push_back(item.motion);
  const auto r = score_predictions(ds.items, preds, ds.mesh);
  CHECK(r.lve.mean == 0.0);
  CHECK(r.fdd.mean == 0.0);
  CHECK(r.upper_std.mean > 0.0);
  CHECK(r.per_vertex_std.size() == 40);
}

TEST_CASE("report and std map CSV layouts") {
  const auto dir = oracle::temp_dir("eval_csv");
  MetricReport a;
  a.variant = "full";
  a.guidance = 0.5;
  a.seeds = {1};
  a.lve = {0.25, std::nullopt};
  a.fdd = {0.125, std::nullopt};
  a.upper_std = {0.5, std::nullopt};
  MetricReport b = a;
  b.seeds = {1, 2};
  b.lve.ci_half_width = 0.01;
  b.fdd.ci_half_width = 0.02;
  b.upper_std.ci_half_width = 0.03;
  const std::vector<MetricReport> rows{a, b};
  write_report_csv(dir / "r.csv", rows);
  const auto lines = read_lines(dir / "r.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "variant,guidance,seeds,lve_mean,lve_ci95,fdd_mean,fdd_ci95,upper_std_mean,upper_std_ci95");
  CHECK(lines[1] == "full,0.5,1,0.25,NA,0.125,NA,0.5,NA");
  CHECK(lines[2] == "full,0.5,2,0.25,0.01,0.125,0.02,0.5,0.03");

  SyntheticDatasetSpec spec;
  Rng rng(1);
  const auto mesh = make_template(spec, rng);
  write_std_map_csv(dir / "s.csv", std::vector<double>(40, 0.5), &mesh);
  const auto s = read_lines(dir / "s.csv");
  REQUIRE(s.size() == 41);
  CHECK(s[0] == "vertex,region,std");
}

TEST_CASE("small ablation trains missing checkpoints and repeats deterministically") {
  const auto dir = oracle::temp_dir("eval_ablation");
  SyntheticDatasetSpec spec;
  spec.vertex_count = 12;
  spec.feature_dim = 4;
  spec.subject_count = 2;
  spec.sequence_count = 8;
  spec.min_frames = 10;
  spec.max_frames = 14;
  const auto ds = generate_dataset(spec);
  const auto split = split_dataset(ds);

  AblationOptions opt;
  opt.model.hidden_dim = 8;
  opt.model.ff_dim = 16;
  opt.model.heads = 2;
  opt.model.vertex_count = 12;
  opt.model.feature_dim = 4;
  opt.model.subject_count = 2;
  opt.model.fps = 25;
  opt.model.max_step = 10;
  opt.train.steps = 3;
  opt.train.batch_size = 2;
  opt.sampler = SamplerConfig{2, 0.0, 0.0};
  opt.checkpoint_dir = dir;

  const std::vector<AttentionVariant> variants{AttentionVariant::Full, AttentionVariant::NoCrossBias};
  const std::vector<double> guidance{0.0, 0.0};
  const std::vector<std::uint64_t> seeds{5};
  const auto rows = run_ablation(split, ds.mesh, variants, guidance, seeds, opt);
  REQUIRE(rows.size() == 4);
  CHECK(std::filesystem::exists(ablation_checkpoint_path(dir, AttentionVariant::Full)));
  CHECK(std::filesystem::exists(ablation_checkpoint_path(dir, AttentionVariant::NoCrossBias)));
  for (const auto& r : rows) {
    CHECK(!r.lve.ci_half_width.has_value());
    CHECK(r.lve.mean >= 0.0);
  }
  CHECK(rows[0].variant != rows[2].variant);
  CHECK(rows[0].lve.mean == rows[1].lve.mean);
  CHECK(rows[0].fdd.mean == rows[1].fdd.mean);
  CHECK(rows[0].per_vertex_std == rows[1].per_vertex_std);

  // A second run reuses the stored checkpoints even without training permission.
  opt.train_missing = false;
  const auto again = run_ablation(split, ds.mesh, variants, guidance, seeds, opt);
  CHECK(again[2].lve.mean == rows[2].lve.mean);

  const std::vector<AttentionVariant> other{AttentionVariant::NoSelfBias};
  CHECK_THROWS_AS(run_ablation(split, ds.mesh, other, guidance, seeds, opt), Error);

  opt.model.hidden_dim = 16;
  try {
    run_ablation(split, ds.mesh, variants, guidance, seeds, opt);
    FAIL("expected an incompatible checkpoint error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Incompatible);
  }
}
