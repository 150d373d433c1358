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

#include "diffspk/pipeline.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>

namespace diffspk {

namespace fs = std::filesystem;

namespace {

void check_metric_inputs(const Matrix& pred, const Matrix& gt, std::span<const int> mask) {
  require(pred.rows() == gt.rows() && pred.cols() == gt.cols(), ErrorKind::Shape,
          "prediction and ground truth differ in shape");
  require(pred.cols() % 3 == 0 && pred.rows() >= 1, ErrorKind::Shape, "motion must be T x V*3");
  require(!mask.empty(), ErrorKind::InvalidArgument, "vertex mask is empty");
  for (int v : mask)
    require(v >= 0 && 3 * v < pred.cols(), ErrorKind::InvalidArgument,
            "mask vertex " + std::to_string(v) + " out of range");
}

double vertex_norm(const Matrix& m, Eigen::Index t, int v) { return m.block(t, 3 * v, 1, 3).norm(); }

// Population standard deviation of a vertex's displacement norm over time.
double norm_std(const Matrix& m, int v) {
  const auto T = m.rows();
  double mean = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) mean += vertex_norm(m, t, v);
  mean /= static_cast<double>(T);
  double var = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double d = vertex_norm(m, t, v) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(T));
}

double mean_over(const std::vector<double>& values, const std::vector<int>& idx) {
  double s = 0.0;
  for (int v : idx) s += values[v];
  return s / static_cast<double>(idx.size());
}

}  // namespace

double lip_vertex_error(const Matrix& pred, const Matrix& gt, std::span<const int> lip_mask) {
  check_metric_inputs(pred, gt, lip_mask);
  const Matrix diff = pred - gt;
  double total = 0.0;
  for (Eigen::Index t = 0; t < diff.rows(); ++t) {
    double worst = 0.0;
    for (int v : lip_mask) worst = std::max(worst, vertex_norm(diff, t, v));
    total += worst;
  }
  return total / static_cast<double>(diff.rows());
}

double facial_dynamics_deviation(const Matrix& pred, const Matrix& gt, std::span<const int> upper_mask) {
  check_metric_inputs(pred, gt, upper_mask);
  require(pred.rows() >= 2, ErrorKind::InvalidArgument, "FDD needs T >= 2");
  double total = 0.0;
  for (int v : upper_mask) total += std::abs(norm_std(pred, v) - norm_std(gt, v));
  return total / static_cast<double>(upper_mask.size());
}

std::vector<double> motion_std_map(std::span<const Matrix> sequences) {
  require(!sequences.empty(), ErrorKind::InvalidArgument, "no sequences for the std map");
  const auto cols = sequences.front().cols();
  require(cols % 3 == 0, ErrorKind::Shape, "motion must be T x V*3");
  RowVector sum = RowVector::Zero(cols);
  RowVector sum_sq = RowVector::Zero(cols);
  double frames = 0.0;
  for (const auto& s : sequences) {
    require(s.cols() == cols, ErrorKind::Shape, "sequences differ in vertex count");
    sum += s.colwise().sum();
    sum_sq += s.cwiseAbs2().colwise().sum();
    frames += static_cast<double>(s.rows());
  }
  const RowVector mean = sum / frames;
  const RowVector var = (sum_sq / frames - mean.cwiseAbs2()).cwiseMax(0.0);
  std::vector<double> out(cols / 3);
  for (std::size_t v = 0; v < out.size(); ++v)
    out[v] = std::sqrt(var[3 * v] + var[3 * v + 1] + var[3 * v + 2]);
  return out;
}

void write_std_map_csv(const fs::path& path, const std::vector<double>& std_map, const MeshTemplate* mesh) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + path.string());
  out << "vertex,region,std\n" << std::setprecision(9);
  for (std::size_t v = 0; v < std_map.size(); ++v) {
    const char* region = "other";
    if (mesh && v < mesh->region_labels.size()) {
      if (mesh->region_labels[v] == Region::Lip) region = "lip";
      else if (mesh->region_labels[v] == Region::Upper) region = "upper";
    }
    out << v << "," << region << "," << std_map[v] << "\n";
  }
}

MetricSummary summarize(std::span<const double> values) {
  require(!values.empty(), ErrorKind::InvalidArgument, "nothing to summarize");
  MetricSummary s;
  for (double v : values) s.mean += v;
  const double n = static_cast<double>(values.size());
  s.mean /= n;
  if (values.size() >= 2) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    var /= (n - 1.0);
    const boost::math::students_t dist(n - 1.0);
    s.ci_half_width = boost::math::quantile(dist, 0.975) * std::sqrt(var / n);
  }
  return s;
}

MetricReport score_predictions(std::span<const DatasetItem> items, std::span<const MotionSequence> predictions,
                               const MeshTemplate& mesh) {
  require(items.size() == predictions.size() && !items.empty(), ErrorKind::InvalidArgument,
          "predictions do not match the evaluated items");
  const auto lips = mesh.indices_of(Region::Lip);
  const auto upper = mesh.indices_of(Region::Upper);
  std::vector<Matrix> preds;
  double lve = 0.0, fdd = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Matrix gt = items[i].motion.offsets.cast<double>();
    preds.push_back(predictions[i].offsets.cast<double>());
    lve += lip_vertex_error(preds.back(), gt, lips);
    fdd += facial_dynamics_deviation(preds.back(), gt, upper);
  }
  MetricReport r;
  const double n = static_cast<double>(items.size());
  r.lve.mean = lve / n;
  r.fdd.mean = fdd / n;
  r.per_vertex_std = motion_std_map(preds);
  r.upper_std.mean = mean_over(r.per_vertex_std, upper);
  return r;
}

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, std::span<const DatasetItem> items,
                                 const MeshTemplate& mesh, const SamplerConfig& sampler,
                                 std::span<const std::uint64_t> seeds) {
  require(!seeds.empty(), ErrorKind::Config, "evaluation needs at least one seed");
  const auto schedule = make_schedule(ckpt.config.max_step, ckpt.schedule);
  std::vector<double> lve, fdd, upper_std;
  std::vector<Matrix> pooled;
  for (auto seed : seeds) {
    std::vector<MotionSequence> preds;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto rng = item_rng(seed, i);
      preds.push_back(sample_motion(ckpt.config, ckpt.params, schedule, items[i].audio, items[i].style,
                                    sampler, rng).motion);
      pooled.push_back(preds.back().offsets.cast<double>());
    }
    const auto r = score_predictions(items, preds, mesh);
    lve.push_back(r.lve.mean);
    fdd.push_back(r.fdd.mean);
    upper_std.push_back(r.upper_std.mean);
  }
  MetricReport report;
  report.variant = std::string(to_string(ckpt.config.variant));
  report.guidance = sampler.guidance_scale;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.lve = summarize(lve);
  report.fdd = summarize(fdd);
  report.upper_std = summarize(upper_std);
  report.per_vertex_std = motion_std_map(pooled);
  return report;
}

fs::path ablation_checkpoint_path(const fs::path& dir, AttentionVariant v) {
  return dir / ("ablate_" + std::string(to_string(v)) + ".dsck");
}

std::vector<MetricReport> run_ablation(const DatasetSplit& split, const MeshTemplate& mesh,
                                       std::span<const AttentionVariant> variants,
                                       std::span<const double> guidance_values,
                                       std::span<const std::uint64_t> seeds, const AblationOptions& options) {
  require(!variants.empty() && !guidance_values.empty(), ErrorKind::Config,
          "ablation needs at least one variant and one guidance value");
  require(!split.test.empty(), ErrorKind::Data, "ablation needs a non-empty test split");
  std::vector<Checkpoint> checkpoints(variants.size());
  parallel_for(variants.size(), options.threads, [&](std::size_t i) {
    const auto path = ablation_checkpoint_path(options.checkpoint_dir, variants[i]);
    DenoiserConfig model = options.model;
    model.variant = variants[i];
    if (fs::exists(path)) {
      auto ckpt = load_checkpoint(path);
      require(ckpt.config == model && ckpt.schedule == options.schedule, ErrorKind::Incompatible,
              path.string() + " was trained with a different configuration");
      checkpoints[i] = std::move(ckpt);
      return;
    }
    require(options.train_missing, ErrorKind::Data,
            "missing checkpoint " + path.string() + " and training is disabled");
    const auto schedule = make_schedule(model.max_step, options.schedule);
    Checkpoint ckpt{model, options.schedule, options.train.steps, {}};
    ckpt.params = train(split.train, init_params(model, options.init_seed), schedule, model, options.train);
    fs::create_directories(options.checkpoint_dir);
    save_checkpoint(path, ckpt);
    checkpoints[i] = std::move(ckpt);
  });

  std::vector<MetricReport> reports(variants.size() * guidance_values.size());
  parallel_for(reports.size(), options.threads, [&](std::size_t cell) {
    const auto vi = cell / guidance_values.size();
    SamplerConfig sampler = options.sampler;
    sampler.guidance_scale = guidance_values[cell % guidance_values.size()];
    reports[cell] = evaluate_checkpoint(checkpoints[vi], split.test, mesh, sampler, seeds);
  });
  return reports;
}

void write_report_csv(const fs::path& path, std::span<const MetricReport> reports) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write " + path.string());
  out << "variant,guidance,seeds,lve_mean,lve_ci95,fdd_mean,fdd_ci95,upper_std_mean,upper_std_ci95\n";
  out << std::setprecision(9);
  auto ci = [&](const MetricSummary& s) {
    if (s.ci_half_width) out << *s.ci_half_width;
    else out << "NA";
  };
  for (const auto& r : reports) {
    out << r.variant << "," << r.guidance << "," << r.seeds.size() << "," << r.lve.mean << ",";
    ci(r.lve);
    out << "," << r.fdd.mean << ",";
    ci(r.fdd);
    out << "," << r.upper_std.mean << ",";
    ci(r.upper_std);
    out << "\n";
  }
}

}  // namespace diffspk
