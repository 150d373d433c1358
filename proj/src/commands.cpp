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

#include "diffspk/commands.hpp"

#include "diffspk/bench.hpp"
#include "diffspk/checkpoint.hpp"
#include "diffspk/eval.hpp"
#include "diffspk/io.hpp"
#include "diffspk/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace diffspk {

namespace fs = std::filesystem;

namespace {

void log_line(const CommandOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

fs::path output_path(const fs::path& dir, const CommandOptions& options, const std::string& fallback) {
  fs::path p = options.out ? *options.out : fs::path(fallback);
  if (p.is_relative()) p = dir / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

struct LoadedData {
  Dataset dataset;
  DatasetSplit split;
};

LoadedData load_data(const RunConfig& config) {
  const auto& dir = config.paths.dataset_dir;
  require(fs::exists(dir / "manifest.txt"), ErrorKind::Data,
          "no dataset at " + dir.string() + " (run gen-data first)");
  LoadedData d{load_dataset(dir), {}};
  require(d.dataset.mesh.vertex_count() == config.data.vertex_count, ErrorKind::Data,
          "dataset vertex count differs from data.vertex_count");
  for (const auto& item : d.dataset.items) {
    require(item.audio.feature_dim() == config.data.feature_dim, ErrorKind::Data,
            "dataset feature dimension differs from data.feature_dim");
    require(item.style.subject_count == config.data.subject_count, ErrorKind::Data,
            "dataset subject count differs from data.subject_count");
  }
  d.split = split_dataset(d.dataset, config.val_fraction, config.test_fraction);
  return d;
}

// Offset of the split's first item in dataset order.
std::size_t split_offset(const DatasetSplit& split, const std::string& name) {
  if (name == "train") return 0;
  if (name == "val") return split.train.size();
  return split.train.size() + split.val.size();
}

const std::vector<DatasetItem>& split_items(const DatasetSplit& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  return split.test;
}

Checkpoint load_compatible_checkpoint(const RunConfig& config, const CommandOptions& options) {
  const fs::path path = options.checkpoint ? *options.checkpoint : config.paths.checkpoint_dir / "final.dsck";
  require(fs::exists(path), ErrorKind::Data, "checkpoint " + path.string() + " not found");
  auto ckpt = load_checkpoint(path);
  DenoiserConfig expected = config.model;
  expected.variant = ckpt.config.variant;
  require(ckpt.config == expected && ckpt.schedule == config.schedule, ErrorKind::Incompatible,
          path.string() + " does not match the configured model (" + describe_config(ckpt) + ")");
  return ckpt;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

RunConfig effective_config(std::string_view command, RunConfig config, const CommandOptions& options) {
  if (options.split) config.eval.split = *options.split;
  if (options.guidance) config.sampler.guidance_scale = *options.guidance;
  if (options.seed) {
    const auto seed = *options.seed;
    if (command == "gen-data") {
      config.data.rng_seed = seed;
    } else if (command == "train") {
      config.train.seed = seed;
    } else if (command == "sample") {
      config.eval.seeds = {seed};
    } else if (command == "eval" || command == "ablate") {
      for (std::size_t i = 0; i < config.eval.seeds.size(); ++i) config.eval.seeds[i] = seed + i;
    } else if (command == "bench") {
      config.bench.seed = seed;
    }
  }
  if (options.out && command == "gen-data") config.paths.dataset_dir = *options.out;
  if (options.out && command == "train") config.paths.checkpoint_dir = *options.out;
  config.finalize();
  return config;
}

fs::path cmd_gen_data(const RunConfig& config, const CommandOptions& options) {
  const auto ds = generate_dataset(config.data);
  save_dataset(config.paths.dataset_dir, ds);
  const auto split = split_dataset(ds, config.val_fraction, config.test_fraction);
  log_line(options, "wrote " + std::to_string(ds.items.size()) + " sequences (" + std::to_string(split.train.size()) +
                        " train, " + std::to_string(split.val.size()) + " val, " +
                        std::to_string(split.test.size()) + " test) to " + config.paths.dataset_dir.string());
  return config.paths.dataset_dir / "manifest.txt";
}

fs::path cmd_train(const RunConfig& config, const CommandOptions& options) {
  const auto data = load_data(config);
  const auto schedule = make_schedule(config.model.max_step, config.schedule);
  const auto& dir = config.paths.checkpoint_dir;
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.csv", std::ios::trunc);
  require(static_cast<bool>(log), ErrorKind::Data, "cannot write " + (dir / "train_log.csv").string());
  log << "step,loss,rec,vel\n" << std::setprecision(9);

  auto params = init_params(config.model, config.init_seed);
  const auto& val = data.split.val.empty() ? data.split.train : data.split.val;
  log_line(options, "initial validation rec_loss " +
                        fixed(validation_rec_loss(val, params, schedule, config.model, config.train.seed)));
  Checkpoint ckpt{config.model, config.schedule, 0, {}};
  const int every = config.train.checkpoint_every;
  params = train(data.split.train, std::move(params), schedule, config.model, config.train,
                 [&](const TrainLogRow& row, const DenoiserParams& current) {
                   log << row.step << "," << row.loss.total << "," << row.loss.rec << "," << row.loss.vel << "\n";
                   if (every > 0 && row.step % every == 0 && row.step < config.train.steps) {
                     ckpt.trained_steps = row.step;
                     ckpt.params = current;
                     save_checkpoint(dir / ("step_" + std::to_string(row.step) + ".dsck"), ckpt);
                     log_line(options, "step " + std::to_string(row.step) + " loss " + fixed(row.loss.total));
                   }
                 });
  ckpt.trained_steps = config.train.steps;
  ckpt.params = std::move(params);
  const auto final_path = dir / "final.dsck";
  save_checkpoint(final_path, ckpt);
  log_line(options, "final validation rec_loss " +
                        fixed(validation_rec_loss(val, ckpt.params, schedule, config.model, config.train.seed)));
  return final_path;
}

fs::path cmd_sample(const RunConfig& config, const CommandOptions& options) {
  const auto ckpt = load_compatible_checkpoint(config, options);
  const auto schedule = make_schedule(ckpt.config.max_step, ckpt.schedule);
  AudioFeatureSequence audio;
  StyleOneHot style{0, ckpt.config.subject_count};
  if (options.audio) {
    audio = load_audio(*options.audio);
  } else {
    const auto data = load_data(config);
    const auto& items = split_items(data.split, config.eval.split);
    const int index = options.item.value_or(0);
    require(index >= 0 && static_cast<std::size_t>(index) < items.size(), ErrorKind::Data,
            "item " + std::to_string(index) + " is outside the " + config.eval.split + " split");
    audio = items[index].audio;
    style = items[index].style;
  }
  if (options.style) style.subject_index = *options.style;
  require(style.subject_index >= 0 && style.subject_index < style.subject_count, ErrorKind::Data,
          "style index out of range");
  const auto seed = config.eval.seeds.front();
  auto rng = item_rng(seed, 0);
  const auto result = sample_motion(ckpt.config, ckpt.params, schedule, audio, style, config.sampler, rng);
  const auto path = output_path(config.paths.report_dir, options, "sample_seed" + std::to_string(seed) + ".dsmo");
  save_motion(path, result.motion);
  log_line(options, "sampled " + std::to_string(result.motion.frames()) + " frames with " +
                        std::to_string(result.denoiser_passes) + " denoiser passes to " + path.string());
  return path;
}

fs::path cmd_eval(const RunConfig& config, const CommandOptions& options) {
  const auto data = load_data(config);
  const auto& items = split_items(data.split, config.eval.split);
  require(!items.empty(), ErrorKind::Data, "the " + config.eval.split + " split is empty");
  MetricReport report;
  if (options.pred_dir) {
    const auto manifest = load_manifest(config.paths.dataset_dir / "manifest.txt");
    const auto offset = split_offset(data.split, config.eval.split);
    std::vector<MotionSequence> preds;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto file = *options.pred_dir / manifest.entries.at(offset + i).motion.filename();
      require(fs::exists(file), ErrorKind::Data, "missing prediction " + file.string());
      preds.push_back(load_motion(file));
    }
    report = score_predictions(items, preds, data.dataset.mesh);
    report.variant = "predictions";
  } else {
    const auto ckpt = load_compatible_checkpoint(config, options);
    report = evaluate_checkpoint(ckpt, items, data.dataset.mesh, config.sampler, config.eval.seeds);
  }
  const auto path = output_path(config.paths.report_dir, options, "eval_" + config.eval.split + ".csv");
  write_report_csv(path, std::span<const MetricReport>(&report, 1));
  write_std_map_csv(path.parent_path() / ("std_map_" + config.eval.split + ".csv"), report.per_vertex_std,
                    &data.dataset.mesh);
  log_line(options, "LVE " + fixed(report.lve.mean) + " FDD " + fixed(report.fdd.mean) + " upper std " +
                        fixed(report.upper_std.mean) + " -> " + path.string());
  return path;
}

fs::path cmd_ablate(const RunConfig& config, const CommandOptions& options) {
  const auto data = load_data(config);
  AblationOptions ablation;
  ablation.model = config.model;
  ablation.schedule = config.schedule;
  ablation.train = config.train;
  ablation.sampler = config.sampler;
  ablation.checkpoint_dir = config.paths.checkpoint_dir;
  ablation.train_missing = config.ablate.train_missing;
  ablation.init_seed = config.init_seed;
  ablation.threads = worker_threads();
  const auto reports = run_ablation(data.split, data.dataset.mesh, config.ablate.variants, config.ablate.guidance,
                                    config.eval.seeds, ablation);
  const auto path = output_path(config.paths.report_dir, options, "ablation.csv");
  write_report_csv(path, reports);
  for (const auto& r : reports)
    log_line(options, r.variant + " w=" + fixed(r.guidance) + " LVE " + fixed(r.lve.mean) + " FDD " +
                          fixed(r.fdd.mean) + " upper std " + fixed(r.upper_std.mean));
  return path;
}

fs::path cmd_bench(const RunConfig& config, const CommandOptions& options) {
  BenchOptions bench;
  bench.model = config.model;
  bench.schedule = config.schedule;
  bench.sampler = config.sampler;
  bench.repeats = config.bench.repeats;
  bench.warmups = config.bench.warmups;
  bench.seed = config.bench.seed;
  bench.threads = config.bench.throughput_threads;
  const auto records = bench_latency(config.bench.durations, bench);
  const auto path = output_path(config.paths.report_dir, options, "bench.csv");
  write_latency_csv(path, records);
  for (const auto& r : records)
    log_line(options, std::string(r.decoder == DecoderKind::Diffusion ? "diffusion" : "autoregressive") + " " +
                          fixed(r.audio_seconds) + "s passes " + std::to_string(r.denoiser_passes) + " median " +
                          fixed(r.wall_ms) + " ms");
  return path;
}

fs::path run_command(std::string_view command, const RunConfig& config, const CommandOptions& options) {
  const auto effective = effective_config(command, config, options);
  log_line(options, "config hash " + hex64(effective.hash()));
  if (command == "gen-data") return cmd_gen_data(effective, options);
  if (command == "train") return cmd_train(effective, options);
  if (command == "sample") return cmd_sample(effective, options);
  if (command == "eval") return cmd_eval(effective, options);
  if (command == "ablate") return cmd_ablate(effective, options);
  if (command == "bench") return cmd_bench(effective, options);
  fail(ErrorKind::Config, "unknown command '" + std::string(command) + "'");
}

}  // namespace diffspk
