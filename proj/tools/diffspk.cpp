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

// diffspk command-line tool.

#include "diffspk/diffspk.h"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> audio;
  std::optional<std::string> checkpoint;
  std::optional<std::string> pred_dir;
  std::optional<std::string> split;
  std::optional<int> style;
  std::optional<int> item;
  std::optional<double> guidance;
  std::vector<std::string> overrides;  // key=value config assignments
};

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int report(dspk_status status) {
  if (status != DSPK_OK) std::fprintf(stderr, "error: %s\n", dspk_last_error());
  return static_cast<int>(status);
}

int run(const std::string& command, const Flags& f) {
  dspk_config* config = nullptr;
  if (auto s = dspk_config_load(f.config.c_str(), &config); s != DSPK_OK) return report(s);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : kv.substr(eq + 1);
    dspk_status s = eq == std::string::npos ? DSPK_ERR_CONFIG : dspk_config_set(config, key.c_str(), value.c_str());
    if (s != DSPK_OK) {
      if (eq == std::string::npos) std::fprintf(stderr, "error: expected key=value, got '%s'\n", kv.c_str());
      else report(s);
      dspk_config_free(config);
      return static_cast<int>(s);
    }
  }
  dspk_options* options = nullptr;
  dspk_status status = dspk_options_new(&options);
  auto set = [&](dspk_status s) {
    if (status == DSPK_OK) status = s;
  };
  if (status == DSPK_OK) {
    set(dspk_options_set_log(options, print_line, nullptr));
    if (f.seed) set(dspk_options_set_seed(options, *f.seed));
    if (f.out) set(dspk_options_set_out(options, f.out->c_str()));
    if (f.audio) set(dspk_options_set_audio(options, f.audio->c_str()));
    if (f.checkpoint) set(dspk_options_set_checkpoint(options, f.checkpoint->c_str()));
    if (f.pred_dir) set(dspk_options_set_pred_dir(options, f.pred_dir->c_str()));
    if (f.split) set(dspk_options_set_split(options, f.split->c_str()));
    if (f.style) set(dspk_options_set_style(options, *f.style));
    if (f.item) set(dspk_options_set_item(options, *f.item));
    if (f.guidance) set(dspk_options_set_guidance(options, *f.guidance));
  }
  if (status == DSPK_OK) {
    char path[4096];
    status = dspk_run(command.c_str(), config, options, path, sizeof path);
    if (status == DSPK_OK) std::printf("output %s\n", path);
  }
  const int code = report(status);
  dspk_options_free(options);
  dspk_config_free(config);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-driven facial motion with a biased-attention diffusion model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dspk_version()));
  Flags flags;

  struct Command {
    const char* name;
    const char* help;
    const char* out_help;
  };
  const Command commands[] = {
      {"gen-data", "generate the synthetic dataset", "dataset directory (overrides paths.dataset_dir)"},
      {"train", "train the denoiser", "checkpoint directory (overrides paths.checkpoint_dir)"},
      {"sample", "sample motion for one audio clip", "motion file, relative to paths.report_dir"},
      {"eval", "score a checkpoint or a prediction directory", "report CSV, relative to paths.report_dir"},
      {"ablate", "compare attention variants and guidance scales", "report CSV, relative to paths.report_dir"},
      {"bench", "time diffusion and autoregressive decoding", "latency CSV, relative to paths.report_dir"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", flags.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "seed override");
    sub->add_option("--out", flags.out, c.out_help);
    sub->add_option("--set", flags.overrides, "override a configuration key (key=value), repeatable");
    const std::string name = c.name;
    if (name == "sample") {
      sub->add_option("--audio", flags.audio, "audio feature file (.dsau); default is a dataset item");
      sub->add_option("--item", flags.item, "index into the evaluated split when --audio is absent");
      sub->add_option("--style", flags.style, "speaking style index");
    }
    if (name == "sample" || name == "eval") {
      sub->add_option("--checkpoint", flags.checkpoint, "checkpoint file; default is final.dsck");
      sub->add_option("--guidance", flags.guidance, "guidance scale w");
      sub->add_option("--split", flags.split, "train, val or test");
    }
    if (name == "eval") sub->add_option("--pred-dir", flags.pred_dir, "score motion files from this directory");
    if (name == "bench") {
      sub->add_option_function<std::string>(
          "--durations", [&flags](const std::string& v) { flags.overrides.push_back("bench.durations=" + v); },
          "comma-separated clip lengths in seconds");
      sub->add_option_function<std::string>(
          "--repeats", [&flags](const std::string& v) { flags.overrides.push_back("bench.repeats=" + v); },
          "timed repeats per measurement (>= 3)");
      sub->add_option_function<std::string>(
          "--warmups", [&flags](const std::string& v) { flags.overrides.push_back("bench.warmups=" + v); },
          "untimed warmup runs per measurement");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : DSPK_ERR_CONFIG;
  }
  return run(app.get_subcommands().front()->get_name(), flags);
}
