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

#include "diffspk/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace diffspk {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  require(ec == std::errc() && ptr == end && !text.empty(), ErrorKind::Config,
          "invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

int parse_int(std::string_view key, std::string_view text) { return parse_number<int>(key, text); }
double parse_double(std::string_view key, std::string_view text) { return parse_number<double>(key, text); }
std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  return parse_number<std::uint64_t>(key, text);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(ErrorKind::Config, "invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string format(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string format(int v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const fs::path& p) { return p.generic_string(); }

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

struct KeyBinding {
  const char* key;
  const char* description;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define DSPK_INT(name, field, doc)                                                                     \
  KeyBinding{name, doc, [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_int(k, v); }, \
             [](const RunConfig& c) { return format(c.field); }}
#define DSPK_DOUBLE(name, field, doc)                                                            \
  KeyBinding{name, doc,                                                                          \
             [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_double(k, v); }, \
             [](const RunConfig& c) { return format(c.field); }}
#define DSPK_U64(name, field, doc)                                                               \
  KeyBinding{name, doc,                                                                          \
             [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_u64(k, v); }, \
             [](const RunConfig& c) { return format(c.field); }}
#define DSPK_PATH(name, field, doc)                                                                    \
  KeyBinding{name, doc,                                                                                \
             [](RunConfig& c, std::string_view k, std::string_view v) {                                \
               require(!v.empty(), ErrorKind::Config, std::string(k) + " must not be empty");          \
               c.field = fs::path(std::string(v));                                                     \
             },                                                                                        \
             [](const RunConfig& c) { return format(c.field); }}

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = {
      DSPK_INT("data.vertex_count", data.vertex_count, "mesh vertices V"),
      DSPK_INT("data.subject_count", data.subject_count, "speaking styles K"),
      DSPK_INT("data.feature_dim", data.feature_dim, "audio feature channels D"),
      DSPK_INT("data.fps", data.fps, "frame rate shared by audio and motion"),
      DSPK_INT("data.sequence_count", data.sequence_count, "number of synthetic sequences"),
      DSPK_INT("data.min_frames", data.min_frames, "shortest sequence length in frames"),
      DSPK_INT("data.max_frames", data.max_frames, "longest sequence length in frames"),
      DSPK_U64("data.seed", data.rng_seed, "generator seed"),
      DSPK_DOUBLE("data.lip_gain", data.lip_gain, "lip displacement amplitude"),
      DSPK_DOUBLE("data.upper_gain", data.upper_gain, "upper-face drift amplitude"),
      DSPK_DOUBLE("data.upper_drift_period", data.upper_drift_period, "upper-face drift period in seconds"),
      DSPK_DOUBLE("data.val_fraction", val_fraction, "share of sequences in the validation split"),
      DSPK_DOUBLE("data.test_fraction", test_fraction, "share of sequences in the test split"),
      DSPK_INT("model.hidden_dim", model.hidden_dim, "transformer width C"),
      DSPK_INT("model.ff_dim", model.ff_dim, "feed-forward width"),
      DSPK_INT("model.heads", model.heads, "attention heads"),
      DSPK_INT("model.blocks", model.blocks, "decoder blocks"),
      KeyBinding{"model.variant", "attention variant: full, no_cross_bias, no_self_bias, no_cond_self_attn, "
                                  "faceformer_bias or fully_self_attn",
                 [](RunConfig& c, std::string_view, std::string_view v) { c.model.variant = parse_variant(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.model.variant)); }},
      DSPK_U64("model.init_seed", init_seed, "parameter initialization seed"),
      DSPK_INT("diffusion.steps", model.max_step, "diffusion steps N"),
      KeyBinding{"diffusion.schedule", "noise schedule: linear or cosine",
                 [](RunConfig& c, std::string_view, std::string_view v) { c.schedule = parse_schedule_kind(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.schedule)); }},
      DSPK_INT("sampler.step_count", sampler.step_count, "DDIM substeps S"),
      DSPK_DOUBLE("sampler.eta", sampler.eta, "DDIM stochasticity, 0 is deterministic"),
      DSPK_DOUBLE("sampler.guidance_scale", sampler.guidance_scale, "classifier-free guidance scale w"),
      DSPK_INT("train.batch_size", train.batch_size, "sequences per optimizer step"),
      DSPK_DOUBLE("train.learning_rate", train.learning_rate, "AdamW learning rate"),
      DSPK_DOUBLE("train.weight_decay", train.weight_decay, "AdamW decoupled weight decay"),
      DSPK_DOUBLE("train.beta1", train.beta1, "AdamW first moment decay"),
      DSPK_DOUBLE("train.beta2", train.beta2, "AdamW second moment decay"),
      DSPK_DOUBLE("train.epsilon", train.epsilon, "AdamW denominator epsilon"),
      DSPK_INT("train.steps", train.steps, "optimizer steps"),
      DSPK_DOUBLE("train.lambda_rec", train.lambda_rec, "reconstruction loss weight"),
      DSPK_DOUBLE("train.lambda_vel", train.lambda_vel, "velocity loss weight"),
      DSPK_DOUBLE("train.uncond_prob", train.uncond_prob, "probability of dropping the audio condition"),
      DSPK_U64("train.seed", train.seed, "batch, step and noise sampling seed"),
      DSPK_INT("train.checkpoint_every", train.checkpoint_every, "steps between checkpoints, 0 disables"),
      DSPK_PATH("paths.dataset_dir", paths.dataset_dir, "dataset directory"),
      DSPK_PATH("paths.checkpoint_dir", paths.checkpoint_dir, "checkpoint directory"),
      DSPK_PATH("paths.report_dir", paths.report_dir, "directory for CSV reports and sampled motion"),
      KeyBinding{"eval.seeds", "comma-separated sampling seeds",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.eval.seeds.clear();
                   for (auto item : split_list(v)) c.eval.seeds.push_back(parse_u64(k, item));
                 },
                 [](const RunConfig& c) { return join(c.eval.seeds, [](auto s) { return format(s); }); }},
      KeyBinding{"eval.split", "split to evaluate: train, val or test",
                 [](RunConfig& c, std::string_view, std::string_view v) { c.eval.split = std::string(v); },
                 [](const RunConfig& c) { return c.eval.split; }},
      KeyBinding{"ablate.variants", "comma-separated attention variants",
                 [](RunConfig& c, std::string_view, std::string_view v) {
                   c.ablate.variants.clear();
                   for (auto item : split_list(v)) c.ablate.variants.push_back(parse_variant(item));
                 },
                 [](const RunConfig& c) {
                   return join(c.ablate.variants, [](auto v) { return std::string(to_string(v)); });
                 }},
      KeyBinding{"ablate.guidance", "comma-separated guidance scales",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.ablate.guidance.clear();
                   for (auto item : split_list(v)) c.ablate.guidance.push_back(parse_double(k, item));
                 },
                 [](const RunConfig& c) { return join(c.ablate.guidance, [](double g) { return format(g); }); }},
      KeyBinding{"ablate.train_missing", "train variants whose checkpoint is absent",
                 [](RunConfig& c, std::string_view k, std::string_view v) { c.ablate.train_missing = parse_bool(k, v); },
                 [](const RunConfig& c) { return format(c.ablate.train_missing); }},
      KeyBinding{"bench.durations", "comma-separated audio durations in seconds",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.bench.durations.clear();
                   for (auto item : split_list(v)) c.bench.durations.push_back(parse_double(k, item));
                 },
                 [](const RunConfig& c) { return join(c.bench.durations, [](double d) { return format(d); }); }},
      DSPK_INT("bench.repeats", bench.repeats, "timed runs per decoder and duration"),
      DSPK_INT("bench.warmups", bench.warmups, "untimed runs before timing"),
      DSPK_U64("bench.seed", bench.seed, "weight and audio seed"),
      DSPK_INT("bench.throughput_threads", bench.throughput_threads,
               "threads for throughput mode, 1 keeps latency mode"),
  };
  return table;
}

#undef DSPK_INT
#undef DSPK_DOUBLE
#undef DSPK_U64
#undef DSPK_PATH

const KeyBinding* find_binding(std::string_view key) {
  for (const auto& b : bindings())
    if (key == b.key) return &b;
  return nullptr;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto* b = find_binding(key);
  require(b != nullptr, ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
  try {
    b->set(*this, key, trim(value));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string(key) + ": " + e.what());
  }
}

void RunConfig::finalize() {
  data.validate();
  model.vertex_count = data.vertex_count;
  model.feature_dim = data.feature_dim;
  model.subject_count = data.subject_count;
  model.fps = data.fps;
  model.validate();
  require(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction < 1.0, ErrorKind::Config,
          "data.val_fraction + data.test_fraction must lie in [0, 1)");
  train.validate();
  sampler.validate(make_schedule(model.max_step, schedule));
  require(!eval.seeds.empty(), ErrorKind::Config, "eval.seeds must not be empty");
  require(eval.split == "train" || eval.split == "val" || eval.split == "test", ErrorKind::Config,
          "eval.split must be train, val or test");
  require(!ablate.variants.empty() && !ablate.guidance.empty(), ErrorKind::Config,
          "ablate.variants and ablate.guidance must not be empty");
  for (double w : ablate.guidance) require(w >= 0.0, ErrorKind::Config, "ablate.guidance values must be >= 0");
  require(!bench.durations.empty(), ErrorKind::Config, "bench.durations must not be empty");
  for (double d : bench.durations) require(d > 0.0, ErrorKind::Config, "bench.durations must be positive");
  require(bench.repeats >= 3, ErrorKind::Config, "bench.repeats must be >= 3");
  require(bench.warmups >= 0, ErrorKind::Config, "bench.warmups must be >= 0");
  require(bench.throughput_threads >= 1, ErrorKind::Config, "bench.throughput_threads must be >= 1");
}

std::string RunConfig::canonical_text() const {
  std::vector<std::string> lines;
  for (const auto& b : bindings()) lines.push_back(std::string(b.key) + " = " + b.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::vector<ConfigKeyInfo> config_reference() {
  std::vector<ConfigKeyInfo> out;
  for (const auto& b : bindings()) out.push_back({b.key, b.description});
  return out;
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    require(eq != std::string_view::npos, ErrorKind::Config, where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    require(seen.insert(std::string(key)).second, ErrorKind::Config,
            where + "duplicate key '" + std::string(key) + "'");
    try {
      config.set(key, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Config, where + e.what());
    }
  }
  config.finalize();
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Config, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto config = parse_config(buf.str());
  const auto base = path.parent_path();
  for (auto* p : {&config.paths.dataset_dir, &config.paths.checkpoint_dir, &config.paths.report_dir})
    if (p->is_relative()) *p = (base / *p).lexically_normal();
  return config;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace diffspk
