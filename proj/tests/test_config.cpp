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
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace diffspk;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("parsing applies values, comments and blank lines") {
  const auto c = parse_config(
      "# comment\n"
      "\n"
      "data.vertex_count = 12   # trailing comment\n"
      "data.feature_dim=5\n"
      "model.variant = no_cross_bias\n"
      "model.heads = 2\n"
      "model.hidden_dim = 16\n"
      "diffusion.steps = 20\n"
      "diffusion.schedule = cosine\n"
      "sampler.step_count = 5\n"
      "sampler.guidance_scale = 0.5\n"
      "train.learning_rate = 3e-3\n"
      "eval.seeds = 4, 5\n"
      "ablate.guidance = 0, 0.5, 1\n"
      "bench.durations = 1.5,3\n");
  CHECK(c.data.vertex_count == 12);
  CHECK(c.model.vertex_count == 12);
  CHECK(c.model.feature_dim == 5);
  CHECK(c.model.variant == AttentionVariant::NoCrossBias);
  CHECK(c.model.max_step == 20);
  CHECK(c.schedule == ScheduleKind::Cosine);
  CHECK(c.sampler.step_count == 5);
  CHECK(c.sampler.guidance_scale == 0.5);
  CHECK(c.train.learning_rate == doctest::Approx(3e-3));
  CHECK(c.eval.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.ablate.guidance == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(c.bench.durations == std::vector<double>{1.5, 3.0});
}

TEST_CASE("unknown keys, duplicates and malformed lines are config errors") {
  CHECK(kind_of([] { parse_config("data.vertexcount = 3\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.heads = 2\nmodel.heads = 4\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.heads 2\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.heads = two\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.heads = 2.5\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.variant = sideways\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("sampler.step_count = 0\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("model.hidden_dim = 10\nmodel.heads = 4\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("bench.repeats = 2\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("eval.split = holdout\n"); }) == ErrorKind::Config);
}

TEST_CASE("canonical text lists every documented key once and round-trips") {
  const auto c = parse_config("model.heads = 2\nmodel.hidden_dim = 16\neval.seeds = 9\n");
  const auto text = c.canonical_text();
  std::set<std::string> keys;
  std::istringstream lines(text);
  std::string previous;
  for (std::string line; std::getline(lines, line);) {
    const auto key = line.substr(0, line.find(" = "));
    CHECK(key > previous);
    previous = key;
    keys.insert(key);
  }
  for (const auto& info : config_reference()) {
    CHECK(keys.count(info.key) == 1);
    CHECK(!info.description.empty());
  }
  CHECK(keys.size() == config_reference().size());
  const auto again = parse_config(text);
  CHECK(again.canonical_text() == text);
  CHECK(again.hash() == c.hash());
}

TEST_CASE("hash tracks effective values only") {
  const auto a = parse_config("model.heads = 4\n");
  const auto b = parse_config("# same thing\nmodel.heads=4\n\n");
  const auto defaults = parse_config("");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == defaults.hash());
  CHECK(parse_config("train.seed = 2\n").hash() != defaults.hash());
  CHECK(hex64(defaults.hash()).size() == 16);
}

TEST_CASE("relative paths resolve against the configuration file") {
  const auto dir = oracle::temp_dir("config_paths");
  std::filesystem::create_directories(dir / "conf");
  {
    std::ofstream out(dir / "conf" / "run.conf");
    out << "paths.dataset_dir = ../data\npaths.report_dir = /tmp/abs_reports\n";
  }
  const auto c = load_config(dir / "conf" / "run.conf");
  CHECK(c.paths.dataset_dir.lexically_normal() == (dir / "data").lexically_normal());
  CHECK(c.paths.report_dir == "/tmp/abs_reports");
  CHECK(c.paths.checkpoint_dir.lexically_normal() == (dir / "conf" / "checkpoints").lexically_normal());
  CHECK(kind_of([&] { load_config(dir / "missing.conf"); }) == ErrorKind::Config);
}

TEST_CASE("setting a key after parsing revalidates on finalize") {
  auto c = parse_config("");
  c.set("model.hidden_dim", "12");
  c.set("model.heads", "5");
  CHECK_THROWS_AS(c.finalize(), Error);
  c.set("model.heads", "3");
  CHECK_NOTHROW(c.finalize());
  CHECK_THROWS_AS(c.set("nope", "1"), Error);
}
