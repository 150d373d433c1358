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

#include "diffspk/diffspk.h"
#include "diffspk/io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small end-to-end configuration rooted in a scratch directory.
dspk_config* tiny_config(const std::filesystem::path& root) {
  dspk_config* c = nullptr;
  const std::string text =
      "data.vertex_count = 12\n"
      "data.feature_dim = 4\n"
      "data.subject_count = 2\n"
      "data.sequence_count = 8\n"
      "data.min_frames = 10\n"
      "data.max_frames = 14\n"
      "model.hidden_dim = 8\n"
      "model.ff_dim = 16\n"
      "model.heads = 2\n"
      "diffusion.steps = 10\n"
      "sampler.step_count = 3\n"
      "sampler.eta = 0.5\n"
      "train.steps = 4\n"
      "train.batch_size = 2\n"
      "train.checkpoint_every = 2\n"
      "eval.seeds = 1,2\n"
      "paths.dataset_dir = " + (root / "data").string() + "\n"
      "paths.checkpoint_dir = " + (root / "ckpt").string() + "\n"
      "paths.report_dir = " + (root / "reports").string() + "\n";
  REQUIRE(dspk_config_parse(text.c_str(), &c) == DSPK_OK);
  return c;
}

struct Options {
  dspk_options* ptr = nullptr;
  Options() { REQUIRE(dspk_options_new(&ptr) == DSPK_OK); }
  ~Options() { dspk_options_free(ptr); }
};

}  // namespace

TEST_CASE("status codes and thread-local error text") {
  dspk_config* c = nullptr;
  CHECK(dspk_config_parse("model.heads = x\n", &c) == DSPK_ERR_CONFIG);
  CHECK(c == nullptr);
  CHECK(std::string(dspk_last_error()).find("model.heads") != std::string::npos);
  CHECK(dspk_config_parse("bogus.key = 1\n", &c) == DSPK_ERR_CONFIG);
  CHECK(dspk_config_load("/nonexistent/diffspk.conf", &c) == DSPK_ERR_CONFIG);
  CHECK(dspk_config_new(nullptr) == DSPK_ERR_INVALID_ARGUMENT);
  CHECK(dspk_model_load("/nonexistent/final.dsck", nullptr) == DSPK_ERR_INVALID_ARGUMENT);
  dspk_model* m = nullptr;
  CHECK(dspk_model_load("/nonexistent/final.dsck", &m) == DSPK_ERR_DATA);
  CHECK(std::string(dspk_version()) == "0.1.0");
}

TEST_CASE("configuration through the C interface") {
  dspk_config* c = nullptr;
  REQUIRE(dspk_config_new(&c) == DSPK_OK);
  std::uint64_t h1 = 0, h2 = 0;
  CHECK(dspk_config_hash(c, &h1) == DSPK_OK);
  CHECK(dspk_config_set(c, "train.seed", "99") == DSPK_OK);
  CHECK(dspk_config_hash(c, &h2) == DSPK_OK);
  CHECK(h1 != h2);
  CHECK(dspk_config_set(c, "train.seeds", "1") == DSPK_ERR_CONFIG);
  std::size_t need = 0;
  CHECK(dspk_config_text(c, nullptr, 0, &need) == DSPK_OK);
  REQUIRE(need > 1);
  std::vector<char> buf(need);
  CHECK(dspk_config_text(c, buf.data(), buf.size(), &need) == DSPK_OK);
  CHECK(std::string(buf.data()).find("train.seed = 99") != std::string::npos);
  std::vector<char> small(4);
  CHECK(dspk_config_text(c, small.data(), small.size(), &need) == DSPK_ERR_INVALID_ARGUMENT);
  dspk_config_free(c);
  CHECK(dspk_run("dance", nullptr, nullptr, nullptr, 0) == DSPK_ERR_INVALID_ARGUMENT);
}

TEST_CASE("metrics through the C interface") {
  const int F = 4, V = 3;
  std::vector<float> gt(F * V * 3, 0.0f), pred = gt;
  pred[2 * V * 3 + 3 * 1 + 2] = 0.8f;
  const int lips[] = {1};
  double lve = -1.0, fdd = -1.0;
  CHECK(dspk_lip_vertex_error(pred.data(), gt.data(), F, V, lips, 1, &lve) == DSPK_OK);
  CHECK(lve == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(dspk_facial_dynamics_deviation(gt.data(), gt.data(), F, V, lips, 1, &fdd) == DSPK_OK);
  CHECK(fdd == 0.0);
  CHECK(dspk_lip_vertex_error(pred.data(), gt.data(), F, V, lips, 0, &lve) == DSPK_ERR_INVALID_ARGUMENT);
  CHECK(dspk_facial_dynamics_deviation(pred.data(), gt.data(), 1, V, lips, 1, &fdd) == DSPK_ERR_INVALID_ARGUMENT);
}

TEST_CASE("end-to-end commands through the C interface") {
  const auto root = oracle::temp_dir("capi_e2e");
  dspk_config* c = tiny_config(root);
  std::vector<std::string> log;
  Options o;
  dspk_options_set_log(
      o.ptr, [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); },
      &log);
  char out[4096];

  REQUIRE(dspk_run("gen-data", c, o.ptr, out, sizeof out) == DSPK_OK);
  CHECK(std::filesystem::exists(root / "data" / "manifest.txt"));
  REQUIRE(dspk_run("train", c, o.ptr, out, sizeof out) == DSPK_OK);
  CHECK(std::filesystem::exists(root / "ckpt" / "final.dsck"));
  CHECK(std::filesystem::exists(root / "ckpt" / "step_2.dsck"));
  CHECK(std::filesystem::exists(root / "ckpt" / "train_log.csv"));
  CHECK(!log.empty());
  CHECK(log.front().rfind("config hash ", 0) == 0);

  SUBCASE("sampling is byte-deterministic for a fixed seed") {
    Options s;
    dspk_options_set_seed(s.ptr, 17);
    dspk_options_set_out(s.ptr, "a.dsmo");
    REQUIRE(dspk_run("sample", c, s.ptr, out, sizeof out) == DSPK_OK);
    const auto first = slurp(out);
    dspk_options_set_out(s.ptr, "b.dsmo");
    REQUIRE(dspk_run("sample", c, s.ptr, out, sizeof out) == DSPK_OK);
    CHECK(slurp(out) == first);
    CHECK(!first.empty());
    dspk_options_set_seed(s.ptr, 18);
    dspk_options_set_out(s.ptr, "c.dsmo");
    REQUIRE(dspk_run("sample", c, s.ptr, out, sizeof out) == DSPK_OK);
    CHECK(slurp(out) != first);
  }

  SUBCASE("scoring the ground truth as predictions gives zero error") {
    Options e;
    dspk_options_set_pred_dir(e.ptr, (root / "data" / "motion").c_str());
    REQUIRE(dspk_run("eval", c, e.ptr, out, sizeof out) == DSPK_OK);
    std::ifstream in(out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    INFO(row);
    CHECK(row.rfind("predictions,0,0,0,NA,0,NA,", 0) == 0);
  }

  SUBCASE("checkpoint evaluation reports a CI over two seeds") {
    Options e;
    REQUIRE(dspk_run("eval", c, e.ptr, out, sizeof out) == DSPK_OK);
    std::ifstream in(out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.rfind("full,", 0) == 0);
    CHECK(row.find("NA") == std::string::npos);
    CHECK(std::filesystem::exists(root / "reports" / "std_map_test.csv"));
  }

  SUBCASE("model handles sample directly") {
    dspk_model* m = nullptr;
    REQUIRE(dspk_model_load((root / "ckpt" / "final.dsck").c_str(), &m) == DSPK_OK);
    int V = 0, D = 0, K = 0;
    CHECK(dspk_model_dims(m, &V, &D, &K) == DSPK_OK);
    CHECK(V == 12);
    CHECK(D == 4);
    CHECK(K == 2);
    std::vector<float> audio(6 * D, 0.25f), a(6 * V * 3), b(6 * V * 3);
    int passes = 0;
    CHECK(dspk_model_sample(m, audio.data(), 6, 1, 3, 0.0, 0.5, 5, a.data(), a.size(), &passes) == DSPK_OK);
    CHECK(passes == 6);
    CHECK(dspk_model_sample(m, audio.data(), 6, 1, 3, 0.0, 0.5, 5, b.data(), b.size(), &passes) == DSPK_OK);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0);
    CHECK(dspk_model_sample(m, audio.data(), 6, 2, 3, 0.0, 0.5, 5, b.data(), b.size(), &passes) ==
          DSPK_ERR_INVALID_ARGUMENT);
    CHECK(dspk_model_sample(m, audio.data(), 6, 1, 3, 0.0, 0.5, 5, b.data(), b.size() - 1, &passes) ==
          DSPK_ERR_INVALID_ARGUMENT);
    dspk_model_free(m);
  }

  SUBCASE("an incompatible checkpoint is rejected") {
    dspk_config* other = tiny_config(root);
    dspk_config_set(other, "model.hidden_dim", "16");
    Options s;
    CHECK(dspk_run("sample", other, s.ptr, out, sizeof out) == DSPK_ERR_INCOMPATIBLE);
    dspk_config_free(other);
  }

  dspk_config_free(c);
}
