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

#include "diffspk/checkpoint.hpp"

#include "byteio.hpp"

#include <map>
#include <sstream>

namespace diffspk {

namespace {

int header_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(FormatFault::CorruptHeader, "checkpoint header lacks " + key);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw FormatError(FormatFault::CorruptHeader, "checkpoint header has bad " + key);
  }
}

}  // namespace

std::string describe_config(const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  std::ostringstream out;
  out << "hidden_dim=" << c.hidden_dim << "\n"
      << "ff_dim=" << c.ff_dim << "\n"
      << "heads=" << c.heads << "\n"
      << "blocks=" << c.blocks << "\n"
      << "vertex_count=" << c.vertex_count << "\n"
      << "feature_dim=" << c.feature_dim << "\n"
      << "subject_count=" << c.subject_count << "\n"
      << "fps=" << c.fps << "\n"
      << "max_step=" << c.max_step << "\n"
      << "variant=" << to_string(c.variant) << "\n"
      << "schedule=" << to_string(ckpt.schedule) << "\n"
      << "trained_steps=" << ckpt.trained_steps << "\n";
  return out.str();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  check_params(ckpt.config, ckpt.params);
  detail::ByteWriter w;
  w.magic("DSCK");
  w.u32(kFormatVersion);
  w.text(describe_config(ckpt));
  std::uint32_t count = 0;
  ckpt.params.visit(DenoiserParams::ConstVisitor([&](const std::string&, Eigen::Map<const Matrix>) { ++count; }));
  w.u32(count);
  ckpt.params.visit(DenoiserParams::ConstVisitor([&](const std::string& name, Eigen::Map<const Matrix> t) {
    w.text(name);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
  }));
  w.write_to(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_header("DSCK");
  std::map<std::string, std::string> kv;
  {
    std::istringstream text(r.text());
    std::string line;
    while (std::getline(text, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError(FormatFault::CorruptHeader, path.string() + ": bad header line");
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.hidden_dim = header_int(kv, "hidden_dim");
  c.ff_dim = header_int(kv, "ff_dim");
  c.heads = header_int(kv, "heads");
  c.blocks = header_int(kv, "blocks");
  c.vertex_count = header_int(kv, "vertex_count");
  c.feature_dim = header_int(kv, "feature_dim");
  c.subject_count = header_int(kv, "subject_count");
  c.fps = header_int(kv, "fps");
  c.max_step = header_int(kv, "max_step");
  try {
    c.variant = parse_variant(kv.at("variant"));
    ckpt.schedule = parse_schedule_kind(kv.at("schedule"));
    c.validate();
  } catch (const std::exception& e) {
    throw FormatError(FormatFault::CorruptHeader, path.string() + ": " + e.what());
  }
  ckpt.trained_steps = header_int(kv, "trained_steps");

  ckpt.params = zero_params(c);
  const auto count = r.u32();
  std::uint32_t seen = 0;
  ckpt.params.visit(DenoiserParams::Visitor([&](const std::string& name, Eigen::Map<Matrix> t) {
    ++seen;
    if (seen > count) throw FormatError(FormatFault::TruncatedPayload, path.string() + ": missing tensor " + name);
    const auto stored = r.text();
    if (stored != name)
      throw FormatError(FormatFault::CorruptHeader, path.string() + ": expected tensor " + name + ", found " + stored);
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (rows != t.rows() || cols != t.cols())
      throw FormatError(FormatFault::CorruptHeader, path.string() + ": tensor " + name + " has wrong shape");
    r.need_payload(static_cast<std::size_t>(rows) * cols * 8);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f64();
  }));
  if (seen != count) throw FormatError(FormatFault::CorruptHeader, path.string() + ": unexpected tensor count");
  r.expect_end();
  return ckpt;
}

}  // namespace diffspk
