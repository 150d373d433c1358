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

#include "diffspk/io.hpp"

#include "byteio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace diffspk {

namespace fs = std::filesystem;
using detail::ByteReader;
using detail::ByteWriter;

namespace {

void write_floats(ByteWriter& w, const Matrixf& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
}

Matrixf read_floats(ByteReader& r, std::uint32_t rows, std::uint32_t cols) {
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  r.need_payload(count * 4);
  Matrixf m(rows, cols);
  for (std::size_t i = 0; i < count; ++i) m.data()[i] = r.f32();
  return m;
}

void check_dims(bool ok, const fs::path& path, const char* what) {
  if (!ok) throw FormatError(FormatFault::CorruptHeader, path.string() + ": invalid " + what);
}

}  // namespace

void save_motion(const fs::path& path, const MotionSequence& motion) {
  motion.validate();
  ByteWriter w;
  w.magic("DSMO");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(motion.frames()));
  w.u32(static_cast<std::uint32_t>(motion.vertex_count));
  w.u32(static_cast<std::uint32_t>(motion.fps));
  write_floats(w, motion.offsets);
  w.write_to(path);
}

MotionSequence load_motion(const fs::path& path) {
  auto r = ByteReader::from_file(path);
  r.expect_header("DSMO");
  const auto T = r.header_u32();
  const auto V = r.header_u32();
  const auto fps = r.header_u32();
  check_dims(T > 0 && V > 0 && fps > 0, path, "motion dimensions");
  MotionSequence m;
  m.fps = static_cast<int>(fps);
  m.vertex_count = static_cast<int>(V);
  m.offsets = read_floats(r, T, 3 * V);
  r.expect_end();
  return m;
}

void save_audio(const fs::path& path, const AudioFeatureSequence& audio) {
  audio.validate();
  ByteWriter w;
  w.magic("DSAU");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(audio.frames()));
  w.u32(static_cast<std::uint32_t>(audio.feature_dim()));
  w.u32(static_cast<std::uint32_t>(audio.fps));
  write_floats(w, audio.features);
  w.write_to(path);
}

AudioFeatureSequence load_audio(const fs::path& path) {
  auto r = ByteReader::from_file(path);
  r.expect_header("DSAU");
  const auto T = r.header_u32();
  const auto D = r.header_u32();
  const auto fps = r.header_u32();
  check_dims(T > 0 && D > 0 && fps > 0, path, "audio dimensions");
  AudioFeatureSequence a;
  a.fps = static_cast<int>(fps);
  a.features = read_floats(r, T, D);
  r.expect_end();
  return a;
}

void save_template(const fs::path& path, const MeshTemplate& mesh) {
  mesh.validate();
  ByteWriter w;
  w.magic("DSTM");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(mesh.vertex_count()));
  write_floats(w, mesh.rest_positions);
  for (auto label : mesh.region_labels) w.byte(static_cast<std::uint8_t>(label));
  w.write_to(path);
}

MeshTemplate load_template(const fs::path& path) {
  auto r = ByteReader::from_file(path);
  r.expect_header("DSTM");
  const auto V = r.header_u32();
  check_dims(V >= 3, path, "template vertex count");
  MeshTemplate mesh;
  mesh.rest_positions = read_floats(r, V, 3);
  r.need_payload(V);
  mesh.region_labels.resize(V);
  for (auto& label : mesh.region_labels) {
    const auto b = r.byte();
    check_dims(b <= 2, path, "region label");
    label = static_cast<Region>(b);
  }
  r.expect_end();
  return mesh;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot open " + path.string() + " for writing");
  out << "# diffspk dataset manifest v1\n";
  out << "template " << manifest.mesh_template.generic_string() << "\n";
  out << "subjects " << manifest.subject_count << "\n";
  for (const auto& e : manifest.entries)
    out << "sequence " << e.audio.generic_string() << " " << e.motion.generic_string() << " "
        << e.style << "\n";
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot open manifest " + path.string());
  Manifest m;
  bool have_template = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (tag == "template") {
      std::string p;
      require(static_cast<bool>(ls >> p), ErrorKind::Data, where + ": missing template path");
      m.mesh_template = p;
      have_template = true;
    } else if (tag == "subjects") {
      require(static_cast<bool>(ls >> m.subject_count) && m.subject_count > 0, ErrorKind::Data,
              where + ": bad subject count");
    } else if (tag == "sequence") {
      ManifestEntry e;
      std::string a, mo;
      require(static_cast<bool>(ls >> a >> mo >> e.style), ErrorKind::Data,
              where + ": expected 'sequence <audio> <motion> <style>'");
      e.audio = a;
      e.motion = mo;
      m.entries.push_back(std::move(e));
    } else {
      fail(ErrorKind::Data, where + ": unknown record '" + tag + "'");
    }
  }
  require(have_template, ErrorKind::Data, path.string() + ": no template record");
  for (const auto& e : m.entries)
    require(e.style >= 0 && e.style < m.subject_count, ErrorKind::Data,
            path.string() + ": style index out of range");
  return m;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir / "audio");
  fs::create_directories(dir / "motion");
  Manifest manifest;
  manifest.mesh_template = "template.dstm";
  manifest.subject_count = ds.items.empty() ? 1 : ds.items.front().style.subject_count;
  save_template(dir / manifest.mesh_template, ds.mesh);
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seq_%04zu", i);
    ManifestEntry e{fs::path("audio") / (std::string(name) + ".dsau"),
                    fs::path("motion") / (std::string(name) + ".dsmo"), ds.items[i].style.subject_index};
    save_audio(dir / e.audio, ds.items[i].audio);
    save_motion(dir / e.motion, ds.items[i].motion);
    manifest.entries.push_back(std::move(e));
  }
  save_manifest(dir / "manifest.txt", manifest);
}

Dataset load_dataset(const fs::path& dir) {
  const auto manifest = load_manifest(dir / "manifest.txt");
  Dataset ds;
  ds.mesh = load_template(dir / manifest.mesh_template);
  ds.mesh.validate();
  for (const auto& e : manifest.entries) {
    DatasetItem item;
    item.audio = load_audio(dir / e.audio);
    item.motion = load_motion(dir / e.motion);
    item.style = StyleOneHot{e.style, manifest.subject_count};
    require(item.audio.frames() == item.motion.frames(), ErrorKind::Data,
            e.motion.string() + ": frame count differs from its audio");
    require(item.motion.vertex_count == ds.mesh.vertex_count(), ErrorKind::Data,
            e.motion.string() + ": vertex count differs from the template");
    ds.items.push_back(std::move(item));
  }
  return ds;
}

std::vector<int> load_vertex_mask(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot open mask " + path.string());
  std::vector<int> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line.substr(0, line.find('#')));
    int v = 0;
    while (fields >> v) {
      require(v >= 0, ErrorKind::Data, path.string() + ": negative vertex index");
      out.push_back(v);
    }
    require(fields.eof(), ErrorKind::Data, path.string() + ": non-integer entry");
  }
  return out;
}

}  // namespace diffspk
