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

// Binary sequence files.
//
// Every file starts with a 4-byte magic and a little-endian u32 version (1),
// followed by a kind-specific header of little-endian u32 fields and a payload
// of little-endian IEEE-754 float32 values in row-major order:
//
//   motion   "DSMO" | version | T | V | fps | T*V*3 floats
//   audio    "DSAU" | version | T | D | fps | T*D floats
//   template "DSTM" | version | V | V*3 floats | V region bytes (0 other, 1 lip, 2 upper)
//
// The manifest is plain text, one record per line:
//
//   # diffspk dataset manifest v1
//   template <path>
//   subjects <K>
//   sequence <audio path> <motion path> <style index>
//
// Paths in a manifest are relative to the manifest's directory.

#pragma once

#include "diffspk/data.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace diffspk {

enum class FormatFault { CorruptHeader, TruncatedPayload, VersionMismatch };

class FormatError : public Error {
 public:
  FormatError(FormatFault fault, const std::string& what) : Error(ErrorKind::Data, what), fault_(fault) {}
  FormatFault fault() const noexcept { return fault_; }

 private:
  FormatFault fault_;
};

inline constexpr std::uint32_t kFormatVersion = 1;

void save_motion(const std::filesystem::path& path, const MotionSequence& motion);
MotionSequence load_motion(const std::filesystem::path& path);

void save_audio(const std::filesystem::path& path, const AudioFeatureSequence& audio);
AudioFeatureSequence load_audio(const std::filesystem::path& path);

void save_template(const std::filesystem::path& path, const MeshTemplate& mesh);
MeshTemplate load_template(const std::filesystem::path& path);

struct ManifestEntry {
  std::filesystem::path audio;
  std::filesystem::path motion;
  int style = 0;
};

struct Manifest {
  std::filesystem::path mesh_template;
  int subject_count = 1;
  std::vector<ManifestEntry> entries;
};

void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

// Writes template, per-sequence files and manifest.txt under dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

// Plain whitespace-separated list of vertex indices.
std::vector<int> load_vertex_mask(const std::filesystem::path& path);

}  // namespace diffspk
