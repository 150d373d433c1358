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

// Checkpoint container:
//
//   "DSCK" | u32 version | u32 length + config text (key=value lines) |
//   u32 tensor count | per tensor: u32 length + name, u32 rows, u32 cols,
//   rows*cols little-endian float64 values, row-major.

#pragma once

#include "diffspk/denoiser.hpp"
#include "diffspk/diffusion.hpp"

#include <filesystem>
#include <string>

namespace diffspk {

struct Checkpoint {
  DenoiserConfig config;
  ScheduleKind schedule = ScheduleKind::Linear;
  int trained_steps = 0;
  DenoiserParams params;
};

std::string describe_config(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace diffspk
