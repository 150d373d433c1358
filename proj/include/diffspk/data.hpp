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

// Domain types for paired audio / vertex-motion data and the synthetic
// dataset generator that stands in for captured 4D scans.

#pragma once

#include "diffspk/common.hpp"

#include <cstdint>
#include <vector>

namespace diffspk {

enum class Region : std::uint8_t { Other = 0, Lip = 1, Upper = 2 };

struct MeshTemplate {
  Matrixf rest_positions;  // V x 3
  std::vector<Region> region_labels;

  int vertex_count() const { return static_cast<int>(rest_positions.rows()); }
  std::vector<int> indices_of(Region r) const;
  void validate() const;
};

// T x (V*3) vertex offsets over a template; column 3*v + c is coordinate c of vertex v.
struct MotionSequence {
  int fps = 25;
  int vertex_count = 0;
  Matrixf offsets;

  int frames() const { return static_cast<int>(offsets.rows()); }
  void validate() const;
};

struct AudioFeatureSequence {
  int fps = 25;
  Matrixf features;  // T x D

  int frames() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

struct StyleOneHot {
  int subject_index = 0;
  int subject_count = 1;

  void validate() const;
  RowVector dense() const;
};

struct SyntheticDatasetSpec {
  int vertex_count = 40;
  int subject_count = 4;
  int feature_dim = 16;
  int fps = 25;
  int sequence_count = 64;
  int min_frames = 50;
  int max_frames = 100;
  std::uint64_t rng_seed = 7;
  double lip_gain = 1.0;
  double upper_gain = 0.3;
  double upper_drift_period = 2.0;  // seconds

  void validate() const;
};

struct DatasetItem {
  AudioFeatureSequence audio;
  MotionSequence motion;
  StyleOneHot style;
};

struct Dataset {
  MeshTemplate mesh;
  std::vector<DatasetItem> items;
};

struct DatasetSplit {
  std::vector<DatasetItem> train;
  std::vector<DatasetItem> val;
  std::vector<DatasetItem> test;
};

double style_scale(int subject_index);

MeshTemplate make_template(const SyntheticDatasetSpec& spec, Rng& rng);

// Smoothed random features; channel 0 is the mouth amplitude in [0, 1].
AudioFeatureSequence synthesize_audio(const SyntheticDatasetSpec& spec, int frames, Rng& rng);

// Lips follow channel 0 deterministically; upper-face drift draws its phase from rng.
MotionSequence synthesize_motion(const SyntheticDatasetSpec& spec, const MeshTemplate& mesh,
                                 const AudioFeatureSequence& audio, const StyleOneHot& style,
                                 Rng& rng);

Dataset generate_dataset(const SyntheticDatasetSpec& spec);

// Contiguous split by index: train first, then validation, then test.
DatasetSplit split_dataset(const Dataset& ds, double val_fraction = 0.125,
                           double test_fraction = 0.125);

}  // namespace diffspk
