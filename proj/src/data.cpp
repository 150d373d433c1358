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

#include "diffspk/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace diffspk {

namespace {

constexpr double kFeatureSmoothing = 0.85;
constexpr double kMouthSharpness = 1.5;
constexpr double kRegionFraction = 0.3;

bool all_finite(const Matrixf& m) { return m.allFinite(); }

}  // namespace

std::vector<int> MeshTemplate::indices_of(Region r) const {
  std::vector<int> out;
  for (std::size_t v = 0; v < region_labels.size(); ++v)
    if (region_labels[v] == r) out.push_back(static_cast<int>(v));
  return out;
}

void MeshTemplate::validate() const {
  require(rest_positions.cols() == 3, ErrorKind::Data, "template positions must be V x 3");
  require(vertex_count() >= 3, ErrorKind::Data, "template needs at least 3 vertices");
  require(static_cast<int>(region_labels.size()) == vertex_count(), ErrorKind::Data,
          "template region labels do not match vertex count");
  require(!indices_of(Region::Lip).empty(), ErrorKind::Data, "template has no lip vertex");
  require(!indices_of(Region::Upper).empty(), ErrorKind::Data, "template has no upper-face vertex");
  require(all_finite(rest_positions), ErrorKind::Data, "template positions not finite");
}

void MotionSequence::validate() const {
  require(fps > 0, ErrorKind::Data, "motion fps must be positive");
  require(vertex_count > 0 && offsets.cols() == 3 * vertex_count, ErrorKind::Data,
          "motion offsets must have V*3 columns");
  require(frames() >= 1, ErrorKind::Data, "motion needs at least one frame");
  require(all_finite(offsets), ErrorKind::Data, "motion offsets not finite");
}

void AudioFeatureSequence::validate() const {
  require(fps > 0, ErrorKind::Data, "audio fps must be positive");
  require(frames() >= 1 && feature_dim() >= 1, ErrorKind::Data, "audio features must be T x D");
  require(all_finite(features), ErrorKind::Data, "audio features not finite");
}

void StyleOneHot::validate() const {
  require(subject_count > 0, ErrorKind::InvalidArgument, "subject count must be positive");
  require(subject_index >= 0 && subject_index < subject_count, ErrorKind::InvalidArgument,
          "style index " + std::to_string(subject_index) + " outside [0, " +
              std::to_string(subject_count) + ")");
}

RowVector StyleOneHot::dense() const {
  validate();
  RowVector v = RowVector::Zero(subject_count);
  v[subject_index] = 1.0;
  return v;
}

void SyntheticDatasetSpec::validate() const {
  require(vertex_count >= 3, ErrorKind::Config, "data.vertex_count must be >= 3");
  require(subject_count > 0 && feature_dim > 0 && fps > 0 && sequence_count > 0,
          ErrorKind::Config, "dataset counts must be positive");
  require(min_frames > 0 && min_frames <= max_frames, ErrorKind::Config,
          "need 0 < data.min_frames <= data.max_frames");
  require(lip_gain >= 0.0 && std::isfinite(lip_gain), ErrorKind::Config,
          "data.lip_gain must be finite and non-negative");
  require(upper_gain >= 0.0 && std::isfinite(upper_gain), ErrorKind::Config,
          "data.upper_gain must be finite and non-negative");
  require(upper_drift_period > 0.0 && std::isfinite(upper_drift_period), ErrorKind::Config,
          "data.upper_drift_period must be positive");
}

double style_scale(int subject_index) { return 1.0 + 0.25 * subject_index; }

MeshTemplate make_template(const SyntheticDatasetSpec& spec, Rng& rng) {
  const int V = spec.vertex_count;
  const int lips = std::max(1, static_cast<int>(std::lround(kRegionFraction * V)));
  const int upper = std::max(1, static_cast<int>(std::lround(kRegionFraction * V)));
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);

  MeshTemplate mesh;
  mesh.rest_positions.resize(V, 3);
  mesh.region_labels.resize(V);
  for (int v = 0; v < V; ++v) {
    Region r = v < lips ? Region::Lip : (v < lips + upper ? Region::Upper : Region::Other);
    // Lips on a small ellipse around the mouth, upper face across the brow.
    double x = 0.0, y = 0.0, z = 0.0;
    if (r == Region::Lip) {
      const double a = 2.0 * std::numbers::pi * v / lips;
      x = 0.3 * std::cos(a);
      y = -0.5 + 0.1 * std::sin(a);
      z = 0.2;
    } else if (r == Region::Upper) {
      const double u = upper > 1 ? static_cast<double>(v - lips) / (upper - 1) : 0.5;
      x = -0.6 + 1.2 * u;
      y = 0.6;
      z = 0.1;
    } else {
      const double a = 2.0 * std::numbers::pi * v / V;
      x = 0.9 * std::cos(a);
      y = 0.9 * std::sin(a);
      z = -0.1;
    }
    mesh.rest_positions(v, 0) = static_cast<float>(x + jitter(rng));
    mesh.rest_positions(v, 1) = static_cast<float>(y + jitter(rng));
    mesh.rest_positions(v, 2) = static_cast<float>(z + jitter(rng));
    mesh.region_labels[v] = r;
  }
  mesh.validate();
  return mesh;
}

AudioFeatureSequence synthesize_audio(const SyntheticDatasetSpec& spec, int frames, Rng& rng) {
  require(frames >= 1, ErrorKind::InvalidArgument, "audio needs at least one frame");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(1.0 - kFeatureSmoothing * kFeatureSmoothing);

  AudioFeatureSequence audio;
  audio.fps = spec.fps;
  audio.features.resize(frames, spec.feature_dim);
  std::vector<double> state(spec.feature_dim);
  for (auto& s : state) s = normal(rng);
  for (int t = 0; t < frames; ++t) {
    for (int d = 0; d < spec.feature_dim; ++d) {
      if (t > 0) state[d] = kFeatureSmoothing * state[d] + innovation * normal(rng);
      const double value =
          d == 0 ? 0.5 * (1.0 + std::tanh(kMouthSharpness * state[d])) : state[d];
      audio.features(t, d) = static_cast<float>(value);
    }
  }
  return audio;
}

MotionSequence synthesize_motion(const SyntheticDatasetSpec& spec, const MeshTemplate& mesh,
                                 const AudioFeatureSequence& audio, const StyleOneHot& style,
                                 Rng& rng) {
  style.validate();
  const int T = audio.frames();
  const int V = mesh.vertex_count();
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double phase = phase_dist(rng);
  const double omega = 2.0 * std::numbers::pi / (spec.upper_drift_period * spec.fps);
  const double lip_scale = spec.lip_gain * style_scale(style.subject_index);

  MotionSequence motion;
  motion.fps = audio.fps;
  motion.vertex_count = V;
  motion.offsets = Matrixf::Zero(T, 3 * V);
  for (int t = 0; t < T; ++t) {
    const double mouth = audio.features(t, 0);
    const double drift = spec.upper_gain * std::sin(omega * t + phase);
    for (int v = 0; v < V; ++v) {
      if (mesh.region_labels[v] == Region::Lip)
        motion.offsets(t, 3 * v + 1) = static_cast<float>(lip_scale * mouth);
      else if (mesh.region_labels[v] == Region::Upper)
        motion.offsets(t, 3 * v + 1) = static_cast<float>(drift);
    }
  }
  return motion;
}

Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  Dataset ds;
  ds.mesh = make_template(spec, rng);
  std::uniform_int_distribution<int> length(spec.min_frames, spec.max_frames);
  ds.items.reserve(spec.sequence_count);
  for (int i = 0; i < spec.sequence_count; ++i) {
    DatasetItem item;
    item.style = StyleOneHot{i % spec.subject_count, spec.subject_count};
    item.audio = synthesize_audio(spec, length(rng), rng);
    item.motion = synthesize_motion(spec, ds.mesh, item.audio, item.style, rng);
    ds.items.push_back(std::move(item));
  }
  return ds;
}

DatasetSplit split_dataset(const Dataset& ds, double val_fraction, double test_fraction) {
  require(val_fraction >= 0 && test_fraction >= 0 && val_fraction + test_fraction < 1.0,
          ErrorKind::InvalidArgument, "invalid split fractions");
  const auto n = ds.items.size();
  const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * n));
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * n));
  require(n_test + n_val < n, ErrorKind::Data, "dataset too small to split");
  const auto n_train = n - n_val - n_test;
  DatasetSplit split;
  split.train.assign(ds.items.begin(), ds.items.begin() + n_train);
  split.val.assign(ds.items.begin() + n_train, ds.items.begin() + n_train + n_val);
  split.test.assign(ds.items.begin() + n_train + n_val, ds.items.end());
  return split;
}

}  // namespace diffspk
