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

// Independent reference computations used by the tests. These use plain
// loops and std::vector so they share no code paths with the library.

#pragma once

#include "diffspk/attention.hpp"
#include "diffspk/common.hpp"
#include "diffspk/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using diffspk::Matrix;
using diffspk::RowVector;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool masked(double b) { return b <= -5e8; }

// Cross-attention bias entry: condition columns and the aligned key are 0.
inline double cross_bias(int i, int j) { return (j == 0 || j == 1 || j == i + 2) ? 0.0 : kNegInf; }

// Self-attention bias entry: condition columns 0, motion columns -floor(|i - k| / p).
inline double self_bias(int i, int j, int p) {
  if (j < 2) return 0.0;
  const int k = j - 2;
  const int d = i > k ? i - k : k - i;
  return -static_cast<double>(d / p);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

inline double max_relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-12);
}

// Brute-force multi-head attention with prepended condition tokens.
inline Matrix dense_attention(const Matrix& q, const Matrix& keys, const Matrix& values, const Matrix& conds,
                              const Matrix& bias, int heads, const Matrix& w_o, const RowVector& b_o) {
  const int T = static_cast<int>(q.rows());
  const int C = static_cast<int>(q.cols());
  const int m = static_cast<int>(conds.rows());
  const int L = m + static_cast<int>(keys.rows());
  const int dh = C / heads;
  auto key_at = [&](int j, int c) { return j < m ? conds(j, c) : keys(j - m, c); };
  auto value_at = [&](int j, int c) { return j < m ? conds(j, c) : values(j - m, c); };
  Matrix mixed = Matrix::Zero(T, C);
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < T; ++i) {
      std::vector<double> logit(L, kNegInf);
      double top = kNegInf;
      for (int j = 0; j < L; ++j) {
        if (masked(bias(i, j))) continue;
        double dot = 0.0;
        for (int c = h * dh; c < (h + 1) * dh; ++c) dot += q(i, c) * key_at(j, c);
        logit[j] = dot / std::sqrt(static_cast<double>(dh)) + bias(i, j);
        top = std::max(top, logit[j]);
      }
      double z = 0.0;
      for (int j = 0; j < L; ++j)
        if (logit[j] != kNegInf) z += std::exp(logit[j] - top);
      for (int j = 0; j < L; ++j) {
        if (logit[j] == kNegInf) continue;
        const double w = std::exp(logit[j] - top) / z;
        for (int c = h * dh; c < (h + 1) * dh; ++c) mixed(i, c) += w * value_at(j, c);
      }
    }
  }
  Matrix out(T, w_o.cols());
  for (int i = 0; i < T; ++i)
    for (int o = 0; o < w_o.cols(); ++o) {
      double s = b_o[o];
      for (int c = 0; c < C; ++c) s += mixed(i, c) * w_o(c, o);
      out(i, o) = s;
    }
  return out;
}

// Kernel-3 temporal convolution with zero padding; weight rows ordered
// [tap t-1 channels, tap t channels, tap t+1 channels].
inline Matrix conv1d_k3(const Matrix& x, const Matrix& weight, const RowVector& bias) {
  const int T = static_cast<int>(x.rows());
  const int D = static_cast<int>(x.cols());
  Matrix y(T, weight.cols());
  for (int t = 0; t < T; ++t)
    for (int o = 0; o < weight.cols(); ++o) {
      double s = bias[o];
      for (int k = 0; k < 3; ++k) {
        const int src = t + k - 1;
        if (src < 0 || src >= T) continue;
        for (int d = 0; d < D; ++d) s += x(src, d) * weight(k * D + d, o);
      }
      y(t, o) = s;
    }
  return y;
}

inline double gelu_tanh(double x) {
  const double pi = std::acos(-1.0);
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / pi) * (x + 0.044715 * x * x * x)));
}

inline std::vector<double> sinusoid(int n, int channels) {
  std::vector<double> out(channels);
  for (int i = 0; i < channels / 2; ++i) {
    const double f = std::exp(-std::log(10000.0) * (2.0 * i) / channels);
    out[2 * i] = std::sin(n * f);
    out[2 * i + 1] = std::cos(n * f);
  }
  return out;
}

// Cumulative products of (1 - beta) for a linear ramp scaled to N steps.
inline std::vector<double> linear_alpha_bars(int N) {
  std::vector<double> ab(N + 1, 1.0);
  for (int n = 1; n <= N; ++n) {
    const double frac = N > 1 ? (n - 1.0) / (N - 1.0) : 1.0;
    const double beta = std::min(0.999, (1000.0 / N) * (1e-4 + (2e-2 - 1e-4) * frac));
    ab[n] = ab[n - 1] * (1.0 - beta);
  }
  return ab;
}

inline double lve(const Matrix& pred, const Matrix& gt, const std::vector<int>& lips) {
  double total = 0.0;
  for (int t = 0; t < pred.rows(); ++t) {
    double worst = 0.0;
    for (int v : lips) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += std::pow(pred(t, 3 * v + c) - gt(t, 3 * v + c), 2);
      worst = std::max(worst, std::sqrt(s));
    }
    total += worst;
  }
  return total / static_cast<double>(pred.rows());
}

inline double fdd(const Matrix& pred, const Matrix& gt, const std::vector<int>& upper) {
  auto std_of_norm = [](const Matrix& m, int v) {
    std::vector<double> norms;
    for (int t = 0; t < m.rows(); ++t) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += m(t, 3 * v + c) * m(t, 3 * v + c);
      norms.push_back(std::sqrt(s));
    }
    double mean = 0.0;
    for (double x : norms) mean += x;
    mean /= norms.size();
    double var = 0.0;
    for (double x : norms) var += (x - mean) * (x - mean);
    return std::sqrt(var / norms.size());
  };
  double total = 0.0;
  for (int v : upper) total += std::abs(std_of_norm(pred, v) - std_of_norm(gt, v));
  return total / static_cast<double>(upper.size());
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("diffspk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
