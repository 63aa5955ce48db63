// Copyright 2026 The DNAMite Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dnamite/common.hpp"

namespace dnamite {

// Dense layer y = x W + b, with W stored in_dim x out_dim.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const { return weight.rows; }
  std::size_t out_dim() const { return weight.cols; }
  bool operator==(const DenseLayer&) const = default;
};

// Shape-function network: ReLU on hidden layers, linear output.
struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  bool operator==(const Mlp&) const = default;

  void Validate(const std::string& where, std::size_t expected_in,
                std::size_t expected_out) const {
    Require(!layers.empty(), where + ": network has no layers");
    Require(in_dim() == expected_in, where + ": network input dimension mismatch");
    Require(out_dim() == expected_out,
            where + ": network output dimension must equal the number of times");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      Require(layer.bias.size() == layer.out_dim(),
              where + ": bias length does not match layer width");
      if (l > 0) {
        Require(layers[l - 1].out_dim() == layer.in_dim(),
                where + ": layer dimensions do not chain");
      }
      for (double v : layer.weight.data) {
        Require(std::isfinite(v), where + ": non-finite network weight");
      }
      for (double v : layer.bias) {
        Require(std::isfinite(v), where + ": non-finite network bias");
      }
    }
  }

  // Zeroed copy with the same shape; used as a gradient accumulator.
  Mlp ZerosLike() const {
    Mlp z;
    for (const auto& layer : layers) {
      z.layers.push_back(
          {Matrix(layer.weight.rows, layer.weight.cols), std::vector<double>(layer.bias.size())});
    }
    return z;
  }
};

// Weights and biases uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename Rng>
Mlp MakeMlp(std::size_t in_dim, const std::vector<int>& hidden,
            std::size_t out_dim, Rng& rng) {
  Mlp net;
  std::size_t prev = in_dim;
  auto add = [&](std::size_t width) {
    DenseLayer layer{Matrix(prev, width), std::vector<double>(width, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (double& v : layer.weight.data) v = uniform(rng);
    for (double& v : layer.bias) v = uniform(rng);
    net.layers.push_back(std::move(layer));
    prev = width;
  };
  for (int h : hidden) add(static_cast<std::size_t>(h));
  add(out_dim);
  return net;
}

// Activations of a batched forward pass, kept for the backward pass.
// activations[0] is the input; activations[l+1] the (post-ReLU for hidden)
// output of layer l.
struct MlpTrace {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

inline MlpTrace MlpForward(const Mlp& net, Matrix input) {
  MlpTrace trace;
  trace.activations.reserve(net.layers.size() + 1);
  trace.activations.push_back(std::move(input));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const Matrix& x = trace.activations.back();
    const std::size_t rows = x.rows;
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    Matrix y(rows, out);
    for (std::size_t r = 0; r < rows; ++r) {
      double* yr = y.data.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = layer.bias[o];
      const double* xr = x.data.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        const double* wi = layer.weight.data.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
      }
    }
    if (l + 1 < net.layers.size()) {
      for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    }
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

// Adds parameter gradients into `grad` and returns d(loss)/d(input), given
// d(loss)/d(output) for every row of the traced batch.
inline Matrix MlpBackward(const Mlp& net, const MlpTrace& trace,
                          Matrix grad_output, Mlp& grad) {
  Matrix delta = std::move(grad_output);
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& layer = net.layers[l];
    auto& g = grad.layers[l];
    const Matrix& x = trace.activations[l];
    const std::size_t rows = x.rows;
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.data.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) g.bias[o] += dr[o];
      const double* xr = x.data.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        double* gi = g.weight.data.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) gi[o] += xi * dr[o];
      }
    }
    Matrix prev(rows, in);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.data.data() + r * out;
      double* pr = prev.data.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        const double* wi = layer.weight.data.data() + i * out;
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += wi[o] * dr[o];
        pr[i] = s;
      }
    }
    // ReLU mask of the layer below (the input layer has none).
    if (l > 0) {
      for (std::size_t k = 0; k < prev.data.size(); ++k) {
        if (x.data[k] <= 0.0) prev.data[k] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace dnamite
