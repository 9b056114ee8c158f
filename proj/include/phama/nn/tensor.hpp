// Copyright (c) 2026, the phama authors. All rights reserved.
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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phama/errors.hpp"
#include "phama/image.hpp"

namespace phama::nn {

// Dense NCHW activation tensor. T is float in training and double in the
// finite-difference checks.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, T(0)) {}

  size_t size() const { return v.size(); }
  size_t plane() const { return size_t(h) * w; }
  size_t sample() const { return size_t(c) * h * w; }
  T* at(int in, int ic) { return v.data() + size_t(in) * sample() + size_t(ic) * plane(); }
  const T* at(int in, int ic) const {
    return v.data() + size_t(in) * sample() + size_t(ic) * plane();
  }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

// Row-major matrix for logits and patch embeddings.
template <typename T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(size_t(r) * c, T(0)) {}
  T* row(int r) { return v.data() + size_t(r) * cols; }
  const T* row(int r) const { return v.data() + size_t(r) * cols; }
  T& at(int r, int c) { return v[size_t(r) * cols + c]; }
  T at(int r, int c) const { return v[size_t(r) * cols + c]; }
};

template <typename T>
Tensor<T> to_tensor(const std::vector<const Image*>& batch) {
  if (batch.empty()) throw DataError("to_tensor: empty batch");
  const Image& first = *batch.front();
  Tensor<T> t(int(batch.size()), first.channels, first.height, first.width);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i]->same_shape(first))
      throw DataError("to_tensor: mixed image shapes in batch");
    T* dst = t.v.data() + i * t.sample();
    for (size_t j = 0; j < t.sample(); ++j) dst[j] = T(batch[i]->values[j]);
  }
  return t;
}

}  // namespace phama::nn
