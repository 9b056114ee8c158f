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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "phama/nn/tensor.hpp"
#include "phama/rng.hpp"

namespace phama::nn {

// Train caches activations for backward and updates normalization statistics.
// Momentum is a gradient-free forward that still uses batch statistics (the
// momentum encoder sees the same distribution as the online one). Eval uses
// running statistics. Only Train-mode forwards write layer state, so eval
// forwards on a shared model are safe from multiple threads; backward is only
// valid after a Train forward.
enum class Mode { Train, Momentum, Eval };

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> w;
  std::vector<T> g;

  Param() = default;
  Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    size_t total = 1;
    for (int d : shape) total *= size_t(d);
    w.assign(total, T(0));
    g.assign(total, T(0));
  }
  size_t size() const { return w.size(); }
};

template <typename T>
using RowMat =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using BufferRef = std::pair<std::string, std::vector<T>*>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect(std::vector<Param<T>*>& out) { (void)out; }
  virtual void collect_buffers(std::vector<BufferRef<T>>& out) { (void)out; }
};

template <typename T>
void he_normal(Param<T>& p, size_t fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / double(fan_in));
  for (T& v : p.w) v = T(std * rng.normal());
}

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(const std::string& name, int in_c, int out_c, int k, int stride,
         int pad, bool bias, Rng rng)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
        weight_(name + ".weight", {out_c, in_c, k, k}),
        has_bias_(bias) {
    he_normal(weight_, size_t(in_c) * k * k, rng);
    if (bias) bias_ = Param<T>(name + ".bias", {out_c});
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.c != in_c_)
      throw DataError("conv " + weight_.name + ": expected " +
                      std::to_string(in_c_) + " input channels, got " +
                      std::to_string(x.c));
    const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
    if (oh < 1 || ow < 1)
      throw DataError("conv " + weight_.name + ": input " + x.shape_str() +
                      " too small for kernel");
    std::vector<T> col_local;
    std::vector<T>& col = mode == Mode::Train ? col_ : col_local;
    if (mode == Mode::Train) {
      in_n_ = x.n; in_h_ = x.h; in_w_ = x.w; out_h_ = oh; out_w_ = ow;
    }
    im2col(x, oh, ow, col);

    const int ckk = in_c_ * k_ * k_;
    const int cols = x.n * oh * ow;
    Tensor<T> y(x.n, out_c_, oh, ow);
    Eigen::Map<const RowMat<T>> w_map(weight_.w.data(), out_c_, ckk);
    Eigen::Map<const ColMat<T>> col_map(col.data(), ckk, cols);
    std::vector<T> y_buf(size_t(out_c_) * cols);
    Eigen::Map<RowMat<T>> y_map(y_buf.data(), out_c_, cols);
    y_map.noalias() = w_map * col_map;

    const size_t ohw = size_t(oh) * ow;
    for (int n = 0; n < x.n; ++n)
      for (int f = 0; f < out_c_; ++f) {
        const T* src = y_buf.data() + size_t(f) * cols + size_t(n) * ohw;
        T* dst = y.at(n, f);
        if (has_bias_) {
          const T b = bias_.w[size_t(f)];
          for (size_t i = 0; i < ohw; ++i) dst[i] = src[i] + b;
        } else {
          std::copy(src, src + ohw, dst);
        }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const int ckk = in_c_ * k_ * k_;
    const int cols = in_n_ * out_h_ * out_w_;
    const size_t ohw = size_t(out_h_) * out_w_;

    std::vector<T> dy_buf(size_t(out_c_) * cols);
    for (int n = 0; n < in_n_; ++n)
      for (int f = 0; f < out_c_; ++f)
        std::copy(dy.at(n, f), dy.at(n, f) + ohw,
                  dy_buf.data() + size_t(f) * cols + size_t(n) * ohw);
    Eigen::Map<const RowMat<T>> dy_map(dy_buf.data(), out_c_, cols);
    Eigen::Map<const ColMat<T>> col_map(col_.data(), ckk, cols);

    Eigen::Map<RowMat<T>> dw_map(weight_.g.data(), out_c_, ckk);
    dw_map.noalias() += dy_map * col_map.transpose();
    if (has_bias_) {
      // Fixed-order accumulation: vectorized reductions change their
      // summation order with the buffer's alignment, which breaks bitwise
      // run-to-run reproducibility.
      for (int f = 0; f < out_c_; ++f) {
        T acc = T(0);
        const T* row = dy_buf.data() + size_t(f) * cols;
        for (size_t i = 0; i < size_t(cols); ++i) acc += row[i];
        bias_.g[size_t(f)] += acc;
      }
    }

    Eigen::Map<const RowMat<T>> w_map(weight_.w.data(), out_c_, ckk);
    std::vector<T> dcol(size_t(ckk) * cols);
    Eigen::Map<ColMat<T>> dcol_map(dcol.data(), ckk, cols);
    dcol_map.noalias() = w_map.transpose() * dy_map;
    return col2im(dcol);
  }

  void collect(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

 private:
  void im2col(const Tensor<T>& x, int oh, int ow, std::vector<T>& col) const {
    const int ckk = in_c_ * k_ * k_;
    col.assign(size_t(ckk) * x.n * oh * ow, T(0));
    size_t j = 0;
    for (int n = 0; n < x.n; ++n)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++j) {
          T* dst = col.data() + j * ckk;
          for (int c = 0; c < in_c_; ++c) {
            const T* src = x.at(n, c);
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h) {
                dst += k_;
                continue;
              }
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = ox * stride_ - pad_ + kx;
                *dst++ = (ix < 0 || ix >= x.w) ? T(0) : src[iy * x.w + ix];
              }
            }
          }
        }
  }

  Tensor<T> col2im(const std::vector<T>& dcol) const {
    Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
    const int ckk = in_c_ * k_ * k_;
    size_t j = 0;
    for (int n = 0; n < in_n_; ++n)
      for (int oy = 0; oy < out_h_; ++oy)
        for (int ox = 0; ox < out_w_; ++ox, ++j) {
          const T* src = dcol.data() + j * ckk;
          for (int c = 0; c < in_c_; ++c) {
            T* dst = dx.at(n, c);
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= in_h_) {
                src += k_;
                continue;
              }
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = ox * stride_ - pad_ + kx;
                if (ix >= 0 && ix < in_w_) dst[iy * in_w_ + ix] += *src;
                ++src;
              }
            }
          }
        }
    return dx;
  }

  int in_c_, out_c_, k_, stride_, pad_;
  Param<T> weight_, bias_;
  bool has_bias_;
  int in_n_ = 0, in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
  std::vector<T> col_;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> y = x;
    for (T& v : y.v) v = v > T(0) ? v : T(0);
    if (mode == Mode::Train) {
      mask_.resize(x.size());
      for (size_t i = 0; i < x.size(); ++i) mask_[i] = x.v[i] > T(0);
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.size(); ++i)
      if (!mask_[i]) dx.v[i] = T(0);
    return dx;
  }

 private:
  std::vector<uint8_t> mask_;
};

template <typename T>
class MaxPool : public Layer<T> {
 public:
  MaxPool(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
    if (oh < 1 || ow < 1)
      throw DataError("maxpool: input " + x.shape_str() + " too small");
    Tensor<T> y(x.n, x.c, oh, ow);
    const bool cache = mode == Mode::Train;
    if (cache) {
      in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
      argmax_.assign(y.size(), 0);
    }
    size_t o = 0;
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < x.c; ++c) {
        const T* src = x.at(n, c);
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox, ++o) {
            T best = -std::numeric_limits<T>::infinity();
            int best_idx = -1;
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = ox * stride_ - pad_ + kx;
                if (ix < 0 || ix >= x.w) continue;
                const T v = src[iy * x.w + ix];
                if (v > best) {
                  best = v;
                  best_idx = iy * x.w + ix;
                }
              }
            }
            y.v[o] = best;
            if (cache) argmax_[o] = best_idx;
          }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
    const size_t per_plane = dy.plane();
    size_t o = 0;
    for (int n = 0; n < in_n_; ++n)
      for (int c = 0; c < in_c_; ++c) {
        T* dst = dx.at(n, c);
        for (size_t i = 0; i < per_plane; ++i, ++o)
          dst[argmax_[o]] += dy.v[o];
      }
    return dx;
  }

 private:
  int k_, stride_, pad_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<int> argmax_;
};

template <typename T>
class BatchNorm2d : public Layer<T> {
 public:
  BatchNorm2d(const std::string& name, int c)
      : name_(name), c_(c), gamma_(name + ".weight", {c}),
        beta_(name + ".bias", {c}),
        running_mean_(size_t(c), T(0)), running_var_(size_t(c), T(1)) {
    std::fill(gamma_.w.begin(), gamma_.w.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const size_t count = size_t(x.n) * x.h * x.w;
    const bool batch_stats = mode != Mode::Eval;
    const bool cache = mode == Mode::Train;

    std::vector<T> mean_local, var_local;
    if (batch_stats) {
      mean_local.assign(size_t(c_), T(0));
      var_local.assign(size_t(c_), T(0));
      for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
          const T* src = x.at(n, c);
          T s = T(0);
          for (size_t i = 0; i < x.plane(); ++i) s += src[i];
          mean_local[size_t(c)] += s;
        }
      for (T& m : mean_local) m /= T(count);
      for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
          const T* src = x.at(n, c);
          const T m = mean_local[size_t(c)];
          T s = T(0);
          for (size_t i = 0; i < x.plane(); ++i)
            s += (src[i] - m) * (src[i] - m);
          var_local[size_t(c)] += s;
        }
      for (T& v : var_local) v /= T(count);
      if (mode == Mode::Train) {
        const T unbias = count > 1 ? T(count) / T(count - 1) : T(1);
        for (int c = 0; c < c_; ++c) {
          running_mean_[size_t(c)] = T(0.9) * running_mean_[size_t(c)] +
                                     T(0.1) * mean_local[size_t(c)];
          running_var_[size_t(c)] = T(0.9) * running_var_[size_t(c)] +
                                    T(0.1) * var_local[size_t(c)] * unbias;
        }
      }
    }
    const std::vector<T>& m = batch_stats ? mean_local : running_mean_;
    const std::vector<T>& v = batch_stats ? var_local : running_var_;

    if (cache) {
      xhat_.resize(x.size());
      inv_std_.resize(size_t(c_));
      cached_n_ = x.n; cached_h_ = x.h; cached_w_ = x.w;
    }
    for (int c = 0; c < c_; ++c) {
      const T inv = T(1) / std::sqrt(v[size_t(c)] + T(kEps));
      if (cache) inv_std_[size_t(c)] = inv;
      const T g = gamma_.w[size_t(c)], b = beta_.w[size_t(c)],
              mu = m[size_t(c)];
      for (int n = 0; n < x.n; ++n) {
        const T* src = x.at(n, c);
        T* dst = y.at(n, c);
        T* xh =
            cache ? xhat_.data() + (size_t(n) * x.c + c) * x.plane() : nullptr;
        for (size_t i = 0; i < x.plane(); ++i) {
          const T h = (src[i] - mu) * inv;
          if (cache) xh[i] = h;
          dst[i] = g * h + b;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(cached_n_, c_, cached_h_, cached_w_);
    const size_t plane = size_t(cached_h_) * cached_w_;
    const T count = T(size_t(cached_n_) * plane);
    for (int c = 0; c < c_; ++c) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (int n = 0; n < cached_n_; ++n) {
        const T* d = dy.at(n, c);
        const T* xh = xhat_.data() + (size_t(n) * c_ + c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum_dy += d[i];
          sum_dy_xhat += d[i] * xh[i];
        }
      }
      gamma_.g[size_t(c)] += sum_dy_xhat;
      beta_.g[size_t(c)] += sum_dy;
      const T g = gamma_.w[size_t(c)], inv = inv_std_[size_t(c)];
      for (int n = 0; n < cached_n_; ++n) {
        const T* d = dy.at(n, c);
        const T* xh = xhat_.data() + (size_t(n) * c_ + c) * plane;
        T* out = dx.at(n, c);
        for (size_t i = 0; i < plane; ++i)
          out[i] =
              g * inv / count * (count * d[i] - sum_dy - xh[i] * sum_dy_xhat);
      }
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<BufferRef<T>>& out) override {
    out.emplace_back(name_ + ".running_mean", &running_mean_);
    out.emplace_back(name_ + ".running_var", &running_var_);
  }

 private:
  static constexpr double kEps = 1e-5;
  std::string name_;
  int c_;
  Param<T> gamma_, beta_;
  std::vector<T> running_mean_, running_var_;
  std::vector<T> xhat_, inv_std_;
  int cached_n_ = 0, cached_h_ = 0, cached_w_ = 0;
};

// Resizes to a fixed spatial size with half-pixel-centered bilinear sampling;
// exact pass-through when the size already matches.
template <typename T>
class BilinearResize : public Layer<T> {
 public:
  BilinearResize(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (mode == Mode::Train) {
      in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
    }
    if (x.h == out_h_ && x.w == out_w_) return x;
    Tensor<T> y(x.n, x.c, out_h_, out_w_);
    const double sy = double(x.h) / out_h_;
    const double sx = double(x.w) / out_w_;
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < x.c; ++c) {
        const T* src = x.at(n, c);
        T* dst = y.at(n, c);
        for (int oy = 0; oy < out_h_; ++oy) {
          auto [y0, y1, wy] = axis(oy, sy, x.h);
          for (int ox = 0; ox < out_w_; ++ox) {
            auto [x0, x1, wx] = axis(ox, sx, x.w);
            const double top = double(src[y0 * x.w + x0]) * (1 - wx) +
                               double(src[y0 * x.w + x1]) * wx;
            const double bot = double(src[y1 * x.w + x0]) * (1 - wx) +
                               double(src[y1 * x.w + x1]) * wx;
            dst[oy * out_w_ + ox] = T(top * (1 - wy) + bot * wy);
          }
        }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (in_h_ == out_h_ && in_w_ == out_w_) return dy;
    Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
    const double sy = double(in_h_) / out_h_;
    const double sx = double(in_w_) / out_w_;
    for (int n = 0; n < in_n_; ++n)
      for (int c = 0; c < in_c_; ++c) {
        const T* d = dy.at(n, c);
        T* dst = dx.at(n, c);
        for (int oy = 0; oy < out_h_; ++oy) {
          auto [y0, y1, wy] = axis(oy, sy, in_h_);
          for (int ox = 0; ox < out_w_; ++ox) {
            auto [x0, x1, wx] = axis(ox, sx, in_w_);
            const T g = d[oy * out_w_ + ox];
            dst[y0 * in_w_ + x0] += T((1 - wy) * (1 - wx)) * g;
            dst[y0 * in_w_ + x1] += T((1 - wy) * wx) * g;
            dst[y1 * in_w_ + x0] += T(wy * (1 - wx)) * g;
            dst[y1 * in_w_ + x1] += T(wy * wx) * g;
          }
        }
      }
    return dx;
  }

 private:
  struct AxisSample { int lo; int hi; double frac; };
  static AxisSample axis(int o, double scale, int in_dim) {
    double f = std::clamp((o + 0.5) * scale - 0.5, 0.0, double(in_dim - 1));
    int lo = int(f);
    return {lo, std::min(lo + 1, in_dim - 1), f - lo};
  }

  int out_h_, out_w_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

// Global average pool to a [N, C] matrix.
template <typename T>
class GlobalAvgPool {
 public:
  Mat<T> forward(const Tensor<T>& x, Mode mode) {
    if (mode == Mode::Train) {
      in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
    }
    Mat<T> y(x.n, x.c);
    const T inv = T(1) / T(x.plane());
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < x.c; ++c) {
        const T* src = x.at(n, c);
        T s = T(0);
        for (size_t i = 0; i < x.plane(); ++i) s += src[i];
        y.at(n, c) = s * inv;
      }
    return y;
  }
  Tensor<T> backward(const Mat<T>& dy) {
    Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
    const T inv = T(1) / T(size_t(in_h_) * in_w_);
    for (int n = 0; n < in_n_; ++n)
      for (int c = 0; c < in_c_; ++c) {
        const T g = dy.at(n, c) * inv;
        T* dst = dx.at(n, c);
        for (size_t i = 0; i < dx.plane(); ++i) dst[i] = g;
      }
    return dx;
  }

 private:
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

template <typename T>
class Linear {
 public:
  Linear(const std::string& name, int in_dim, int out_dim, Rng rng)
      : in_(in_dim), out_(out_dim),
        weight_(name + ".weight", {out_dim, in_dim}),
        bias_(name + ".bias", {out_dim}) {
    he_normal(weight_, size_t(in_dim), rng);
  }

  Mat<T> forward(const Mat<T>& x, Mode mode) {
    if (x.cols != in_)
      throw DataError("linear " + weight_.name + ": expected " +
                      std::to_string(in_) + " features, got " +
                      std::to_string(x.cols));
    if (mode == Mode::Train) x_ = x;
    Mat<T> y(x.rows, out_);
    Eigen::Map<const RowMat<T>> xm(x.v.data(), x.rows, x.cols);
    Eigen::Map<const RowMat<T>> wm(weight_.w.data(), out_, in_);
    Eigen::Map<RowMat<T>> ym(y.v.data(), y.rows, y.cols);
    ym.noalias() = xm * wm.transpose();
    for (int r = 0; r < y.rows; ++r)
      for (int c = 0; c < y.cols; ++c) y.at(r, c) += bias_.w[size_t(c)];
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Eigen::Map<const RowMat<T>> dym(dy.v.data(), dy.rows, dy.cols);
    Eigen::Map<const RowMat<T>> xm(x_.v.data(), x_.rows, x_.cols);
    Eigen::Map<RowMat<T>> dwm(weight_.g.data(), out_, in_);
    dwm.noalias() += dym.transpose() * xm;
    for (int r = 0; r < dy.rows; ++r)
      for (int c = 0; c < dy.cols; ++c) bias_.g[size_t(c)] += dy.at(r, c);
    Mat<T> dx(dy.rows, in_);
    Eigen::Map<const RowMat<T>> wm(weight_.w.data(), out_, in_);
    Eigen::Map<RowMat<T>> dxm(dx.v.data(), dx.rows, dx.cols);
    dxm.noalias() = dym * wm;
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  int in_, out_;
  Param<T> weight_, bias_;
  Mat<T> x_;
};

// Normalizes matrix rows to unit L2 norm. Rows with norm below 1e-12 cannot
// be normalized and are a contract violation upstream.
template <typename T>
class RowL2Normalize {
 public:
  Mat<T> forward(const Mat<T>& x, Mode mode) {
    const bool cache = mode == Mode::Train;
    Mat<T> y = x;
    if (cache) norms_.resize(size_t(x.rows));
    for (int r = 0; r < x.rows; ++r) {
      T s = T(0);
      for (int c = 0; c < x.cols; ++c) s += x.at(r, c) * x.at(r, c);
      const T norm = std::sqrt(s);
      if (norm < T(1e-12))
        throw NumericError("degenerate embedding: row norm below 1e-12");
      if (cache) norms_[size_t(r)] = norm;
      for (int c = 0; c < x.cols; ++c) y.at(r, c) /= norm;
    }
    if (cache) y_ = y;
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx(dy.rows, dy.cols);
    for (int r = 0; r < dy.rows; ++r) {
      T dot = T(0);
      for (int c = 0; c < dy.cols; ++c) dot += y_.at(r, c) * dy.at(r, c);
      for (int c = 0; c < dy.cols; ++c)
        dx.at(r, c) = (dy.at(r, c) - y_.at(r, c) * dot) / norms_[size_t(r)];
    }
    return dx;
  }

 private:
  std::vector<T> norms_;
  Mat<T> y_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  void add(std::unique_ptr<Layer<T>> layer) {
    layers_.push_back(std::move(layer));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> cur = x;
    for (auto& l : layers_) cur = l->forward(cur, mode);
    return cur;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      cur = (*it)->backward(cur);
    return cur;
  }
  void collect(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->collect(out);
  }
  void collect_buffers(std::vector<BufferRef<T>>& out) override {
    for (auto& l : layers_) l->collect_buffers(out);
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace phama::nn
