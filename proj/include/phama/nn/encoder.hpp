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

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "phama/nn/layers.hpp"

namespace phama::nn {

struct EncoderSpec {
  std::string arch = "small_convnet";  // small_convnet | resnet_style
  int depth = 18;                      // resnet_style: 18 | 34
  int conv_blocks = 4;                 // small_convnet block count
  int width = 64;                      // small_convnet channel width
  int num_classes = 0;
  std::pair<int, int> fusion_levels = {3, 4};
  int proj_dim = 128;
  int in_channels = 3;

  int num_levels() const {
    return arch == "resnet_style" ? 4 : conv_blocks;
  }
  void validate() const;
};

inline void EncoderSpec::validate() const {
  if (arch != "small_convnet" && arch != "resnet_style")
    throw ConfigError("model.arch", "unknown architecture '" + arch + "'");
  if (arch == "resnet_style" && depth != 18 && depth != 34)
    throw ConfigError("model.depth",
                      "resnet_style depth must be 18 or 34, got " +
                          std::to_string(depth));
  if (arch == "small_convnet" && conv_blocks < 1)
    throw ConfigError("model.conv_blocks", "need at least one block");
  if (width < 1) throw ConfigError("model.width", "width must be positive");
  if (num_classes < 2)
    throw ConfigError("model.num_classes", "need at least two classes");
  if (proj_dim < 1)
    throw ConfigError("model.proj_dim", "projection dim must be positive");
  if (in_channels != 1 && in_channels != 3)
    throw ConfigError("model.in_channels", "expected 1 or 3 channels");
  const auto [a, b] = fusion_levels;
  if (a >= b || a < 1 || b > num_levels())
    throw ConfigError("model.fusion_levels",
                      "levels must be distinct, ascending, and within [1," +
                          std::to_string(num_levels()) + "]; got (" +
                          std::to_string(a) + "," + std::to_string(b) + ")");
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw DataError("channel concat: shape mismatch " + a.shape_str() +
                    " vs " + b.shape_str());
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  for (int n = 0; n < a.n; ++n) {
    std::copy(a.at(n, 0), a.at(n, 0) + size_t(a.c) * a.plane(), out.at(n, 0));
    std::copy(b.at(n, 0), b.at(n, 0) + size_t(b.c) * b.plane(),
              out.at(n, a.c));
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, int c_a) {
  Tensor<T> a(x.n, c_a, x.h, x.w), b(x.n, x.c - c_a, x.h, x.w);
  for (int n = 0; n < x.n; ++n) {
    std::copy(x.at(n, 0), x.at(n, 0) + size_t(c_a) * x.plane(), a.at(n, 0));
    std::copy(x.at(n, c_a), x.at(n, c_a) + size_t(x.c - c_a) * x.plane(),
              b.at(n, 0));
  }
  return {std::move(a), std::move(b)};
}

// Resizes the deeper level to the shallower level's spatial size and stacks
// the two along channels. Levels are 1-indexed from the input side.
template <typename T>
Tensor<T> fuse_levels(const std::vector<Tensor<T>>& pyramid,
                      std::pair<int, int> levels) {
  const auto [a, b] = levels;
  if (a >= b)
    throw ConfigError("model.fusion_levels", "levels must be ascending");
  if (a < 1 || b > int(pyramid.size()))
    throw DataError("fusion level missing: have " +
                    std::to_string(pyramid.size()) + " levels, asked for (" +
                    std::to_string(a) + "," + std::to_string(b) + ")");
  const Tensor<T>& fa = pyramid[size_t(a - 1)];
  const Tensor<T>& fb = pyramid[size_t(b - 1)];
  BilinearResize<T> resize(fa.h, fa.w);
  return concat_channels(fa, resize.forward(fb, Mode::Eval));
}

// Two-layer location-wise map shared across patch positions, followed by row
// L2 normalization. One row per spatial location per sample, row-major over
// (sample, y, x).
template <typename T>
class ProjectionHead {
 public:
  ProjectionHead(int in_ch, int out_dim, Rng rng)
      : in_ch_(in_ch),
        fc1_("proj.fc1", in_ch, in_ch, rng.child("proj_fc1", 0, 0)),
        fc2_("proj.fc2", in_ch, out_dim, rng.child("proj_fc2", 0, 0)) {}

  Mat<T> forward(const Tensor<T>& fused, Mode mode) {
    if (mode == Mode::Train) {
      n_ = fused.n; h_ = fused.h; w_ = fused.w;
    }
    Mat<T> x = flatten(fused);
    Mat<T> h = fc1_.forward(x, mode);
    if (mode == Mode::Train) {
      mask_.resize(h.v.size());
      for (size_t i = 0; i < h.v.size(); ++i) mask_[i] = h.v[i] > T(0);
    }
    for (T& v : h.v) v = v > T(0) ? v : T(0);
    return norm_.forward(fc2_.forward(h, mode), mode);
  }

  Tensor<T> backward(const Mat<T>& d_emb) {
    Mat<T> dh = fc2_.backward(norm_.backward(d_emb));
    for (size_t i = 0; i < dh.v.size(); ++i)
      if (!mask_[i]) dh.v[i] = T(0);
    return unflatten(fc1_.backward(dh));
  }

  void collect(std::vector<Param<T>*>& out) {
    fc1_.collect(out);
    fc2_.collect(out);
  }

 private:
  Mat<T> flatten(const Tensor<T>& t) const {
    Mat<T> m(t.n * t.h * t.w, t.c);
    for (int n = 0; n < t.n; ++n)
      for (int c = 0; c < t.c; ++c) {
        const T* src = t.at(n, c);
        for (size_t p = 0; p < t.plane(); ++p)
          m.at(n * int(t.plane()) + int(p), c) = src[p];
      }
    return m;
  }
  Tensor<T> unflatten(const Mat<T>& m) const {
    Tensor<T> t(n_, in_ch_, h_, w_);
    for (int n = 0; n < t.n; ++n)
      for (int c = 0; c < t.c; ++c) {
        T* dst = t.at(n, c);
        for (size_t p = 0; p < t.plane(); ++p)
          dst[p] = m.at(n * int(t.plane()) + int(p), c);
      }
    return t;
  }

  int in_ch_, n_ = 0, h_ = 0, w_ = 0;
  Linear<T> fc1_, fc2_;
  RowL2Normalize<T> norm_;
  std::vector<uint8_t> mask_;
};

template <typename T>
class BasicBlock : public Layer<T> {
 public:
  BasicBlock(const std::string& name, int in_c, int out_c, int stride, Rng rng)
      : conv1_(name + ".conv1", in_c, out_c, 3, stride, 1, false,
               rng.child("c1", 0, 0)),
        bn1_(name + ".bn1", out_c),
        conv2_(name + ".conv2", out_c, out_c, 3, 1, 1, false,
               rng.child("c2", 0, 0)),
        bn2_(name + ".bn2", out_c),
        has_down_(stride != 1 || in_c != out_c) {
    if (has_down_) {
      down_conv_ = std::make_unique<Conv2d<T>>(name + ".down", in_c, out_c, 1,
                                               stride, 0, false,
                                               rng.child("cd", 0, 0));
      down_bn_ = std::make_unique<BatchNorm2d<T>>(name + ".down_bn", out_c);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> h = relu1_.forward(bn1_.forward(conv1_.forward(x, mode), mode),
                                 mode);
    Tensor<T> m = bn2_.forward(conv2_.forward(h, mode), mode);
    Tensor<T> s = has_down_
                      ? down_bn_->forward(down_conv_->forward(x, mode), mode)
                      : x;
    for (size_t i = 0; i < m.size(); ++i) m.v[i] += s.v[i];
    return relu_out_.forward(m, mode);
  }

  void collect_buffers(std::vector<BufferRef<T>>& out) override {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
    if (has_down_) down_bn_->collect_buffers(out);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dm = relu_out_.backward(dy);
    Tensor<T> dx = conv1_.backward(
        bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(dm)))));
    Tensor<T> ds =
        has_down_ ? down_conv_->backward(down_bn_->backward(dm)) : dm;
    for (size_t i = 0; i < dx.size(); ++i) dx.v[i] += ds.v[i];
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) override {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    if (has_down_) {
      down_conv_->collect(out);
      down_bn_->collect(out);
    }
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  ReLU<T> relu1_, relu_out_;
  bool has_down_;
  std::unique_ptr<Conv2d<T>> down_conv_;
  std::unique_ptr<BatchNorm2d<T>> down_bn_;
};

template <typename T>
struct ForwardResult {
  Mat<T> logits;
  std::vector<Tensor<T>> pyramid;
  Tensor<T> fused;
  Mat<T> embeddings;  // (N·P) × D, unit rows
  int patches = 0;
};

// Hierarchical encoder: a chain of stages whose outputs form the feature
// pyramid, a global-average-pool + linear classifier on the deepest level,
// and a patch projection path over two fused levels.
template <typename T>
class Encoder {
 public:
  Encoder(const EncoderSpec& spec, Rng rng) : spec_(spec) {
    spec_.validate();
    if (spec_.arch == "small_convnet")
      build_small(rng);
    else
      build_resnet(rng);
    const int fused_channels =
        stage_channels_[size_t(spec_.fusion_levels.first - 1)] +
        stage_channels_[size_t(spec_.fusion_levels.second - 1)];
    head_ = std::make_unique<ProjectionHead<T>>(fused_channels, spec_.proj_dim,
                                                rng.child("proj", 0, 0));
    classifier_ = std::make_unique<Linear<T>>(
        "classifier", stage_channels_.back(), spec_.num_classes,
        rng.child("classifier", 0, 0));
  }

  const EncoderSpec& spec() const { return spec_; }

  ForwardResult<T> forward(const Tensor<T>& x, Mode mode,
                           bool with_embeddings) {
    check_input(x);
    ForwardResult<T> r;
    Tensor<T> cur = pre_ ? pre_->forward(x, mode) : x;
    for (auto& s : stages_) {
      cur = s->forward(cur, mode);
      r.pyramid.push_back(cur);
    }
    r.logits = classifier_->forward(gap_.forward(r.pyramid.back(), mode), mode);
    if (with_embeddings) {
      const auto [a, b] = spec_.fusion_levels;
      const Tensor<T>& fa = r.pyramid[size_t(a - 1)];
      const Tensor<T>& fb = r.pyramid[size_t(b - 1)];
      if (mode == Mode::Train) {
        resize_ = std::make_unique<BilinearResize<T>>(fa.h, fa.w);
        r.fused = concat_channels(fa, resize_->forward(fb, mode));
        had_embeddings_ = true;
      } else {
        BilinearResize<T> local_resize(fa.h, fa.w);
        r.fused = concat_channels(fa, local_resize.forward(fb, mode));
      }
      r.embeddings = head_->forward(r.fused, mode);
      r.patches = fa.h * fa.w;
    } else if (mode == Mode::Train) {
      had_embeddings_ = false;
    }
    return r;
  }

  // d_embeddings may be empty when the last forward ran without the
  // projection path. Returns the gradient with respect to the input batch.
  Tensor<T> backward(const Mat<T>& d_logits, const Mat<T>& d_embeddings) {
    std::vector<Tensor<T>> level_grads(stages_.size());
    Tensor<T> d_last = gap_.backward(classifier_->backward(d_logits));
    accumulate(level_grads[stages_.size() - 1], d_last);

    if (had_embeddings_ && d_embeddings.rows > 0) {
      const auto [a, b] = spec_.fusion_levels;
      Tensor<T> d_fused = head_->backward(d_embeddings);
      const int c_a = stage_channels_[size_t(a - 1)];
      auto [d_fa, d_fb_resized] = split_channels(d_fused, c_a);
      accumulate(level_grads[size_t(a - 1)], d_fa);
      accumulate(level_grads[size_t(b - 1)], resize_->backward(d_fb_resized));
    }

    Tensor<T> carry;
    for (size_t i = stages_.size(); i-- > 0;) {
      Tensor<T>& d = level_grads[i];
      if (carry.size() > 0) accumulate(d, carry);
      carry = stages_[i]->backward(d);
    }
    if (pre_) carry = pre_->backward(carry);
    return carry;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    if (pre_) pre_->collect(out);
    for (auto& s : stages_) s->collect(out);
    classifier_->collect(out);
    head_->collect(out);
    return out;
  }

  void zero_grad() {
    for (Param<T>* p : params()) std::fill(p->g.begin(), p->g.end(), T(0));
  }

  // Named non-parameter state (normalization running statistics).
  std::vector<BufferRef<T>> buffers() {
    std::vector<BufferRef<T>> out;
    if (pre_) pre_->collect_buffers(out);
    for (auto& s : stages_) s->collect_buffers(out);
    return out;
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.c != spec_.in_channels)
      throw DataError("encoder expects " + std::to_string(spec_.in_channels) +
                      "-channel input, got " + x.shape_str());
    const int div = spec_.arch == "resnet_style" ? 32 : (1 << spec_.conv_blocks);
    if (x.h < div || x.w < div || x.h % div != 0 || x.w % div != 0)
      throw DataError("encoder expects input height and width to be positive "
                      "multiples of " + std::to_string(div) + ", got " +
                      std::to_string(x.h) + "x" + std::to_string(x.w));
  }

  static void accumulate(Tensor<T>& acc, const Tensor<T>& g) {
    if (acc.size() == 0) {
      acc = g;
      return;
    }
    for (size_t i = 0; i < acc.size(); ++i) acc.v[i] += g.v[i];
  }

  void build_small(Rng& rng) {
    int in_c = spec_.in_channels;
    for (int i = 0; i < spec_.conv_blocks; ++i) {
      auto block = std::make_unique<Sequential<T>>();
      const std::string name = "block" + std::to_string(i + 1);
      block->add(std::make_unique<Conv2d<T>>(name + ".conv", in_c,
                                             spec_.width, 3, 1, 1, true,
                                             rng.child(name, i, 0)));
      block->add(std::make_unique<ReLU<T>>());
      block->add(std::make_unique<MaxPool<T>>(2, 2, 0));
      stages_.push_back(std::move(block));
      stage_channels_.push_back(spec_.width);
      in_c = spec_.width;
    }
  }

  void build_resnet(Rng& rng) {
    const std::vector<int> counts =
        spec_.depth == 18 ? std::vector<int>{2, 2, 2, 2}
                          : std::vector<int>{3, 4, 6, 3};
    pre_ = std::make_unique<Sequential<T>>();
    pre_->add(std::make_unique<Conv2d<T>>("stem.conv", spec_.in_channels, 64,
                                          7, 2, 3, false,
                                          rng.child("stem", 0, 0)));
    pre_->add(std::make_unique<BatchNorm2d<T>>("stem.bn", 64));
    pre_->add(std::make_unique<ReLU<T>>());
    pre_->add(std::make_unique<MaxPool<T>>(3, 2, 1));

    int in_c = 64;
    for (int t = 0; t < 4; ++t) {
      const int out_c = 64 << t;
      auto stage = std::make_unique<Sequential<T>>();
      for (int k = 0; k < counts[size_t(t)]; ++k) {
        const std::string name = "stage" + std::to_string(t + 1) + ".block" +
                                 std::to_string(k);
        const int stride = (t > 0 && k == 0) ? 2 : 1;
        stage->add(std::make_unique<BasicBlock<T>>(name, in_c, out_c, stride,
                                                   rng.child(name, t, k)));
        in_c = out_c;
      }
      stages_.push_back(std::move(stage));
      stage_channels_.push_back(out_c);
    }
  }

  EncoderSpec spec_;
  std::unique_ptr<Sequential<T>> pre_;
  std::vector<std::unique_ptr<Layer<T>>> stages_;
  std::vector<int> stage_channels_;
  std::unique_ptr<Linear<T>> classifier_;
  std::unique_ptr<ProjectionHead<T>> head_;
  std::unique_ptr<BilinearResize<T>> resize_;
  GlobalAvgPool<T> gap_;
  bool had_embeddings_ = false;
};

}  // namespace phama::nn
