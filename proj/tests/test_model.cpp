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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "phama/errors.hpp"
#include "phama/nn/encoder.hpp"
#include "phama/nn/layers.hpp"
#include "phama/nn/tensor.hpp"
#include "phama/rng.hpp"

using namespace phama;
using namespace phama::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(int n, int c, int h, int w, Rng& rng,
                        double scale = 1.0) {
  Tensor<T> t(n, c, h, w);
  for (auto& v : t.v) v = T(scale * rng.normal());
  return t;
}

EncoderSpec tiny_spec() {
  EncoderSpec s;
  s.arch = "small_convnet";
  s.conv_blocks = 2;
  s.width = 4;
  s.num_classes = 3;
  s.fusion_levels = {1, 2};
  s.proj_dim = 5;
  return s;
}

}  // namespace

TEST_CASE("small_convnet pyramid spatial sizes halve per block") {
  EncoderSpec spec;
  spec.num_classes = 5;
  Encoder<float> enc(spec, Rng(7));
  Rng rng(1);
  Tensor<float> x = random_tensor<float>(3, 3, 32, 32, rng, 0.3);
  auto r = enc.forward(x, Mode::Eval, true);

  REQUIRE(r.pyramid.size() == 4);
  const int expect[4] = {16, 8, 4, 2};
  for (int i = 0; i < 4; ++i) {
    CHECK(r.pyramid[size_t(i)].h == expect[i]);
    CHECK(r.pyramid[size_t(i)].w == expect[i]);
    CHECK(r.pyramid[size_t(i)].c == 64);
    for (float v : r.pyramid[size_t(i)].v) CHECK(std::isfinite(v));
  }
  CHECK(r.logits.rows == 3);
  CHECK(r.logits.cols == 5);
  CHECK(r.fused.c == 128);
  CHECK(r.fused.h == 4);
  CHECK(r.patches == 16);
  CHECK(r.embeddings.rows == 3 * 16);
  CHECK(r.embeddings.cols == 128);
}

TEST_CASE("residual encoder level sizes on a 224 input") {
  EncoderSpec spec;
  spec.arch = "resnet_style";
  spec.depth = 18;
  spec.num_classes = 7;
  Encoder<float> enc(spec, Rng(3));
  Rng rng(5);
  Tensor<float> x = random_tensor<float>(1, 3, 224, 224, rng, 0.2);
  auto r = enc.forward(x, Mode::Eval, false);

  const int sizes[4] = {56, 28, 14, 7};
  const int chans[4] = {64, 128, 256, 512};
  REQUIRE(r.pyramid.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.pyramid[size_t(i)].h == sizes[i]);
    CHECK(r.pyramid[size_t(i)].w == sizes[i]);
    CHECK(r.pyramid[size_t(i)].c == chans[i]);
  }
  CHECK(r.logits.cols == 7);
  CHECK(r.embeddings.rows == 0);
}

TEST_CASE("zeroed classifier head yields all-zero logits") {
  EncoderSpec spec = tiny_spec();
  Encoder<float> enc(spec, Rng(11));
  for (Param<float>* p : enc.params())
    if (p->name == "classifier.weight" || p->name == "classifier.bias")
      std::fill(p->w.begin(), p->w.end(), 0.0f);
  Rng rng(2);
  Tensor<float> x = random_tensor<float>(2, 3, 4, 4, rng);
  auto r = enc.forward(x, Mode::Eval, false);
  for (float v : r.logits.v) CHECK(v == 0.0f);
}

TEST_CASE("level fusion resizes the deeper map and stacks channels") {
  Rng rng(13);
  std::vector<Tensor<float>> pyr;
  pyr.push_back(random_tensor<float>(2, 64, 8, 8, rng));
  pyr.push_back(random_tensor<float>(2, 128, 6, 6, rng));
  pyr.push_back(random_tensor<float>(2, 256, 4, 4, rng));
  pyr.push_back(random_tensor<float>(2, 512, 2, 2, rng));

  Tensor<float> fused = fuse_levels(pyr, {3, 4});
  CHECK(fused.c == 768);
  CHECK(fused.h == 4);
  CHECK(fused.w == 4);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 256; ++c)
      for (size_t i = 0; i < fused.plane(); ++i)
        CHECK(fused.at(n, c)[i] == pyr[2].at(n, c)[i]);

  CHECK_THROWS_AS(fuse_levels(pyr, {3, 5}), DataError);
  CHECK_THROWS_AS(fuse_levels(pyr, {4, 3}), ConfigError);
}

TEST_CASE("fusing equal-size levels is a pure channel concat") {
  Rng rng(17);
  std::vector<Tensor<float>> pyr;
  pyr.push_back(random_tensor<float>(1, 3, 5, 5, rng));
  pyr.push_back(random_tensor<float>(1, 2, 5, 5, rng));
  Tensor<float> fused = fuse_levels(pyr, {1, 2});
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < fused.plane(); ++i)
      CHECK(fused.at(0, 3 + c)[i] == pyr[1].at(0, c)[i]);
}

TEST_CASE("early fusion pairs used by the hierarchy sweep are accepted") {
  for (auto levels : {std::pair<int, int>{1, 2}, {2, 3}, {3, 4}}) {
    EncoderSpec spec;
    spec.num_classes = 4;
    spec.fusion_levels = levels;
    Encoder<float> enc(spec, Rng(19));
    Rng rng(23);
    Tensor<float> x = random_tensor<float>(2, 3, 32, 32, rng, 0.3);
    auto r = enc.forward(x, Mode::Eval, true);
    const int expect_hw = 32 >> levels.first;
    CHECK(r.patches == expect_hw * expect_hw);
    CHECK(r.embeddings.rows == 2 * r.patches);
  }
}

TEST_CASE("fusion level validation rejects bad pairs") {
  EncoderSpec spec;
  spec.num_classes = 4;
  spec.fusion_levels = {4, 4};
  CHECK_THROWS_AS(Encoder<float>(spec, Rng(1)), ConfigError);
  spec.fusion_levels = {3, 5};
  CHECK_THROWS_AS(Encoder<float>(spec, Rng(1)), ConfigError);
  spec.fusion_levels = {0, 2};
  CHECK_THROWS_AS(Encoder<float>(spec, Rng(1)), ConfigError);
  spec.fusion_levels = {3, 4};
  spec.arch = "transformer";
  CHECK_THROWS_AS(Encoder<float>(spec, Rng(1)), ConfigError);
}

TEST_CASE("bilinear resize to the same size is the identity") {
  Rng rng(29);
  Tensor<float> x = random_tensor<float>(2, 3, 7, 5, rng);
  BilinearResize<float> same(7, 5);
  Tensor<float> y = same.forward(x, Mode::Eval);
  REQUIRE(y.same_shape(x));
  for (size_t i = 0; i < x.size(); ++i) CHECK(y.v[i] == x.v[i]);
}

TEST_CASE("bilinear downsample by two averages each 2x2 cell") {
  Tensor<float> x(1, 1, 4, 4);
  std::iota(x.v.begin(), x.v.end(), 0.0f);
  BilinearResize<float> down(2, 2);
  Tensor<float> y = down.forward(x, Mode::Eval);
  CHECK(y.at(0, 0)[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(y.at(0, 0)[1] == doctest::Approx((2 + 3 + 6 + 7) / 4.0));
  CHECK(y.at(0, 0)[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("patch embedding rows are unit length") {
  EncoderSpec spec;
  spec.num_classes = 4;
  Encoder<float> enc(spec, Rng(31));
  Rng rng(37);
  Tensor<float> x = random_tensor<float>(2, 3, 32, 32, rng, 0.4);
  auto r = enc.forward(x, Mode::Train, true);
  for (int row = 0; row < r.embeddings.rows; ++row) {
    double s = 0;
    for (int c = 0; c < r.embeddings.cols; ++c)
      s += double(r.embeddings.at(row, c)) * r.embeddings.at(row, c);
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-5);
  }
}

TEST_CASE("all-zero patch features cannot be embedded") {
  ProjectionHead<float> head(6, 4, Rng(41));
  Tensor<float> zero(1, 6, 2, 2);
  CHECK_THROWS_WITH_AS(head.forward(zero, Mode::Eval),
                       doctest::Contains("degenerate embedding"),
                       NumericError);
}

TEST_CASE("projection commutes with spatial permutation of its input") {
  const int C = 7, H = 2, W = 3, P = H * W, D = 4;
  ProjectionHead<double> head(C, D, Rng(43));
  Rng rng(47);
  Tensor<double> x = random_tensor<double>(1, C, H, W, rng);
  Mat<double> base = head.forward(x, Mode::Eval);

  Rng perm_rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> perm(P);
    std::iota(perm.begin(), perm.end(), 0);
    perm_rng.shuffle(perm.begin(), perm.end());

    Tensor<double> shuffled(1, C, H, W);
    for (int c = 0; c < C; ++c)
      for (int p = 0; p < P; ++p)
        shuffled.at(0, c)[perm[size_t(p)]] = x.at(0, c)[p];
    Mat<double> out = head.forward(shuffled, Mode::Eval);
    for (int p = 0; p < P; ++p)
      for (int d = 0; d < D; ++d)
        CHECK(out.at(perm[size_t(p)], d) ==
              doctest::Approx(base.at(p, d)).epsilon(1e-12));
  }
  // Distinct locations produce distinct unit rows.
  for (int p = 1; p < P; ++p) {
    double diff = 0;
    for (int d = 0; d < D; ++d)
      diff += std::abs(base.at(p, d) - base.at(0, d));
    CHECK(diff > 1e-6);
  }
}

TEST_CASE("embedding geometry depends only on the spec and input size") {
  EncoderSpec spec = tiny_spec();
  Encoder<float> enc(spec, Rng(59));
  Rng rng(61);
  Tensor<float> a = random_tensor<float>(2, 3, 4, 4, rng);
  Tensor<float> b = random_tensor<float>(5, 3, 4, 4, rng, 3.0);
  auto ra = enc.forward(a, Mode::Eval, true);
  auto rb = enc.forward(b, Mode::Eval, true);
  CHECK(ra.patches == rb.patches);
  CHECK(ra.embeddings.cols == rb.embeddings.cols);
  CHECK(rb.embeddings.rows == 5 * rb.patches);
}

TEST_CASE("wrong input geometry reports the expected size") {
  EncoderSpec spec;
  spec.num_classes = 4;
  Encoder<float> enc(spec, Rng(67));
  Rng rng(71);
  Tensor<float> bad = random_tensor<float>(1, 3, 33, 32, rng);
  CHECK_THROWS_WITH_AS(enc.forward(bad, Mode::Eval, false),
                       doctest::Contains("multiples of 16"), DataError);
  Tensor<float> gray = random_tensor<float>(1, 1, 32, 32, rng);
  CHECK_THROWS_AS(enc.forward(gray, Mode::Eval, false), DataError);
}

TEST_CASE("evaluation forwards are deterministic and thread-safe") {
  EncoderSpec spec;
  spec.num_classes = 5;
  Encoder<float> enc(spec, Rng(73));
  Rng rng(79);
  Tensor<float> x = random_tensor<float>(4, 3, 32, 32, rng, 0.3);
  auto base = enc.forward(x, Mode::Eval, true);

  std::vector<Mat<float>> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      results[size_t(t)] = enc.forward(x, Mode::Eval, true).logits;
    });
  for (auto& th : threads) th.join();
  for (const auto& m : results) {
    REQUIRE(m.v.size() == base.logits.v.size());
    for (size_t i = 0; i < m.v.size(); ++i) CHECK(m.v[i] == base.logits.v[i]);
  }
}

TEST_CASE("batch normalization statistics follow the mode") {
  BatchNorm2d<double> bn("bn", 2);
  Rng rng(83);
  Tensor<double> x = random_tensor<double>(3, 2, 4, 4, rng);
  for (auto& v : x.v) v = v * 2.0 + 1.5;

  std::vector<BufferRef<double>> bufs;
  bn.collect_buffers(bufs);
  REQUIRE(bufs.size() == 2);

  Tensor<double> y_momentum = bn.forward(x, Mode::Momentum);
  CHECK((*bufs[0].second)[0] == 0.0);
  CHECK((*bufs[1].second)[0] == 1.0);

  Tensor<double> y_train = bn.forward(x, Mode::Train);
  for (size_t i = 0; i < y_train.size(); ++i)
    CHECK(y_train.v[i] == doctest::Approx(y_momentum.v[i]).epsilon(1e-12));

  // Running statistics after one step: 0.9·init + 0.1·batch value, with the
  // sample-size correction on the variance.
  const size_t count = 3 * 4 * 4;
  for (int c = 0; c < 2; ++c) {
    double mean = 0;
    for (int n = 0; n < 3; ++n)
      for (size_t i = 0; i < x.plane(); ++i) mean += x.at(n, c)[i];
    mean /= double(count);
    double var = 0;
    for (int n = 0; n < 3; ++n)
      for (size_t i = 0; i < x.plane(); ++i)
        var += (x.at(n, c)[i] - mean) * (x.at(n, c)[i] - mean);
    var /= double(count);
    CHECK((*bufs[0].second)[size_t(c)] ==
          doctest::Approx(0.1 * mean).epsilon(1e-12));
    CHECK((*bufs[1].second)[size_t(c)] ==
          doctest::Approx(0.9 + 0.1 * var * double(count) / double(count - 1))
              .epsilon(1e-12));
  }

  Tensor<double> y_eval = bn.forward(x, Mode::Eval);
  double diff = 0;
  for (size_t i = 0; i < y_eval.size(); ++i)
    diff = std::max(diff, std::abs(y_eval.v[i] - y_train.v[i]));
  CHECK(diff > 1e-3);
}

namespace {

// Scalar functional of the full forward pass: fixed random weights over both
// logits and embeddings. Gradients of every parameter are checked against
// central differences.
struct GradcheckRig {
  Encoder<double> enc;
  Tensor<double> x;
  Mat<double> a;  // logits weights
  Mat<double> b;  // embedding weights

  explicit GradcheckRig(const EncoderSpec& spec, int batch, int hw, Rng seed)
      : enc(spec, seed.child("enc", 0, 0)) {
    Rng rng = seed.child("data", 0, 0);
    x = random_tensor<double>(batch, spec.in_channels, hw, hw, rng, 0.7);
    auto probe = enc.forward(x, Mode::Eval, true);
    a = Mat<double>(probe.logits.rows, probe.logits.cols);
    b = Mat<double>(probe.embeddings.rows, probe.embeddings.cols);
    for (auto& v : a.v) v = rng.normal();
    for (auto& v : b.v) v = rng.normal();
  }

  double value() {
    auto r = enc.forward(x, Mode::Eval, true);
    double s = 0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * r.logits.v[i];
    for (size_t i = 0; i < b.v.size(); ++i) s += b.v[i] * r.embeddings.v[i];
    return s;
  }

  void analytic() {
    enc.zero_grad();
    enc.forward(x, Mode::Train, true);
    enc.backward(a, b);
  }
};

}  // namespace

TEST_CASE("analytic parameter gradients match central differences") {
  GradcheckRig rig(tiny_spec(), 2, 4, Rng(89));
  rig.analytic();

  const double h = 1e-5;
  int checked = 0;
  for (Param<double>* p : rig.enc.params()) {
    for (size_t i = 0; i < p->size(); ++i) {
      const double keep = p->w[i];
      p->w[i] = keep + h;
      const double up = rig.value();
      p->w[i] = keep - h;
      const double dn = rig.value();
      p->w[i] = keep;
      const double numeric = (up - dn) / (2 * h);
      const double analytic = p->g[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic),
                                     1e-6});
      INFO(p->name << "[" << i << "] analytic=" << analytic
                   << " numeric=" << numeric);
      CHECK(std::abs(numeric - analytic) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("encoder input gradients match central differences") {
  GradcheckRig rig(tiny_spec(), 1, 4, Rng(97));
  rig.enc.zero_grad();
  rig.enc.forward(rig.x, Mode::Train, true);
  Tensor<double> dx = rig.enc.backward(rig.a, rig.b);

  const double h = 1e-5;
  Rng pick(101);
  for (int trial = 0; trial < 24; ++trial) {
    const size_t i = size_t(pick.uniform_int(0, int(rig.x.size()) - 1));
    const double keep = rig.x.v[i];
    rig.x.v[i] = keep + h;
    const double up = rig.value();
    rig.x.v[i] = keep - h;
    const double dn = rig.value();
    rig.x.v[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    const double denom =
        std::max({std::abs(numeric), std::abs(dx.v[i]), 1e-6});
    CHECK(std::abs(numeric - dx.v[i]) / denom < 1e-4);
  }
}

TEST_CASE("residual block gradients match central differences") {
  BasicBlock<double> block("blk", 3, 4, 2, Rng(103));
  Rng rng(107);
  Tensor<double> x = random_tensor<double>(2, 3, 8, 8, rng, 0.6);
  Tensor<double> probe = block.forward(x, Mode::Eval);
  Tensor<double> dmask(probe.n, probe.c, probe.h, probe.w);
  for (auto& v : dmask.v) v = rng.normal();

  std::vector<Param<double>*> params;
  block.collect(params);
  for (Param<double>* p : params) std::fill(p->g.begin(), p->g.end(), 0.0);
  block.forward(x, Mode::Train);
  Tensor<double> dx = block.backward(dmask);

  // Eval uses running stats while Train uses batch stats, so the functional
  // must be evaluated against a Train-consistent forward. Re-run finite
  // differences in Momentum mode (batch stats, no state writes).
  auto value_batchstats = [&]() {
    Tensor<double> y = block.forward(x, Mode::Momentum);
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += dmask.v[i] * y.v[i];
    return s;
  };

  const double h = 1e-5;
  for (Param<double>* p : params) {
    for (size_t i = 0; i < p->size(); ++i) {
      const double keep = p->w[i];
      p->w[i] = keep + h;
      const double up = value_batchstats();
      p->w[i] = keep - h;
      const double dn = value_batchstats();
      p->w[i] = keep;
      const double numeric = (up - dn) / (2 * h);
      const double denom =
          std::max({std::abs(numeric), std::abs(p->g[i]), 1e-6});
      INFO(p->name << "[" << i << "]");
      CHECK(std::abs(numeric - p->g[i]) / denom < 1e-4);
    }
  }

  Rng pick(109);
  for (int trial = 0; trial < 24; ++trial) {
    const size_t i = size_t(pick.uniform_int(0, int(x.size()) - 1));
    const double keep = x.v[i];
    x.v[i] = keep + h;
    const double up = value_batchstats();
    x.v[i] = keep - h;
    const double dn = value_batchstats();
    x.v[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    const double denom =
        std::max({std::abs(numeric), std::abs(dx.v[i]), 1e-6});
    CHECK(std::abs(numeric - dx.v[i]) / denom < 1e-4);
  }
}

TEST_CASE("parameter names are stable and grads zero out") {
  EncoderSpec spec = tiny_spec();
  Encoder<float> enc(spec, Rng(113));
  auto params = enc.params();
  REQUIRE(params.size() == 10);
  CHECK(params[0]->name == "block1.conv.weight");
  CHECK(params[1]->name == "block1.conv.bias");
  CHECK(params[4]->name == "classifier.weight");
  CHECK(params[6]->name == "proj.fc1.weight");
  CHECK(params[9]->name == "proj.fc2.bias");

  Rng rng(127);
  Tensor<float> x = random_tensor<float>(2, 3, 4, 4, rng);
  enc.forward(x, Mode::Train, true);
  Mat<float> dl(2, 3);
  for (auto& v : dl.v) v = 1.0f;
  enc.backward(dl, Mat<float>());
  bool any = false;
  for (auto* p : params)
    for (float g : p->g) any = any || g != 0.0f;
  CHECK(any);
  enc.zero_grad();
  for (auto* p : params)
    for (float g : p->g) CHECK(g == 0.0f);
}
