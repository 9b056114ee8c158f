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

#include "phama/augment.hpp"

#include <algorithm>
#include <cmath>

#include "phama/errors.hpp"
#include "phama/fourier.hpp"

namespace phama {

namespace {

Image crop(const Image& im, int y0, int x0, int ch, int cw) {
  Image out = Image::zeros(im.channels, ch, cw);
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x)
        out.at(c, y, x) = im.at(c, y0 + y, x0 + x);
  return out;
}

void hflip(Image& im) {
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width / 2; ++x)
        std::swap(im.at(c, y, x), im.at(c, y, im.width - 1 - x));
}

float gray_mean(const Image& im) {
  double sum = 0.0;
  if (im.channels == 1) {
    for (float v : im.values) sum += v;
    return float(sum / double(im.plane_size()));
  }
  for (size_t i = 0; i < im.plane_size(); ++i)
    sum += 0.299 * im.plane(0)[i] + 0.587 * im.plane(1)[i] +
           0.114 * im.plane(2)[i];
  return float(sum / double(im.plane_size()));
}

}  // namespace

Image standard_augment(const Image& im, Rng& rng,
                       const AugmentParams& params) {
  validate_image(im, "standard_augment");
  const int h = im.height, w = im.width;

  double area = double(h) * w *
                rng.uniform(params.crop_scale_lo, params.crop_scale_hi);
  double aspect = std::exp(
      rng.uniform(std::log(params.aspect_lo), std::log(params.aspect_hi)));
  int ch = std::clamp(int(std::lround(std::sqrt(area / aspect))), 1, h);
  int cw = std::clamp(int(std::lround(std::sqrt(area * aspect))), 1, w);
  int y0 = rng.uniform_int(0, h - ch);
  int x0 = rng.uniform_int(0, w - cw);
  Image out = (ch == h && cw == w && y0 == 0 && x0 == 0)
                  ? im
                  : resize_bilinear(crop(im, y0, x0, ch, cw), h, w);

  if (params.flip_prob > 0.0 && rng.uniform() < params.flip_prob) hflip(out);

  if (params.jitter > 0.0) {
    double jb = 1.0 + rng.uniform(-params.jitter, params.jitter);
    double jc = 1.0 + rng.uniform(-params.jitter, params.jitter);
    double js = 1.0 + rng.uniform(-params.jitter, params.jitter);
    for (float& v : out.values) v = float(v * jb);
    float mean = gray_mean(out);
    for (float& v : out.values) v = float(mean + jc * (v - mean));
    if (out.channels == 3) {
      for (size_t i = 0; i < out.plane_size(); ++i) {
        float g = 0.299f * out.plane(0)[i] + 0.587f * out.plane(1)[i] +
                  0.114f * out.plane(2)[i];
        for (int c = 0; c < 3; ++c) {
          float& v = out.plane(c)[i];
          v = float(g + js * (v - g));
        }
      }
    }
    for (float& v : out.values) v = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

std::vector<AugmentedPair> make_apda_batch(
    const std::vector<const DomainSample*>& batch, double eta, Rng& rng,
    bool cross_domain_only) {
  if (batch.size() < 2)
    throw DataError("make_apda_batch: need a batch of at least 2");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ConfigError("train.eta", "must be in [0,1]");
  for (const DomainSample* s : batch)
    if (!s->image.same_shape(batch.front()->image))
      throw DataError("make_apda_batch: mixed image shapes in batch");

  std::vector<PolarSpectrum> polar;
  polar.reserve(batch.size());
  for (const DomainSample* s : batch) polar.push_back(to_polar(fft2(s->image)));

  std::vector<AugmentedPair> out;
  out.reserve(batch.size());
  const int last = int(batch.size()) - 1;
  for (size_t i = 0; i < batch.size(); ++i) {
    int j = rng.uniform_int(0, last);
    if (cross_domain_only) {
      for (int tries = 0;
           tries < 32 && batch[size_t(j)]->domain_id == batch[i]->domain_id;
           ++tries)
        j = rng.uniform_int(0, last);
    }
    double lambda = eta > 0.0 ? rng.uniform(0.0, eta) : 0.0;
    PlaneSet mixed =
        mix_amplitude(polar[i].amplitude, polar[size_t(j)].amplitude, lambda);
    Reconstruction r = reconstruct_with(mixed, polar[i].phase);
    AugmentedPair pair;
    pair.original = batch[i]->image;
    pair.augmented = std::move(r.image);
    pair.label = batch[i]->label;
    pair.lambda = lambda;
    out.push_back(std::move(pair));
  }
  return out;
}

const std::vector<std::string>& corruption_kinds() {
  static const std::vector<std::string> kinds = {
      "gaussian_noise", "shot_noise", "defocus_blur", "contrast",
      "brightness"};
  return kinds;
}

namespace {

Image disk_blur(const Image& im, double radius) {
  int half = int(std::ceil(radius));
  std::vector<double> k(size_t(2 * half + 1) * (2 * half + 1));
  double sum = 0.0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) {
      double cov = std::clamp(radius - std::hypot(dx, dy) + 0.5, 0.0, 1.0);
      k[size_t(dy + half) * (2 * half + 1) + (dx + half)] = cov;
      sum += cov;
    }
  for (double& v : k) v /= sum;

  Image out = Image::zeros(im.channels, im.height, im.width);
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        double acc = 0.0;
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx) {
            int yi = std::clamp(y + dy, 0, im.height - 1);
            int xi = std::clamp(x + dx, 0, im.width - 1);
            acc += k[size_t(dy + half) * (2 * half + 1) + (dx + half)] *
                   im.at(c, yi, xi);
          }
        out.at(c, y, x) = float(acc);
      }
  return out;
}

}  // namespace

Image corrupt(const Image& im, const std::string& kind, int severity,
              Rng& rng) {
  validate_image(im, "corrupt");
  if (kind == "identity") return im;
  if (severity < 1 || severity > 5)
    throw ConfigError("corruption.severity", "must be in 1..5");
  const int s = severity - 1;

  if (kind == "gaussian_noise") {
    static const double sigma[5] = {0.04, 0.095, 0.15, 0.205, 0.26};
    Image out = im;
    for (float& v : out.values)
      v = std::clamp(v + float(sigma[s] * rng.normal()), 0.0f, 1.0f);
    return out;
  }
  if (kind == "shot_noise") {
    static const double counts[5] = {60.0, 25.0, 12.0, 5.0, 3.0};
    Image out = im;
    for (float& v : out.values)
      v = std::clamp(float(rng.poisson(double(v) * counts[s]) / counts[s]),
                     0.0f, 1.0f);
    return out;
  }
  if (kind == "defocus_blur") {
    static const double radius[5] = {1.0, 1.5, 2.0, 2.5, 3.0};
    return disk_blur(im, radius[s]);
  }
  if (kind == "contrast") {
    static const double factor[5] = {0.75, 0.6, 0.45, 0.3, 0.2};
    Image out = im;
    float mean = gray_mean(im);
    for (float& v : out.values)
      v = std::clamp(float(mean + factor[s] * (v - mean)), 0.0f, 1.0f);
    return out;
  }
  if (kind == "brightness") {
    static const double delta[5] = {0.05, 0.1, 0.15, 0.2, 0.25};
    Image out = im;
    for (float& v : out.values)
      v = std::clamp(v + float(delta[s]), 0.0f, 1.0f);
    return out;
  }
  throw ConfigError("corruption.kind", "unknown kind '" + kind + "'");
}

}  // namespace phama
