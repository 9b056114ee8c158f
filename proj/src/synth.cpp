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

#include "phama/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "phama/errors.hpp"
#include "phama/fourier.hpp"
#include "phama/rng.hpp"

namespace phama {

namespace {

constexpr const char* kGlyphs[] = {"disk", "square", "triangle", "cross",
                                   "ring"};

// Signed distance to the glyph boundary in jittered, rotated coordinates;
// negative inside.
double glyph_sdf(int glyph, double px, double py, double r) {
  switch (glyph) {
    case 0:  // disk
      return std::hypot(px, py) - r;
    case 1:  // square
      return std::max(std::abs(px), std::abs(py)) - 0.85 * r;
    case 2: {  // triangle (equilateral; intersection of three half-planes)
      double k = std::sqrt(3.0) / 2.0;
      return std::max({py, -k * px - 0.5 * py, k * px - 0.5 * py}) - 0.55 * r;
    }
    case 3: {  // cross
      double t = 0.34 * r;
      double bar_h = std::max(std::abs(px) - r, std::abs(py) - t);
      double bar_v = std::max(std::abs(px) - t, std::abs(py) - r);
      return std::min(bar_h, bar_v);
    }
    default: {  // ring
      return std::abs(std::hypot(px, py) - 0.8 * r) - 0.22 * r;
    }
  }
}

Image render_glyph(int glyph, int size, Rng& rng) {
  double bg = rng.uniform(0.15, 0.35);
  double fg = rng.uniform(0.65, 0.95);
  double cx = size * (0.5 + rng.uniform(-0.1, 0.1));
  double cy = size * (0.5 + rng.uniform(-0.1, 0.1));
  double r = size * rng.uniform(0.26, 0.36);
  double rot = rng.uniform(0.0, 2.0 * M_PI);
  double grad = rng.uniform(-0.08, 0.08);
  double cr = std::cos(rot), sr = std::sin(rot);

  Image im = Image::zeros(3, size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double dx = x - cx, dy = y - cy;
      double px = cr * dx - sr * dy;
      double py = sr * dx + cr * dy;
      double d = glyph_sdf(glyph, px, py, r);
      double cov = std::clamp(0.5 - d, 0.0, 1.0);
      double base = bg + grad * (double(y) / size - 0.5);
      double v = (1.0 - cov) * base + cov * fg;
      for (int c = 0; c < 3; ++c) im.at(c, y, x) = float(v);
    }
  return im;
}

void apply_colormap(Image& im) {
  for (size_t i = 0; i < im.plane_size(); ++i) {
    float v = im.plane(0)[i];
    im.plane(0)[i] = 0.15f + 0.85f * v;
    im.plane(1)[i] = v * v;
    im.plane(2)[i] = 1.0f - 0.75f * v;
  }
}

void apply_texture(Image& im, Rng& rng) {
  double f = rng.uniform(5.0, 8.0);
  double ph1 = rng.uniform(0.0, 2.0 * M_PI);
  double ph2 = rng.uniform(0.0, 2.0 * M_PI);
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        double t = 0.13 * std::sin(2.0 * M_PI * f * x / im.width + ph1) *
                   std::sin(2.0 * M_PI * f * y / im.height + ph2);
        im.at(c, y, x) = std::clamp(float(im.at(c, y, x) + t), 0.0f, 1.0f);
      }
}

void apply_gaussian_blur(Image& im, double sigma) {
  int half = std::max(1, int(std::ceil(2.5 * sigma)));
  std::vector<double> k(size_t(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    k[size_t(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[size_t(i + half)];
  }
  for (double& v : k) v /= sum;

  Image tmp = im;
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          int xi = std::clamp(x + i, 0, im.width - 1);
          acc += k[size_t(i + half)] * im.at(c, y, xi);
        }
        tmp.at(c, y, x) = float(acc);
      }
  for (int c = 0; c < im.channels; ++c)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          int yi = std::clamp(y + i, 0, im.height - 1);
          acc += k[size_t(i + half)] * tmp.at(c, yi, x);
        }
        im.at(c, y, x) = float(acc);
      }
}

void apply_spectral_noise(Image& im, Rng& rng) {
  PolarSpectrum p = to_polar(fft2(im));
  int h = im.height, w = im.width;
  double cutoff = std::min(h, w) / 6.0;
  // Jitter must respect conjugate symmetry or the inverse stops being real,
  // so draw one factor per (u,v) and reuse it at (-u,-v).
  std::vector<double> factor(size_t(h) * w, 0.0);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      size_t i = size_t(u) * w + v;
      if (factor[i] != 0.0) continue;
      double du = std::min(u, h - u), dv = std::min(v, w - v);
      double g = std::hypot(du, dv) > cutoff ? 1.0 + rng.uniform(0.0, 1.6)
                                             : 1.0;
      factor[i] = g;
      factor[size_t((h - u) % h) * w + (w - v) % w] = g;
    }
  for (int c = 0; c < p.amplitude.channels; ++c) {
    double* a = p.amplitude.plane(c);
    for (size_t i = 0; i < p.amplitude.plane_size(); ++i) a[i] *= factor[i];
  }
  Reconstruction r = reconstruct_with(p.amplitude, p.phase);
  im = std::move(r.image);
}

void apply_contrast(Image& im) {
  for (float& v : im.values)
    v = std::clamp(0.5f + 0.55f * (v - 0.5f), 0.0f, 1.0f);
}

}  // namespace

MultiDomainDataset synth_domains(const SynthSpec& spec, uint64_t seed) {
  if (spec.domain_transforms.size() < 2)
    throw ConfigError("data.synth_domains", "need at least 2 domains");
  if (spec.num_classes < 2 || spec.num_classes > 5)
    throw ConfigError("data.synth_classes", "supported range is 2..5");
  if (spec.image_size < 8)
    throw ConfigError("data.image_size", "synthetic images need size >= 8");

  MultiDomainDataset ds;
  ds.num_classes = spec.num_classes;
  for (int c = 0; c < spec.num_classes; ++c)
    ds.class_names.push_back(kGlyphs[c]);

  Rng master(seed);
  for (size_t d = 0; d < spec.domain_transforms.size(); ++d) {
    const std::string& tf = spec.domain_transforms[d];
    Domain dom;
    dom.name = std::to_string(d) + "_" + tf;
    for (int cls = 0; cls < spec.num_classes; ++cls)
      for (int k = 0; k < spec.samples_per_class; ++k) {
        Rng rng = master.child("synth", d,
                               uint64_t(cls) * spec.samples_per_class + k);
        Image im = render_glyph(cls, spec.image_size, rng);
        if (tf == "identity") {
        } else if (tf == "colormap") {
          apply_colormap(im);
        } else if (tf == "texture") {
          apply_texture(im, rng);
        } else if (tf == "blur") {
          apply_gaussian_blur(im, 1.0);
        } else if (tf == "spectral_noise") {
          apply_spectral_noise(im, rng);
        } else if (tf == "contrast") {
          apply_contrast(im);
        } else {
          throw ConfigError("data.synth_domains",
                            "unknown transform '" + tf + "'");
        }
        DomainSample s;
        s.image = std::move(im);
        s.label = cls;
        s.domain_id = int(d);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%03d", k);
        s.id = dom.name + "/" + kGlyphs[cls] + "/" + buf;
        dom.samples.push_back(std::move(s));
      }
    stratified_split(dom, ds.num_classes, master.child("split", d));
    ds.domains.push_back(std::move(dom));
  }
  validate_dataset(ds);
  return ds;
}

}  // namespace phama
