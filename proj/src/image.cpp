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

#include "phama/image.hpp"

#include <algorithm>
#include <cmath>

#include "phama/errors.hpp"

namespace phama {

void validate_image(const Image& im, const std::string& what) {
  if (im.channels != 1 && im.channels != 3)
    throw DataError(what + ": expected 1 or 3 channels, got " +
                    std::to_string(im.channels));
  if (im.height < 2 || im.width < 2)
    throw DataError(what + ": image must be at least 2x2, got " +
                    std::to_string(im.height) + "x" + std::to_string(im.width));
  if (im.values.size() != size_t(im.channels) * im.height * im.width)
    throw DataError(what + ": value buffer does not match declared shape");
  for (float v : im.values)
    if (!std::isfinite(v))
      throw DataError(what + ": non-finite pixel value");
}

Image resize_bilinear(const Image& im, int out_h, int out_w) {
  Image out = Image::zeros(im.channels, out_h, out_w);
  const double sy = double(im.height) / out_h;
  const double sx = double(im.width) / out_w;
  for (int c = 0; c < im.channels; ++c) {
    const float* src = im.plane(c);
    float* dst = out.plane(c);
    for (int y = 0; y < out_h; ++y) {
      double fy = (y + 0.5) * sy - 0.5;
      fy = std::clamp(fy, 0.0, double(im.height - 1));
      int y0 = int(fy);
      int y1 = std::min(y0 + 1, im.height - 1);
      double wy = fy - y0;
      for (int x = 0; x < out_w; ++x) {
        double fx = (x + 0.5) * sx - 0.5;
        fx = std::clamp(fx, 0.0, double(im.width - 1));
        int x0 = int(fx);
        int x1 = std::min(x0 + 1, im.width - 1);
        double wx = fx - x0;
        double top = src[y0 * im.width + x0] * (1 - wx) +
                     src[y0 * im.width + x1] * wx;
        double bot = src[y1 * im.width + x0] * (1 - wx) +
                     src[y1 * im.width + x1] * wx;
        dst[y * out_w + x] = float(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Image to_gray(const Image& im) {
  if (im.channels == 1) return im;
  Image out = Image::zeros(1, im.height, im.width);
  const float* r = im.plane(0);
  const float* g = im.plane(1);
  const float* b = im.plane(2);
  float* y = out.plane(0);
  for (size_t i = 0; i < im.plane_size(); ++i)
    y[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  return out;
}

double clamp01(Image& im, double tol) {
  size_t overflow = 0;
  for (float& v : im.values) {
    if (v < -tol || v > 1.0 + tol) ++overflow;
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return im.values.empty() ? 0.0 : double(overflow) / double(im.values.size());
}

}  // namespace phama
