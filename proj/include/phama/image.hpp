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

namespace phama {

/// Real-valued C x H x W raster, nominal range [0,1]. Values outside [0,1]
/// appear only transiently on reconstruction outputs before clamping.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;  // CHW, row-major planes

  static Image zeros(int c, int h, int w) {
    Image im;
    im.channels = c;
    im.height = h;
    im.width = w;
    im.values.assign(size_t(c) * h * w, 0.0f);
    return im;
  }
  static Image constant(int c, int h, int w, float v) {
    Image im = zeros(c, h, w);
    im.values.assign(im.values.size(), v);
    return im;
  }

  float& at(int c, int y, int x) {
    return values[(size_t(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return values[(size_t(c) * height + y) * width + x];
  }
  float* plane(int c) { return values.data() + size_t(c) * height * width; }
  const float* plane(int c) const {
    return values.data() + size_t(c) * height * width;
  }
  size_t plane_size() const { return size_t(height) * width; }
  size_t size() const { return values.size(); }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// Checks the structural invariants (1 or 3 channels, min 2x2, finite
/// values); throws DataError with `what` in the message on violation.
void validate_image(const Image& im, const std::string& what);

/// Bilinear resize (half-pixel centers); exact identity when sizes match.
Image resize_bilinear(const Image& im, int out_h, int out_w);

/// Luminance for 3-channel input (Rec.601 weights), copy for 1-channel.
Image to_gray(const Image& im);

/// Clamp to [0,1] in place; returns the fraction of values that exceeded the
/// range by more than `tol` before clamping.
double clamp01(Image& im, double tol = 1e-6);

}  // namespace phama
