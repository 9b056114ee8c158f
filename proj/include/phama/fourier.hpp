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

#include <complex>
#include <string>
#include <vector>

#include "phama/image.hpp"

namespace phama {

// Per-channel stack of real-valued planes (amplitude or phase), double
// precision, CHW layout.
struct PlaneSet {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  static PlaneSet zeros(int c, int h, int w) {
    PlaneSet p;
    p.channels = c;
    p.height = h;
    p.width = w;
    p.values.assign(size_t(c) * h * w, 0.0);
    return p;
  }
  size_t plane_size() const { return size_t(height) * width; }
  double* plane(int c) { return values.data() + size_t(c) * plane_size(); }
  const double* plane(int c) const {
    return values.data() + size_t(c) * plane_size();
  }
  bool same_shape(const PlaneSet& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Per-channel complex frequency planes. Bin (0,0) is the DC term; the forward
// transform is unnormalized, the inverse carries the 1/(H*W) factor.
struct ComplexSpectrum {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> values;

  static ComplexSpectrum zeros(int c, int h, int w) {
    ComplexSpectrum s;
    s.channels = c;
    s.height = h;
    s.width = w;
    s.values.assign(size_t(c) * h * w, {0.0, 0.0});
    return s;
  }
  size_t plane_size() const { return size_t(height) * width; }
  std::complex<double>* plane(int c) {
    return values.data() + size_t(c) * plane_size();
  }
  const std::complex<double>* plane(int c) const {
    return values.data() + size_t(c) * plane_size();
  }
};

struct PolarSpectrum {
  PlaneSet amplitude;
  PlaneSet phase;
};

struct Reconstruction {
  Image image;
  // Fraction of pixels that fell outside [0,1] before clamping.
  double overflow_fraction = 0.0;
};

// Unnormalized forward 2D DFT per channel.
ComplexSpectrum fft2(const Image& im);

// Inverse transform with 1/(H*W) normalization. The imaginary part of the
// result is discarded when its max-abs stays below `imag_tolerance` and is an
// error above it (a hand-built spectrum without Hermitian symmetry).
Image ifft2(const ComplexSpectrum& s, double imag_tolerance = 1e-3);

// Same inverse but keeping full double precision, for callers that feed the
// result into further spectral arithmetic.
PlaneSet ifft2_planes(const ComplexSpectrum& s, double imag_tolerance = 1e-3);

// amplitude = |z|, phase = arg(z) wrapped to (-pi, pi]; zero bins get phase 0.
PolarSpectrum to_polar(const ComplexSpectrum& s);

// amplitude * e^{i*phase}, the exact inverse of to_polar. Negative amplitude
// is rejected.
ComplexSpectrum from_polar(const PolarSpectrum& p);

// (1-lambda)*a1 + lambda*a2 elementwise, lambda in [0,1]. Endpoints are exact.
PlaneSet mix_amplitude(const PlaneSet& a1, const PlaneSet& a2, double lambda);

// ifft2(from_polar(...)) clamped to [0,1], reporting the pre-clamp overflow.
Reconstruction reconstruct_with(const PlaneSet& amplitude,
                                const PlaneSet& phase);

// Unit amplitude with the original phase, inverse-transformed and min-max
// rescaled per channel. Keeps edges and contours.
Image phase_only(const Image& im);

// Original amplitude with zero phase, inverse-transformed and min-max
// rescaled per channel. Keeps only second-order statistics.
Image amplitude_only(const Image& im);

}  // namespace phama
