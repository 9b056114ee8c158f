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

#include "phama/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "phama/errors.hpp"

namespace phama {

namespace {

// FFTW planning is not thread-safe; plans are cached per (H, W, sign) under a
// lock and executed via the new-array interface, which is safe concurrently.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(size_t(h) * w);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(h, w, buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw NumericError("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(int h, int w, int sign, std::complex<double>* data) {
  fftw_plan plan = plan_cache().get(h, w, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buf, buf);
}

void check_spectrum(const ComplexSpectrum& s, const std::string& what) {
  if (s.channels < 1 || s.height < 2 || s.width < 2)
    throw DataError(what + ": invalid spectrum shape");
  if (s.values.size() != size_t(s.channels) * s.plane_size())
    throw DataError(what + ": spectrum buffer does not match shape");
}

}  // namespace

ComplexSpectrum fft2(const Image& im) {
  validate_image(im, "fft2");
  ComplexSpectrum s = ComplexSpectrum::zeros(im.channels, im.height, im.width);
  for (int c = 0; c < im.channels; ++c) {
    const float* src = im.plane(c);
    std::complex<double>* dst = s.plane(c);
    for (size_t i = 0; i < s.plane_size(); ++i) dst[i] = double(src[i]);
    execute(im.height, im.width, FFTW_FORWARD, dst);
  }
  return s;
}

PlaneSet ifft2_planes(const ComplexSpectrum& s, double imag_tolerance) {
  check_spectrum(s, "ifft2");
  PlaneSet out = PlaneSet::zeros(s.channels, s.height, s.width);
  const double norm = 1.0 / (double(s.height) * s.width);
  std::vector<std::complex<double>> work(s.plane_size());
  double max_imag = 0.0;
  for (int c = 0; c < s.channels; ++c) {
    std::copy(s.plane(c), s.plane(c) + s.plane_size(), work.begin());
    execute(s.height, s.width, FFTW_BACKWARD, work.data());
    double* dst = out.plane(c);
    for (size_t i = 0; i < work.size(); ++i) {
      max_imag = std::max(max_imag, std::abs(work[i].imag()) * norm);
      dst[i] = work[i].real() * norm;
    }
  }
  if (max_imag > imag_tolerance)
    throw NumericError("ifft2: imaginary residue " + std::to_string(max_imag) +
                       " exceeds tolerance (spectrum is not conjugate "
                       "symmetric)");
  return out;
}

Image ifft2(const ComplexSpectrum& s, double imag_tolerance) {
  PlaneSet planes = ifft2_planes(s, imag_tolerance);
  Image out = Image::zeros(planes.channels, planes.height, planes.width);
  for (size_t i = 0; i < planes.values.size(); ++i)
    out.values[i] = float(planes.values[i]);
  return out;
}

PolarSpectrum to_polar(const ComplexSpectrum& s) {
  check_spectrum(s, "to_polar");
  PolarSpectrum p;
  p.amplitude = PlaneSet::zeros(s.channels, s.height, s.width);
  p.phase = PlaneSet::zeros(s.channels, s.height, s.width);
  for (size_t i = 0; i < s.values.size(); ++i) {
    const std::complex<double>& z = s.values[i];
    double a = std::abs(z);
    p.amplitude.values[i] = a;
    if (a == 0.0) {
      p.phase.values[i] = 0.0;
    } else {
      double ph = std::atan2(z.imag(), z.real());
      if (ph <= -M_PI) ph += 2.0 * M_PI;
      p.phase.values[i] = ph;
    }
  }
  return p;
}

ComplexSpectrum from_polar(const PolarSpectrum& p) {
  if (!p.amplitude.same_shape(p.phase))
    throw DataError("from_polar: amplitude and phase shapes differ");
  ComplexSpectrum s = ComplexSpectrum::zeros(p.amplitude.channels,
                                             p.amplitude.height,
                                             p.amplitude.width);
  for (size_t i = 0; i < s.values.size(); ++i) {
    double a = p.amplitude.values[i];
    if (a < 0.0) throw DataError("from_polar: negative amplitude");
    double ph = p.phase.values[i];
    s.values[i] = {a * std::cos(ph), a * std::sin(ph)};
  }
  return s;
}

PlaneSet mix_amplitude(const PlaneSet& a1, const PlaneSet& a2, double lambda) {
  if (!a1.same_shape(a2))
    throw DataError("mix_amplitude: shape mismatch between amplitude sets");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw NumericError("mix_amplitude: lambda must be in [0,1]");
  if (lambda == 0.0) return a1;
  if (lambda == 1.0) return a2;
  PlaneSet out = a1;
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = (1.0 - lambda) * a1.values[i] + lambda * a2.values[i];
  return out;
}

Reconstruction reconstruct_with(const PlaneSet& amplitude,
                                const PlaneSet& phase) {
  PolarSpectrum p;
  p.amplitude = amplitude;
  p.phase = phase;
  Reconstruction r;
  r.image = ifft2(from_polar(p));
  r.overflow_fraction = clamp01(r.image);
  return r;
}

namespace {

Image rescale_minmax(Image im) {
  for (int c = 0; c < im.channels; ++c) {
    float* p = im.plane(c);
    auto [lo_it, hi_it] = std::minmax_element(p, p + im.plane_size());
    float lo = *lo_it, range = *hi_it - *lo_it;
    if (range < 1e-12f) {
      std::fill(p, p + im.plane_size(), 0.0f);
      continue;
    }
    for (size_t i = 0; i < im.plane_size(); ++i) p[i] = (p[i] - lo) / range;
  }
  return im;
}

}  // namespace

Image phase_only(const Image& im) {
  PolarSpectrum p = to_polar(fft2(im));
  std::fill(p.amplitude.values.begin(), p.amplitude.values.end(), 1.0);
  return rescale_minmax(ifft2(from_polar(p)));
}

Image amplitude_only(const Image& im) {
  PolarSpectrum p = to_polar(fft2(im));
  std::fill(p.phase.values.begin(), p.phase.values.end(), 0.0);
  return rescale_minmax(ifft2(from_polar(p)));
}

}  // namespace phama
