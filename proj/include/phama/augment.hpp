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

#include <string>
#include <vector>

#include "phama/dataset.hpp"
#include "phama/image.hpp"
#include "phama/rng.hpp"

namespace phama {

struct AugmentParams {
  double crop_scale_lo = 0.8;
  double crop_scale_hi = 1.0;
  double aspect_lo = 3.0 / 4.0;
  double aspect_hi = 4.0 / 3.0;
  double flip_prob = 0.5;
  double jitter = 0.4;  // brightness/contrast/saturation factor range
};

// Random resized crop back to the input size, horizontal flip, then color
// jitter (brightness, contrast, saturation, in that fixed order). With
// crop_scale [1,1], aspect [1,1], flip_prob 0 and jitter 0 this is the
// identity map.
Image standard_augment(const Image& im, Rng& rng,
                       const AugmentParams& params = {});

struct AugmentedPair {
  Image original;
  Image augmented;
  int label = 0;
  double lambda = 0.0;
};

// Amplitude-perturbation pairs: each sample keeps its phase and label while
// its amplitude is pulled toward a uniformly drawn partner's amplitude by
// lambda ~ U(0, eta). cross_domain_only restricts partners to samples whose
// domain differs (falls back to any partner when impossible).
std::vector<AugmentedPair> make_apda_batch(
    const std::vector<const DomainSample*>& batch, double eta, Rng& rng,
    bool cross_domain_only = false);

// Label-preserving test-time corruption with monotone severity 1..5.
// Kinds: gaussian_noise, shot_noise, defocus_blur, contrast, brightness,
// plus "identity" as the no-op reference.
Image corrupt(const Image& im, const std::string& kind, int severity,
              Rng& rng);

const std::vector<std::string>& corruption_kinds();

}  // namespace phama
