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

#include "phama/dataset.hpp"

namespace phama {

// Desk-scale multi-domain benchmark generator. Classes are antialiased glyph
// shapes (disk, square, triangle, cross, ring) with jittered geometry; each
// domain applies one label-preserving style transform on top.
struct SynthSpec {
  int num_classes = 5;          // capped at the 5 available glyphs
  int samples_per_class = 200;  // per domain
  int image_size = 32;
  // Transform names; one domain per entry. Known names: identity, colormap,
  // texture, blur, spectral_noise, contrast.
  std::vector<std::string> domain_transforms = {"identity", "colormap",
                                                "texture", "spectral_noise"};
};

MultiDomainDataset synth_domains(const SynthSpec& spec, uint64_t seed);

}  // namespace phama
