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

#include "phama/image.hpp"

namespace phama {

// Decodes a PNG file into a float image in [0, 1]. Grayscale files come back
// with one channel, everything else is expanded to RGB. Palette, 16-bit and
// alpha variants are normalized on load (alpha is composited over black).
Image read_png(const std::string& path);

// Encodes an image to an 8-bit PNG, clamping values to [0, 1] first.
void write_png(const std::string& path, const Image& im);

}  // namespace phama
