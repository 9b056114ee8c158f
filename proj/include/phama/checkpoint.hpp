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

#include <memory>
#include <string>
#include <vector>

#include "phama/nn/encoder.hpp"

namespace phama {

// Binary checkpoint: magic, little-endian uint32 manifest length, a JSON
// manifest (architecture, epoch, validation history, config hash, tensor
// table), then raw float32 tensor data. Parameters and normalization running
// statistics are both stored.
void save_checkpoint(const std::string& path, nn::Encoder<float>& enc,
                     int epoch, const std::vector<double>& val_history,
                     const std::string& config_hash);

struct LoadedCheckpoint {
  nn::EncoderSpec spec;
  int epoch = 0;
  std::vector<double> val_history;
  std::string config_hash;
  std::unique_ptr<nn::Encoder<float>> encoder;
};

// Rebuilds the encoder from the stored architecture and fills every tensor.
// Throws IoError on unreadable files and DataError on malformed or
// incompatible contents.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace phama
