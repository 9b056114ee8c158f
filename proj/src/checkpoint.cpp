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

#include "phama/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "phama/errors.hpp"

namespace phama {
namespace {

constexpr char kMagic[] = {'P', 'H', 'A', 'M', 'A', 'C', 'K', 'P', 'T', 1};
constexpr int kVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  float* data;
  size_t count;
};

std::vector<NamedTensor> gather(nn::Encoder<float>& enc) {
  std::vector<NamedTensor> out;
  for (nn::Param<float>* p : enc.params())
    out.push_back({p->name, p->shape, p->w.data(), p->w.size()});
  for (auto& [name, buf] : enc.buffers())
    out.push_back({name, {int(buf->size())}, buf->data(), buf->size()});
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, nn::Encoder<float>& enc,
                     int epoch, const std::vector<double>& val_history,
                     const std::string& config_hash) {
  const auto tensors = gather(enc);
  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  const nn::EncoderSpec& s = enc.spec();
  manifest["arch"] = {{"name", s.arch},
                      {"depth", s.depth},
                      {"conv_blocks", s.conv_blocks},
                      {"width", s.width},
                      {"num_classes", s.num_classes},
                      {"proj_dim", s.proj_dim},
                      {"in_channels", s.in_channels},
                      {"fusion_levels",
                       {s.fusion_levels.first, s.fusion_levels.second}}};
  manifest["epoch"] = epoch;
  manifest["val_history"] = val_history;
  manifest["config_hash"] = config_hash;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  size_t offset = 0;
  for (const NamedTensor& t : tensors) {
    table.push_back({{"name", t.name},
                     {"shape", t.shape},
                     {"offset", offset},
                     {"count", t.count}});
    offset += t.count;
  }
  manifest["tensors"] = std::move(table);

  const std::string mbytes = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  const uint32_t mlen = uint32_t(mbytes.size());
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mbytes.data(), std::streamsize(mbytes.size()));
  for (const NamedTensor& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data),
              std::streamsize(t.count * sizeof(float)));
  if (!out) throw IoError("short write on checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("'" + path + "' is not a checkpoint file");
  uint32_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  if (!in) throw DataError("truncated checkpoint '" + path + "'");
  std::string mbytes(mlen, '\0');
  in.read(mbytes.data(), std::streamsize(mlen));
  if (!in) throw DataError("truncated checkpoint '" + path + "'");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mbytes);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint manifest in '" + path + "': " + e.what());
  }
  if (manifest.value("version", 0) != kVersion)
    throw DataError("unsupported checkpoint version in '" + path + "'");

  LoadedCheckpoint ckpt;
  try {
    const auto& a = manifest.at("arch");
    ckpt.spec.arch = a.at("name").get<std::string>();
    ckpt.spec.depth = a.at("depth").get<int>();
    ckpt.spec.conv_blocks = a.at("conv_blocks").get<int>();
    ckpt.spec.width = a.at("width").get<int>();
    ckpt.spec.num_classes = a.at("num_classes").get<int>();
    ckpt.spec.proj_dim = a.at("proj_dim").get<int>();
    ckpt.spec.in_channels = a.at("in_channels").get<int>();
    ckpt.spec.fusion_levels = {a.at("fusion_levels").at(0).get<int>(),
                               a.at("fusion_levels").at(1).get<int>()};
    ckpt.epoch = manifest.at("epoch").get<int>();
    ckpt.val_history = manifest.at("val_history").get<std::vector<double>>();
    ckpt.config_hash = manifest.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint manifest in '" + path + "': " + e.what());
  }

  ckpt.encoder = std::make_unique<nn::Encoder<float>>(ckpt.spec, Rng(0));
  auto tensors = gather(*ckpt.encoder);
  const auto& table = manifest.at("tensors");
  if (table.size() != tensors.size())
    throw DataError("checkpoint '" + path + "' stores " +
                    std::to_string(table.size()) + " tensors but the model has " +
                    std::to_string(tensors.size()));

  const std::streampos payload_start = in.tellg();
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& entry = table.at(i);
    const std::string name = entry.at("name").get<std::string>();
    const size_t count = entry.at("count").get<size_t>();
    const size_t offset = entry.at("offset").get<size_t>();
    if (name != tensors[i].name || count != tensors[i].count)
      throw DataError("checkpoint tensor mismatch at '" + name + "': model has '" +
                      tensors[i].name + "' with " +
                      std::to_string(tensors[i].count) + " values");
    in.seekg(payload_start + std::streamoff(offset * sizeof(float)));
    in.read(reinterpret_cast<char*>(tensors[i].data),
            std::streamsize(count * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint '" + path + "'");
  }
  return ckpt;
}

}  // namespace phama
