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

#include "phama/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phama/errors.hpp"

namespace phama {
namespace {

// clang-format off
const std::vector<ConfigKeyInfo> kSchema = {
  {"ablate.seeds", "string", "0,1,2",
   "comma-separated seeds; cells report mean and sample std over them"},
  {"ablate.targets", "string", "",
   "comma-separated target domains for grid cells; empty = every domain in turn"},
  {"ablate.variants", "string",
   "baseline_erm,A_apda_only,B_no_momentum,C_o2a_only,D_a2o_only,full_phama",
   "module-ablation rows run by the table5 grid"},
  {"data.classes", "int", "5",
   "synthetic class count (glyph shapes, at most 5)"},
  {"data.domains", "string", "identity,colormap,texture,spectral_noise",
   "synthetic domain style transforms, one domain per entry"},
  {"data.image_size", "int", "32", "synthetic image side length"},
  {"data.resize", "int", "0",
   "square resize applied when loading a folder dataset; 0 keeps native size"},
  {"data.root", "string", "",
   "folder dataset root (root/<domain>/<class>/*.png); required for data.source=folder"},
  {"data.samples_per_class", "int", "200",
   "synthetic samples per class per domain"},
  {"data.source", "string", "synthetic",
   "synthetic | folder"},
  {"eval.batch_size", "int", "256", "forward batch size during evaluation"},
  {"eval.corruption_kinds", "string",
   "gaussian_noise,shot_noise,defocus_blur,contrast,brightness",
   "corruption suite for robustness evaluation"},
  {"eval.severities", "string", "1,2,3,4,5",
   "corruption severity levels, each in 1..5"},
  {"model.arch", "string", "small_convnet", "small_convnet | resnet_style"},
  {"model.conv_blocks", "int", "4",
   "small_convnet stage count; each stage halves the spatial size"},
  {"model.depth", "int", "18", "resnet_style depth, 18 or 34"},
  {"model.fusion_levels", "string", "3,4",
   "pyramid levels (1-indexed, ascending) fused for the patch projection; "
   "protocol grid {(1,2),(2,3),(3,4)}"},
  {"model.proj_dim", "int", "128", "patch embedding dimension"},
  {"model.width", "int", "64", "small_convnet channel width"},
  {"run.seed", "int", "0",
   "master seed; all randomness (init, order, augmentation) derives from it"},
  {"run.target_domain", "string", "",
   "held-out domain name; excluded from training, used for evaluation"},
  {"spectra.keep_fraction", "float", "0.25",
   "central low-frequency window kept by the spectral audit"},
  {"spectra.per_domain", "int", "64",
   "samples audited per domain by analyze-spectra"},
  {"train.augment", "bool", "true",
   "standard crop/flip/jitter augmentation before the amplitude perturbation"},
  {"train.batch_size", "int", "64",
   "protocol default 64 for digits-style runs, 128 for robustness runs"},
  {"train.beta", "float", "0.1",
   "contrast weight; protocol default 0.1 for digits-style runs, 0.5 for "
   "pacs/office-home-style runs; sweep set {0.1,0.5,1.0,2.0,5.0}"},
  {"train.cross_domain_pairs", "bool", "false",
   "restrict amplitude-mix partners to samples from a different domain"},
  {"train.epochs", "int", "30", "total training epochs"},
  {"train.eta", "float", "1.0",
   "upper bound of the amplitude mixing draw, in [0,1]; protocol default 1.0 "
   "for digits/pacs-style runs, 0.2 for office-home-style runs"},
  {"train.lr", "float", "0.05",
   "initial step size; protocol default 0.05 for digits-style runs, 0.1 for "
   "robustness runs"},
  {"train.lr_decay", "float", "0.1", "multiplicative step-size decay factor"},
  {"train.lr_decay_every", "int", "20",
   "epochs between decays; protocol default 20 for digits-style runs, 60 for "
   "robustness runs"},
  {"train.matching", "string", "patchnce",
   "patch matching loss: patchnce | mse | smooth_l1"},
  {"train.momentum_coef", "float", "0.9995",
   "momentum-encoder averaging coefficient, in [0,1)"},
  {"train.ramp", "bool", "true",
   "ramp the contrast weight over the first ramp_epochs epochs; off for "
   "robustness runs"},
  {"train.ramp_epochs", "int", "5", "ramp duration in epochs"},
  {"train.selection", "string", "val",
   "checkpoint selection: val (pooled source validation accuracy, earliest "
   "tie) | last (final epoch, robustness protocol)"},
  {"train.sgd_momentum", "float", "0.9", "classical SGD momentum"},
  {"train.tau", "float", "0.07", "contrast temperature; protocol default 0.07"},
  {"train.variant", "string", "full_phama",
   "baseline_erm | A_apda_only | B_no_momentum | C_o2a_only | D_a2o_only | "
   "full_phama"},
  {"train.weight_decay", "float", "5e-4", "L2 weight decay"},
};
// clang-format on

const ConfigKeyInfo* find_key(const std::string& key) {
  for (const auto& k : kSchema)
    if (key == k.key) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

const std::vector<ConfigKeyInfo>& config_schema() { return kSchema; }

Config::Config() {
  for (const auto& k : kSchema) values_[k.key] = k.def;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", path + ":" + std::to_string(lineno) +
                                ": expected 'key = value', got '" + line + "'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  const ConfigKeyInfo* info = find_key(key);
  if (!info) throw ConfigError(key, "unknown configuration key");
  const std::string type = info->type;
  if (type == "int")
    parse_int(key, value);
  else if (type == "float")
    parse_double(key, value);
  else if (type == "bool")
    parse_bool(key, value);
  values_[key] = value;
}

void Config::apply_override(const std::string& key_eq_value) {
  size_t eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError(key_eq_value, "override must look like key=value");
  set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  return parse_int(key, raw(key));
}

double Config::get_double(const std::string& key) const {
  return parse_double(key, raw(key));
}

bool Config::get_bool(const std::string& key) const {
  return parse_bool(key, raw(key));
}

const std::string& Config::get_string(const std::string& key) const {
  return raw(key);
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_csv(raw(key))) out.push_back(parse_int(key, item));
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_csv(raw(key)))
    out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  return split_csv(raw(key));
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string Config::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

std::string Config::resolved_json() const {
  nlohmann::ordered_json j;
  for (const auto& k : kSchema) {
    const std::string& v = values_.at(k.key);
    const std::string type = k.type;
    if (type == "int")
      j[k.key] = parse_int(k.key, v);
    else if (type == "float")
      j[k.key] = parse_double(k.key, v);
    else if (type == "bool")
      j[k.key] = parse_bool(k.key, v);
    else
      j[k.key] = v;
  }
  return j.dump(2) + "\n";
}

void Config::write_resolved(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << resolved_json();
}

std::string config_help_text() {
  std::string out = "Config keys (config file lines or --set key=value):\n";
  for (const auto& k : kSchema) {
    out += "  ";
    out += k.key;
    out += " (";
    out += k.type;
    out += ", default ";
    out += (k.def[0] == '\0') ? "empty" : k.def;
    out += ")\n      ";
    out += k.note;
    out += "\n";
  }
  return out;
}

}  // namespace phama
