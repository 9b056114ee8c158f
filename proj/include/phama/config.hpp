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
#include <map>
#include <string>
#include <vector>

namespace phama {

struct ConfigKeyInfo {
  const char* key;
  const char* type;  // int | float | bool | string
  const char* def;
  const char* note;  // shown in --help; protocol defaults and valid values
};

// Full flat-namespace schema, sorted by key.
const std::vector<ConfigKeyInfo>& config_schema();

// Flat dotted-key configuration. Every key has a typed default from the
// schema; unknown keys and unparseable values are rejected at set time with
// the offending key path.
class Config {
 public:
  Config();

  // key-value text: one `key = value` per line, '#' comments, blank lines ok.
  static Config from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& key_eq_value);  // "key=value"

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;       // csv
  std::vector<double> get_double_list(const std::string& key) const; // csv
  std::vector<std::string> get_string_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Canonical "key=value\n" serialization over all keys, sorted.
  std::string canonical() const;
  // FNV-1a 64-bit hash of canonical(), as 16 hex digits.
  std::string hash() const;
  // JSON object of every key with its effective value (typed).
  std::string resolved_json() const;
  void write_resolved(const std::string& path) const;

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

// Key table rendered for --help: one line per key with type, default, and
// note.
std::string config_help_text();

}  // namespace phama
