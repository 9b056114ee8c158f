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

#include "phama/image.hpp"
#include "phama/rng.hpp"

namespace phama {

struct DomainSample {
  Image image;
  int label = 0;
  int domain_id = 0;
  std::string id;  // unique within the dataset, e.g. "photo/dog/001.png"
};

struct Domain {
  std::string name;
  std::vector<DomainSample> samples;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
};

// Labeled samples partitioned by domain with disjoint train/val splits.
// Immutable after construction.
struct MultiDomainDataset {
  std::vector<Domain> domains;
  std::vector<std::string> class_names;
  int num_classes = 0;
  std::vector<std::string> warnings;

  const Domain& domain(int id) const { return domains.at(size_t(id)); }
  int find_domain(const std::string& name) const;
  size_t total_samples() const;
};

// Loads root/<domain>/<class>/*.png with lexicographic ordering. Labels come
// from the sorted union of class directory names across domains. Split files
// root/splits/<domain>_train.txt and <domain>_val.txt (sample paths relative
// to the domain directory, one per line) are honored when both exist;
// otherwise a seeded stratified 90/10 split is drawn per domain. resize_to >
// 0 resizes every image to that square size on load.
MultiDomainDataset load_folder_dataset(const std::string& root, uint64_t seed,
                                       int resize_to = 0);

// Structural checks shared by loaders: split disjointness and per-domain
// class coverage of the train split. Throws DataError on violation.
void validate_dataset(const MultiDomainDataset& ds);

// Seeded stratified 90/10 train/val assignment for one domain; every class
// keeps at least one train sample.
void stratified_split(Domain& dom, int num_classes, Rng rng);

}  // namespace phama
