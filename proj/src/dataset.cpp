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

#include "phama/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "phama/errors.hpp"
#include "phama/png_io.hpp"
#include "phama/rng.hpp"

namespace fs = std::filesystem;

namespace phama {

int MultiDomainDataset::find_domain(const std::string& name) const {
  for (size_t i = 0; i < domains.size(); ++i)
    if (domains[i].name == name) return int(i);
  return -1;
}

size_t MultiDomainDataset::total_samples() const {
  size_t n = 0;
  for (const Domain& d : domains) n += d.samples.size();
  return n;
}

void validate_dataset(const MultiDomainDataset& ds) {
  for (const Domain& d : ds.domains) {
    std::set<int> train(d.train_idx.begin(), d.train_idx.end());
    for (int i : d.val_idx)
      if (train.count(i))
        throw DataError("domain '" + d.name +
                        "': train and val splits overlap");
    std::set<int> present, in_train;
    for (const DomainSample& s : d.samples) present.insert(s.label);
    for (int i : d.train_idx) in_train.insert(d.samples[size_t(i)].label);
    for (int cls : present)
      if (!in_train.count(cls))
        throw DataError("domain '" + d.name + "': class '" +
                        ds.class_names[size_t(cls)] +
                        "' present but missing from the train split");
  }
}

namespace {

std::vector<std::string> sorted_subdirs(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(p))
    if (e.is_directory()) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> sorted_pngs(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Split file: one sample path per line, relative to the domain directory;
// trailing tokens after whitespace (e.g. numeric labels) are ignored.
std::set<std::string> read_split_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read split file " + p.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    if (ss >> tok) out.insert(tok);
  }
  return out;
}

}  // namespace

void stratified_split(Domain& dom, int num_classes, Rng rng) {
  std::vector<std::vector<int>> by_class;
  by_class.resize(size_t(num_classes));
  for (size_t i = 0; i < dom.samples.size(); ++i)
    by_class[size_t(dom.samples[i].label)].push_back(int(i));
  for (auto& idx : by_class) {
    if (idx.empty()) continue;
    rng.shuffle(idx.begin(), idx.end());
    size_t n_val = std::min(idx.size() / 10, idx.size() - 1);
    for (size_t k = 0; k < idx.size(); ++k)
      (k < n_val ? dom.val_idx : dom.train_idx).push_back(idx[k]);
  }
  std::sort(dom.train_idx.begin(), dom.train_idx.end());
  std::sort(dom.val_idx.begin(), dom.val_idx.end());
}

MultiDomainDataset load_folder_dataset(const std::string& root, uint64_t seed,
                                       int resize_to) {
  if (!fs::is_directory(root))
    throw IoError("dataset root '" + root + "' is not a directory");

  MultiDomainDataset ds;
  std::vector<std::string> domain_names;
  for (const std::string& name : sorted_subdirs(root))
    if (name != "splits") domain_names.push_back(name);
  if (domain_names.size() < 2)
    throw DataError("dataset root '" + root +
                    "' must contain at least 2 domain directories");

  std::set<std::string> class_union;
  for (const std::string& d : domain_names)
    for (const std::string& c : sorted_subdirs(fs::path(root) / d))
      class_union.insert(c);
  ds.class_names.assign(class_union.begin(), class_union.end());
  ds.num_classes = int(ds.class_names.size());
  if (ds.num_classes == 0)
    throw DataError("dataset root '" + root + "' has no class directories");

  std::map<std::string, int> class_id;
  for (int i = 0; i < ds.num_classes; ++i) class_id[ds.class_names[size_t(i)]] = i;
  std::vector<size_t> class_totals(size_t(ds.num_classes), 0);

  Rng master(seed);
  for (size_t d = 0; d < domain_names.size(); ++d) {
    Domain dom;
    dom.name = domain_names[d];
    std::map<std::string, int> by_rel_path;
    for (const std::string& cls : sorted_subdirs(fs::path(root) / dom.name)) {
      fs::path cls_dir = fs::path(root) / dom.name / cls;
      for (const std::string& file : sorted_pngs(cls_dir)) {
        DomainSample s;
        s.image = read_png((cls_dir / file).string());
        if (resize_to > 0 &&
            (s.image.height != resize_to || s.image.width != resize_to))
          s.image = resize_bilinear(s.image, resize_to, resize_to);
        s.label = class_id.at(cls);
        s.domain_id = int(d);
        s.id = dom.name + "/" + cls + "/" + file;
        by_rel_path[cls + "/" + file] = int(dom.samples.size());
        class_totals[size_t(s.label)] += 1;
        dom.samples.push_back(std::move(s));
      }
    }
    for (const std::string& cls : ds.class_names) {
      if (!fs::is_directory(fs::path(root) / dom.name / cls))
        ds.warnings.push_back("domain '" + dom.name + "' has no class '" +
                              cls + "' directory; zero samples there");
    }

    fs::path train_file = fs::path(root) / "splits" / (dom.name + "_train.txt");
    fs::path val_file = fs::path(root) / "splits" / (dom.name + "_val.txt");
    if (fs::exists(train_file) && fs::exists(val_file)) {
      std::set<std::string> train = read_split_file(train_file);
      std::set<std::string> val = read_split_file(val_file);
      for (const auto& [rel, idx] : by_rel_path) {
        if (train.count(rel))
          dom.train_idx.push_back(idx);
        else if (val.count(rel))
          dom.val_idx.push_back(idx);
        else
          ds.warnings.push_back("domain '" + dom.name + "': sample '" + rel +
                                "' listed in no split file; excluded");
      }
    } else {
      stratified_split(dom, ds.num_classes, master.child("split", d));
    }
    ds.domains.push_back(std::move(dom));
  }

  for (int c = 0; c < ds.num_classes; ++c)
    if (class_totals[size_t(c)] == 0)
      throw DataError("class '" + ds.class_names[size_t(c)] +
                      "' has no samples in any domain");
  validate_dataset(ds);
  return ds;
}

}  // namespace phama
