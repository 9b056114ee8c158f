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
#include <fstream>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "phama/config.hpp"
#include "phama/dataset.hpp"
#include "phama/nn/encoder.hpp"
#include "phama/nn/objective.hpp"

namespace phama {

// Module-ablation rows: which augmentation, contrast directions, and target
// network are active.
enum class Variant {
  BaselineErm,  // cross-entropy on originals only
  ApdaOnly,     // amplitude perturbation, both classification terms, no contrast
  NoMomentum,   // contrast both ways against online targets (gradients on both sides)
  O2aOnly,      // original anchors vs momentum augmented targets
  A2oOnly,      // augmented anchors vs momentum original targets
  Full,         // both directions against momentum targets
};

Variant parse_variant(const std::string& name);
const std::string& variant_name(Variant v);
const std::vector<std::string>& all_variant_names();

struct VariantTraits {
  bool apda = false;       // augmented view exists
  bool contrast = false;   // patch matching term active
  bool momentum = false;   // targets come from the momentum network
  bool dir_o2a = false;
  bool dir_a2o = false;
  bool target_grads = false;  // online targets: gradient flows into both sides
};
VariantTraits variant_traits(Variant v);

// Builds the dataset named by the config: the synthetic multi-domain
// benchmark or a folder dataset, both seeded by run.seed.
MultiDomainDataset build_dataset(const Config& cfg);

// Encoder architecture from the model.* keys.
nn::EncoderSpec make_encoder_spec(const Config& cfg, int num_classes);

// 0-based index of the chosen epoch. rule "val": argmax, earliest on ties;
// rule "last": final epoch.
int select_model(const std::vector<double>& val_history,
                 const std::string& rule);

struct TrainResult {
  std::vector<double> val_history;  // pooled source validation accuracy (%)
  int best_epoch = 0;               // 0-based
  std::string best_path;
  std::string last_path;
  int steps = 0;
  double final_total = 0.0;
};

// One optimization run. Owns the online network, the optional momentum
// network, SGD state, logging, and checkpointing, so tests can inspect
// intermediate state. Single-threaded and bitwise deterministic for a fixed
// config and seed.
class Trainer {
 public:
  Trainer(const Config& cfg, const MultiDomainDataset& ds,
          const std::string& out_dir);
  ~Trainer();

  void run_epoch(int epoch);
  TrainResult finish();

  nn::Encoder<float>& online() { return *online_; }
  nn::Encoder<float>* momentum() { return momentum_.get(); }
  const std::vector<double>& val_history() const { return val_history_; }
  const std::unordered_set<std::string>& trained_sample_ids() const {
    return seen_ids_;
  }
  int epochs() const { return epochs_; }
  double epoch_lr(int epoch) const;
  double source_val_accuracy();

 private:
  void step_batch(int epoch, const std::vector<const DomainSample*>& batch);
  void log_step(int epoch, double lr, const nn::LossBreakdown& bd);
  void save(const std::string& name, int epoch);

  const Config& cfg_;
  const MultiDomainDataset& ds_;
  std::string out_dir_;
  Variant variant_;
  VariantTraits traits_;
  nn::MatchKind kind_;
  int target_id_ = -1;
  std::vector<std::pair<int, int>> train_index_;  // (domain, sample)
  std::vector<std::pair<int, int>> val_index_;
  Rng master_;
  std::unique_ptr<nn::Encoder<float>> online_;
  std::unique_ptr<nn::Encoder<float>> momentum_;
  std::vector<std::vector<float>> velocity_;
  std::ofstream log_;
  std::vector<double> val_history_;
  std::unordered_set<std::string> seen_ids_;
  int epochs_ = 0;
  int batch_ = 0;
  int step_ = 0;
  double best_val_ = -1.0;
  int best_epoch_ = -1;
  double last_total_ = 0.0;
  double cur_lr_ = 0.0;
};

// Full run: all epochs, best/last checkpoints, train_log.jsonl and
// config_resolved.json under out_dir. Throws NumericError when the loss goes
// non-finite (the offending step is in the log and the message).
TrainResult train(const Config& cfg, const MultiDomainDataset& ds,
                  const std::string& out_dir);

struct CellResult {
  std::string grid;
  std::string cell;
  std::string target;
  std::vector<uint64_t> seeds;      // completed seeds
  std::vector<double> accuracies;   // target-domain accuracy per completed seed
  int collapsed = 0;                // failed seeds (divergence or other errors)
  std::string note;                 // first failure message
  double mean() const;
  double stddev() const;  // sample std over seeds, 0 when fewer than 2
};

// Trains every cell of the named grid (table5 variants, table6 matching
// kinds, beta sweep, fusion-level pairs) over ablate.targets × ablate.seeds,
// evaluates each on its target domain, and writes <grid>.csv (plus
// plot_beta_sweep.csv for the beta grid) under out_dir. Cell failures are
// recorded and the grid continues.
std::vector<CellResult> run_ablation_grid(const Config& base,
                                          const std::string& grid,
                                          const std::string& out_dir);

void write_grid_csv(const std::vector<CellResult>& results,
                    const std::string& path);
void write_beta_sweep_csv(const std::vector<CellResult>& results,
                          const std::string& path);

}  // namespace phama
