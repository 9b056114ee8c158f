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
#include <optional>
#include <string>
#include <vector>

#include "phama/dataset.hpp"
#include "phama/nn/encoder.hpp"
#include "phama/spectral.hpp"

namespace phama {

// Top-1 counting. Argmax ties resolve to the lowest class index.
size_t correct_predictions(const nn::Mat<float>& logits,
                           const std::vector<int>& labels);
double accuracy_percent(const nn::Mat<float>& logits,
                        const std::vector<int>& labels);

// Top-1 accuracy (%) over every sample of one domain, batched, no test-time
// augmentation. Throws DataError when the model's class count differs from
// the dataset's.
double evaluate_domain(nn::Encoder<float>& enc, const MultiDomainDataset& ds,
                       int domain_id, int batch_size);

struct CorruptionCell {
  std::string kind;
  int severity = 0;
  double error = 0.0;  // 100 - accuracy, percent
};

struct CorruptionTable {
  double clean_error = 0.0;
  std::vector<CorruptionCell> cells;
  double mean_error = 0.0;  // unweighted mean over cells
};

// Error per (kind, severity) on the domain's samples, each cell corrupted
// with its own seed-derived stream; cells evaluate concurrently. The clean
// pass shares the cell code path, so an "identity" kind reproduces the clean
// error exactly.
CorruptionTable evaluate_corruptions(nn::Encoder<float>& enc,
                                     const MultiDomainDataset& ds,
                                     int domain_id,
                                     const std::vector<std::string>& kinds,
                                     const std::vector<int>& severities,
                                     int batch_size, uint64_t seed);

// Global-average-pooled deepest-level features for every sample of the
// domain: embeddings.f32 (row-major float32), embeddings.json (shape/dtype),
// labels.csv (id,label,domain).
void export_embeddings(nn::Encoder<float>& enc, const MultiDomainDataset& ds,
                       int domain_id, const std::string& out_dir,
                       int batch_size);

struct EvalReport {
  std::map<std::string, double> domain_accuracy;  // domain name -> percent
  std::map<std::string, int> sample_counts;
  std::optional<CorruptionTable> corruption;
  std::string config_hash;

  double average_accuracy() const;
};

// report.json and report.csv under out_dir. Pure function of the report:
// re-emitting writes byte-identical files; absent corruption results keep
// their fields, as null.
void emit_report(const EvalReport& report, const std::string& out_dir);

// Per-domain five-number summaries (min, q1, median, q3, max) of the audit
// statistics, one row per (domain, metric).
void write_spectral_boxplot_csv(const AuditResult& audit,
                                const std::string& path);

}  // namespace phama
