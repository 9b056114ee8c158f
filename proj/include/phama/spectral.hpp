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
#include "phama/fourier.hpp"

namespace phama {

// Power-weighted mean of amplitude values: sum(X_i^3) / sum(X_i^2). Both this
// and frequency_std are degree-1 homogeneous in X. Throws on all-zero input.
double centroid_frequency(const std::vector<double>& amplitudes);

// sqrt(sum((X_i - F_c)^2 * X_i^2) / sum(X_i^2)), the power-weighted spread of
// amplitude values around the centroid.
double frequency_std(const std::vector<double>& amplitudes);

// Center-shifts an amplitude plane, crops the central keep_fraction window,
// applies log1p and flattens row-major. keep_fraction in (0, 1]; crop windows
// smaller than 2x2 are rejected.
std::vector<double> low_frequency_filter(const double* plane, int h, int w,
                                         double keep_fraction);

struct SpectralStats {
  std::string sample_id;
  std::string domain;
  double f_c = 0.0;
  double f_std = 0.0;
};

struct AuditResult {
  std::vector<SpectralStats> rows;               // sorted by sample_id
  std::vector<std::vector<double>> embeddings;   // parallel to rows
  int embedding_dim = 0;
};

// Per-sample amplitude statistics (computed per channel, then averaged) and
// low-frequency amplitude embeddings over up to per_domain samples from each
// domain, drawn deterministically from the seed.
AuditResult audit_dataset(const MultiDomainDataset& ds, int per_domain,
                          double keep_fraction, uint64_t seed);

// Writes stats.csv, embeddings.f32 (row-major float32) and embeddings.json
// (shape, dtype, ids, domains) into out_dir.
void write_audit(const AuditResult& audit, const std::string& out_dir);

}  // namespace phama
