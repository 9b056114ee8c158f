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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phama/nn/layers.hpp"
#include "phama/nn/tensor.hpp"

namespace phama::nn {

// Mean over the batch of -log softmax probability of the true class.
// When d_logits is given it receives the gradient of that mean.
template <typename T>
double cross_entropy(const Mat<T>& logits, const std::vector<int>& labels,
                     Mat<T>* d_logits = nullptr) {
  if (int(labels.size()) != logits.rows)
    throw DataError("cross_entropy: " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(logits.rows) + " rows");
  if (logits.rows == 0) throw DataError("cross_entropy: empty batch");
  if (d_logits) *d_logits = Mat<T>(logits.rows, logits.cols);

  double total = 0;
  for (int r = 0; r < logits.rows; ++r) {
    const int y = labels[size_t(r)];
    if (y < 0 || y >= logits.cols)
      throw DataError("cross_entropy: label " + std::to_string(y) +
                      " outside [0," + std::to_string(logits.cols) + ")");
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < logits.cols; ++c)
      m = std::max(m, double(logits.at(r, c)));
    double z = 0;
    for (int c = 0; c < logits.cols; ++c)
      z += std::exp(double(logits.at(r, c)) - m);
    const double lse = m + std::log(z);
    total += lse - double(logits.at(r, y));
    if (d_logits) {
      for (int c = 0; c < logits.cols; ++c) {
        const double p = std::exp(double(logits.at(r, c)) - lse);
        d_logits->at(r, c) =
            T((p - (c == y ? 1.0 : 0.0)) / double(logits.rows));
      }
    }
  }
  return total / double(logits.rows);
}

// Patchwise P-way contrastive classification (one term per anchor location,
// positives at the same location of the target view, negatives at the other
// locations of the same sample). Rows hold `patches` consecutive locations
// per sample; the per-sample location sums are averaged over samples.
// Optional gradients for the anchor and the target side; leave d_target null
// when the target comes from the momentum network (stop-gradient).
template <typename T>
double patchnce(const Mat<T>& anchor, const Mat<T>& target, int patches,
                double tau, Mat<T>* d_anchor = nullptr,
                Mat<T>* d_target = nullptr) {
  if (patches < 2)
    throw DataError("patch contrast needs at least 2 locations per sample, "
                    "got " + std::to_string(patches));
  if (tau <= 0)
    throw ConfigError("train.tau", "temperature must be positive");
  if (anchor.rows != target.rows || anchor.cols != target.cols)
    throw DataError("patch contrast: anchor/target shape mismatch");
  if (anchor.rows % patches != 0)
    throw DataError("patch contrast: row count not a multiple of the "
                    "location count");
  const int pairs = anchor.rows / patches;
  const int D = anchor.cols;

  if (d_anchor) *d_anchor = Mat<T>(anchor.rows, anchor.cols);
  if (d_target) *d_target = Mat<T>(target.rows, target.cols);

  double total = 0;
  std::vector<double> s(size_t(patches) * patches);
  std::vector<double> prob(size_t(patches) * patches);
  for (int k = 0; k < pairs; ++k) {
    const int base = k * patches;
    for (int i = 0; i < patches; ++i)
      for (int j = 0; j < patches; ++j) {
        double dot = 0;
        for (int d = 0; d < D; ++d)
          dot += double(anchor.at(base + i, d)) * target.at(base + j, d);
        s[size_t(i) * patches + j] = dot / tau;
      }
    for (int i = 0; i < patches; ++i) {
      const double* row = s.data() + size_t(i) * patches;
      double m = row[0];
      for (int j = 1; j < patches; ++j) m = std::max(m, row[j]);
      double z = 0;
      for (int j = 0; j < patches; ++j) z += std::exp(row[j] - m);
      const double lse = m + std::log(z);
      total += lse - row[i];
      if (d_anchor || d_target)
        for (int j = 0; j < patches; ++j)
          prob[size_t(i) * patches + j] = std::exp(row[j] - lse);
    }
    if (d_anchor || d_target) {
      const double scale = 1.0 / (tau * pairs);
      for (int i = 0; i < patches; ++i)
        for (int j = 0; j < patches; ++j) {
          const double ds =
              (prob[size_t(i) * patches + j] - (i == j ? 1.0 : 0.0)) * scale;
          if (d_anchor)
            for (int d = 0; d < D; ++d)
              d_anchor->at(base + i, d) +=
                  T(ds * double(target.at(base + j, d)));
          if (d_target)
            for (int d = 0; d < D; ++d)
              d_target->at(base + j, d) +=
                  T(ds * double(anchor.at(base + i, d)));
        }
    }
  }
  return total / double(pairs);
}

enum class MatchKind { PatchNCE, MSE, SmoothL1 };

inline MatchKind parse_match_kind(const std::string& s) {
  if (s == "patchnce") return MatchKind::PatchNCE;
  if (s == "mse") return MatchKind::MSE;
  if (s == "smooth_l1") return MatchKind::SmoothL1;
  throw ConfigError("train.matching", "unknown matching loss '" + s + "'");
}

inline std::string match_kind_name(MatchKind k) {
  switch (k) {
    case MatchKind::PatchNCE: return "patchnce";
    case MatchKind::MSE: return "mse";
    default: return "smooth_l1";
  }
}

// Alignment alternatives: patchnce as above; mse is the mean over rows of the
// squared L2 row difference; smooth_l1 is the elementwise piecewise
// quadratic/linear penalty (transition 1.0) averaged over all elements.
template <typename T>
double matching_loss(const Mat<T>& anchor, const Mat<T>& target, int patches,
                     MatchKind kind, double tau, Mat<T>* d_anchor = nullptr,
                     Mat<T>* d_target = nullptr) {
  if (kind == MatchKind::PatchNCE)
    return patchnce(anchor, target, patches, tau, d_anchor, d_target);
  if (anchor.rows != target.rows || anchor.cols != target.cols)
    throw DataError("matching loss: anchor/target shape mismatch");
  if (anchor.rows == 0) throw DataError("matching loss: empty input");

  if (d_anchor) *d_anchor = Mat<T>(anchor.rows, anchor.cols);
  if (d_target) *d_target = Mat<T>(target.rows, target.cols);

  double total = 0;
  if (kind == MatchKind::MSE) {
    const double inv_rows = 1.0 / anchor.rows;
    for (int r = 0; r < anchor.rows; ++r)
      for (int c = 0; c < anchor.cols; ++c) {
        const double z = double(anchor.at(r, c)) - target.at(r, c);
        total += z * z;
        if (d_anchor) d_anchor->at(r, c) = T(2.0 * z * inv_rows);
        if (d_target) d_target->at(r, c) = T(-2.0 * z * inv_rows);
      }
    return total * inv_rows;
  }
  const double inv_n = 1.0 / (double(anchor.rows) * anchor.cols);
  for (int r = 0; r < anchor.rows; ++r)
    for (int c = 0; c < anchor.cols; ++c) {
      const double z = double(anchor.at(r, c)) - target.at(r, c);
      const double az = std::abs(z);
      total += az < 1.0 ? 0.5 * z * z : az - 0.5;
      const double dz = std::clamp(z, -1.0, 1.0) * inv_n;
      if (d_anchor) d_anchor->at(r, c) = T(dz);
      if (d_target) d_target->at(r, c) = T(-dz);
    }
  return total * inv_n;
}

// Sum of the two cross-view directions: original-view anchors against
// momentum augmented-view targets, and augmented-view anchors against
// momentum original-view targets. The momentum side receives no gradient.
template <typename T>
double cross_contrast(const Mat<T>& p_o, const Mat<T>& p_a,
                      const Mat<T>& p_o_m, const Mat<T>& p_a_m, int patches,
                      MatchKind kind, double tau, Mat<T>* d_po = nullptr,
                      Mat<T>* d_pa = nullptr) {
  if (p_o.rows != p_a.rows || p_o.rows != p_o_m.rows ||
      p_o.rows != p_a_m.rows || p_o.cols != p_a.cols ||
      p_o.cols != p_o_m.cols || p_o.cols != p_a_m.cols)
    throw DataError("cross contrast: embedding sets must share shape");
  return matching_loss(p_o, p_a_m, patches, kind, tau, d_po) +
         matching_loss(p_a, p_o_m, patches, kind, tau, d_pa);
}

// Exponential warm-up of the contrast weight over the first ramp_epochs
// epochs, constant afterwards; the disabled flag pins it at beta_max.
inline double beta_schedule(int epoch, int ramp_epochs, double beta_max,
                            bool ramp_enabled) {
  if (epoch < 0) throw DataError("beta_schedule: negative epoch");
  if (!ramp_enabled || ramp_epochs <= 0) return beta_max;
  const double t = std::min(double(epoch) / double(ramp_epochs), 1.0);
  if (t >= 1.0) return beta_max;
  return beta_max * std::exp(-5.0 * (1.0 - t) * (1.0 - t));
}

struct LossBreakdown {
  double cls_original = 0;
  double cls_augmented = 0;
  double contrast = 0;
  double beta_effective = 0;
  double total = 0;
};

inline LossBreakdown make_breakdown(double cls_o, double cls_a,
                                    double contrast, double beta) {
  return {cls_o, cls_a, contrast, beta,
          0.5 * (cls_o + cls_a) + beta * contrast};
}

template <typename T>
void copy_params(const std::vector<Param<T>*>& src,
                 const std::vector<Param<T>*>& dst) {
  if (src.size() != dst.size())
    throw DataError("parameter copy: mismatched parameter lists");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->size() != dst[i]->size())
      throw DataError("parameter copy: mismatch at '" + src[i]->name + "'");
    dst[i]->w = src[i]->w;
  }
}

// Momentum-parameter update: each momentum value moves toward its online
// counterpart by the (1 - m) fraction. Applied once per optimizer step.
template <typename T>
void ema_update(const std::vector<Param<T>*>& online,
                const std::vector<Param<T>*>& momentum, double m) {
  if (m < 0.0 || m >= 1.0)
    throw ConfigError("train.momentum_coef", "coefficient must be in [0,1)");
  if (online.size() != momentum.size())
    throw DataError("momentum update: mismatched parameter lists");
  for (size_t i = 0; i < online.size(); ++i) {
    Param<T>& tgt = *momentum[i];
    const Param<T>& src = *online[i];
    if (src.name != tgt.name || src.size() != tgt.size())
      throw DataError("momentum update: shape mismatch at '" + src.name + "'");
    for (size_t j = 0; j < src.size(); ++j)
      tgt.w[j] = T(m) * tgt.w[j] + T(1.0 - m) * src.w[j];
  }
}

template <typename T>
struct PairLossGrads {
  Mat<T> d_logits_o, d_logits_a;
  Mat<T> d_emb_o, d_emb_a;          // anchor-side (online) gradients
  Mat<T> d_tgt_o, d_tgt_a;          // target-side gradients (no-momentum variant)
};

// Combined objective over one original/augmented pair batch. The contrast
// directions are selectable so the ablation variants can drop either one;
// target-side gradients are produced only when requested (targets produced by
// the online network instead of the momentum network).
template <typename T>
LossBreakdown total_loss(const Mat<T>& logits_o, const Mat<T>& logits_a,
                         const std::vector<int>& labels, const Mat<T>* emb_o,
                         const Mat<T>* emb_a, const Mat<T>* tgt_o,
                         const Mat<T>* tgt_a, int patches, MatchKind kind,
                         double tau, double beta_effective, bool dir_o2a,
                         bool dir_a2o, PairLossGrads<T>* grads = nullptr,
                         bool target_grads = false) {
  const double cls_o = cross_entropy(logits_o, labels,
                                     grads ? &grads->d_logits_o : nullptr);
  const double cls_a = cross_entropy(logits_a, labels,
                                     grads ? &grads->d_logits_a : nullptr);
  if (grads) {
    const T half = T(0.5);
    for (T& v : grads->d_logits_o.v) v *= half;
    for (T& v : grads->d_logits_a.v) v *= half;
  }

  double contrast = 0;
  if ((dir_o2a || dir_a2o) && beta_effective != 0.0) {
    if (!emb_o || !emb_a || !tgt_o || !tgt_a)
      throw DataError("total loss: contrast requested without embeddings");
    if (dir_o2a)
      contrast += matching_loss(*emb_o, *tgt_a, patches, kind, tau,
                                grads ? &grads->d_emb_o : nullptr,
                                grads && target_grads ? &grads->d_tgt_a
                                                      : nullptr);
    if (dir_a2o)
      contrast += matching_loss(*emb_a, *tgt_o, patches, kind, tau,
                                grads ? &grads->d_emb_a : nullptr,
                                grads && target_grads ? &grads->d_tgt_o
                                                      : nullptr);
    if (grads) {
      const T b = T(beta_effective);
      for (T& v : grads->d_emb_o.v) v *= b;
      for (T& v : grads->d_emb_a.v) v *= b;
      for (T& v : grads->d_tgt_o.v) v *= b;
      for (T& v : grads->d_tgt_a.v) v *= b;
    }
  }
  return make_breakdown(cls_o, cls_a, contrast, beta_effective);
}

}  // namespace phama::nn
