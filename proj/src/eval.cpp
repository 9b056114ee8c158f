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

#include "phama/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include <json.hpp>

#include "phama/augment.hpp"
#include "phama/errors.hpp"

namespace fs = std::filesystem;

namespace phama {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void check_classes(const nn::Encoder<float>& enc, const MultiDomainDataset& ds) {
  if (enc.spec().num_classes != ds.num_classes)
    throw DataError("model predicts " +
                    std::to_string(enc.spec().num_classes) +
                    " classes but the dataset has " +
                    std::to_string(ds.num_classes));
}

// Accuracy over one domain with an optional per-sample corruption. kind ""
// runs the clean images through the identical batching path.
double domain_accuracy(nn::Encoder<float>& enc, const Domain& dom,
                       const std::string& kind, int severity, int batch_size,
                       uint64_t seed) {
  size_t correct = 0;
  const size_t n = dom.samples.size();
  if (n == 0) throw DataError("domain '" + dom.name + "' has no samples");
  for (size_t start = 0; start < n; start += size_t(batch_size)) {
    const size_t stop = std::min(n, start + size_t(batch_size));
    std::vector<Image> corrupted;
    std::vector<const Image*> imgs;
    std::vector<int> labels;
    corrupted.reserve(stop - start);
    for (size_t i = start; i < stop; ++i) {
      const DomainSample& s = dom.samples[i];
      if (kind.empty()) {
        imgs.push_back(&s.image);
      } else {
        Rng rng = Rng(seed).child(kind, uint64_t(severity), uint64_t(i));
        corrupted.push_back(corrupt(s.image, kind, severity, rng));
        imgs.push_back(&corrupted.back());
      }
      labels.push_back(s.label);
    }
    auto res =
        enc.forward(nn::to_tensor<float>(imgs), nn::Mode::Eval, false);
    correct += correct_predictions(res.logits, labels);
  }
  return 100.0 * double(correct) / double(n);
}

}  // namespace

size_t correct_predictions(const nn::Mat<float>& logits,
                           const std::vector<int>& labels) {
  if (size_t(logits.rows) != labels.size())
    throw DataError("accuracy: " + std::to_string(logits.rows) +
                    " predictions vs " + std::to_string(labels.size()) +
                    " labels");
  size_t correct = 0;
  for (int r = 0; r < logits.rows; ++r) {
    int arg = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (logits.at(r, c) > logits.at(r, arg)) arg = c;
    if (arg == labels[size_t(r)]) ++correct;
  }
  return correct;
}

double accuracy_percent(const nn::Mat<float>& logits,
                        const std::vector<int>& labels) {
  if (logits.rows == 0) throw DataError("accuracy: empty logits");
  return 100.0 * double(correct_predictions(logits, labels)) /
         double(logits.rows);
}

double evaluate_domain(nn::Encoder<float>& enc, const MultiDomainDataset& ds,
                       int domain_id, int batch_size) {
  check_classes(enc, ds);
  return domain_accuracy(enc, ds.domain(domain_id), "", 0, batch_size, 0);
}

CorruptionTable evaluate_corruptions(nn::Encoder<float>& enc,
                                     const MultiDomainDataset& ds,
                                     int domain_id,
                                     const std::vector<std::string>& kinds,
                                     const std::vector<int>& severities,
                                     int batch_size, uint64_t seed) {
  check_classes(enc, ds);
  const Domain& dom = ds.domain(domain_id);
  for (int s : severities)
    if (s < 1 || s > 5)
      throw ConfigError("eval.severities",
                        "severity must lie in 1..5, got " + std::to_string(s));

  CorruptionTable table;
  table.clean_error =
      100.0 - domain_accuracy(enc, dom, "", 0, batch_size, seed);

  struct Job {
    std::string kind;
    int severity;
  };
  std::vector<Job> jobs;
  for (const std::string& k : kinds)
    for (int s : severities) jobs.push_back({k, s});

  std::vector<double> errors(jobs.size());
  std::vector<std::future<void>> futures;
  futures.reserve(jobs.size());
  for (size_t j = 0; j < jobs.size(); ++j) {
    futures.push_back(std::async(std::launch::async, [&, j] {
      errors[j] = 100.0 - domain_accuracy(enc, dom, jobs[j].kind,
                                          jobs[j].severity, batch_size, seed);
    }));
  }
  for (auto& f : futures) f.get();

  double sum = 0;
  for (size_t j = 0; j < jobs.size(); ++j) {
    table.cells.push_back({jobs[j].kind, jobs[j].severity, errors[j]});
    sum += errors[j];
  }
  table.mean_error = jobs.empty() ? 0.0 : sum / double(jobs.size());
  return table;
}

void export_embeddings(nn::Encoder<float>& enc, const MultiDomainDataset& ds,
                       int domain_id, const std::string& out_dir,
                       int batch_size) {
  check_classes(enc, ds);
  const Domain& dom = ds.domain(domain_id);
  fs::create_directories(out_dir);

  std::vector<float> rows;
  int cols = 0;
  for (size_t start = 0; start < dom.samples.size();
       start += size_t(batch_size)) {
    const size_t stop =
        std::min(dom.samples.size(), start + size_t(batch_size));
    std::vector<const Image*> imgs;
    for (size_t i = start; i < stop; ++i)
      imgs.push_back(&dom.samples[i].image);
    auto res =
        enc.forward(nn::to_tensor<float>(imgs), nn::Mode::Eval, false);
    const nn::Tensor<float>& deep = res.pyramid.back();
    cols = deep.c;
    const float inv = 1.0f / float(deep.plane());
    for (int n = 0; n < deep.n; ++n)
      for (int c = 0; c < deep.c; ++c) {
        const float* p = deep.at(n, c);
        float s = 0;
        for (size_t k = 0; k < deep.plane(); ++k) s += p[k];
        rows.push_back(s * inv);
      }
  }

  const fs::path base(out_dir);
  {
    std::ofstream out(base / "embeddings.f32", std::ios::binary);
    if (!out) throw IoError("cannot write embeddings under '" + out_dir + "'");
    out.write(reinterpret_cast<const char*>(rows.data()),
              std::streamsize(rows.size() * sizeof(float)));
  }
  {
    nlohmann::ordered_json meta;
    meta["rows"] = dom.samples.size();
    meta["cols"] = cols;
    meta["dtype"] = "float32";
    meta["domain"] = dom.name;
    std::ofstream out(base / "embeddings.json", std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(base / "labels.csv", std::ios::binary);
    out << "id,label,domain\n";
    for (const DomainSample& s : dom.samples)
      out << s.id << ',' << s.label << ',' << dom.name << '\n';
  }
}

double EvalReport::average_accuracy() const {
  if (domain_accuracy.empty()) return 0.0;
  double s = 0;
  for (const auto& [name, acc] : domain_accuracy) s += acc;
  return s / double(domain_accuracy.size());
}

void emit_report(const EvalReport& report, const std::string& out_dir) {
  if (report.domain_accuracy.empty())
    throw DataError("report: no evaluations recorded");
  fs::create_directories(out_dir);

  nlohmann::ordered_json j;
  j["schema"] = "phama-eval-report-v1";
  j["config_hash"] = report.config_hash;
  {
    nlohmann::ordered_json acc;
    for (const auto& [name, v] : report.domain_accuracy) acc[name] = v;
    j["domain_accuracy"] = std::move(acc);
  }
  j["average_accuracy"] = report.average_accuracy();
  {
    nlohmann::ordered_json counts;
    for (const auto& [name, v] : report.sample_counts) counts[name] = v;
    j["sample_counts"] = std::move(counts);
  }
  if (report.corruption) {
    nlohmann::ordered_json c;
    c["clean_error"] = report.corruption->clean_error;
    c["mean_error"] = report.corruption->mean_error;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const CorruptionCell& cell : report.corruption->cells)
      cells.push_back({{"kind", cell.kind},
                       {"severity", cell.severity},
                       {"error", cell.error}});
    c["cells"] = std::move(cells);
    j["corruption"] = std::move(c);
  } else {
    j["corruption"] = nullptr;
  }
  {
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!out) throw IoError("cannot write report under '" + out_dir + "'");
    out << j.dump(2) << "\n";
  }

  std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write report under '" + out_dir + "'");
  csv << "section,key,value\n";
  for (const auto& [name, v] : report.domain_accuracy)
    csv << "domain_accuracy," << name << ',' << fmt(v) << '\n';
  csv << "average_accuracy,," << fmt(report.average_accuracy()) << '\n';
  for (const auto& [name, v] : report.sample_counts)
    csv << "sample_count," << name << ',' << v << '\n';
  if (report.corruption) {
    csv << "clean_error,," << fmt(report.corruption->clean_error) << '\n';
    for (const CorruptionCell& cell : report.corruption->cells)
      csv << "corruption_error," << cell.kind << ':' << cell.severity << ','
          << fmt(cell.error) << '\n';
    csv << "mean_corruption_error,," << fmt(report.corruption->mean_error)
        << '\n';
  } else {
    csv << "clean_error,,\n";
    csv << "mean_corruption_error,,\n";
  }
  csv << "config_hash,," << report.config_hash << '\n';
}

void write_spectral_boxplot_csv(const AuditResult& audit,
                                const std::string& path) {
  std::map<std::string, std::vector<double>> fc, fstd;
  for (const SpectralStats& row : audit.rows) {
    fc[row.domain].push_back(row.f_c);
    fstd[row.domain].push_back(row.f_std);
  }
  auto quantile = [](std::vector<double>& v, double p) {
    const double pos = p * double(v.size() - 1);
    const size_t lo = size_t(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "domain,metric,min,q1,median,q3,max\n";
  auto emit = [&](const char* metric,
                  std::map<std::string, std::vector<double>>& groups) {
    for (auto& [domain, vals] : groups) {
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());
      out << domain << ',' << metric << ',' << fmt(vals.front()) << ','
          << fmt(quantile(vals, 0.25)) << ',' << fmt(quantile(vals, 0.5))
          << ',' << fmt(quantile(vals, 0.75)) << ',' << fmt(vals.back())
          << '\n';
    }
  };
  emit("centroid_frequency", fc);
  emit("frequency_std", fstd);
}

}  // namespace phama
