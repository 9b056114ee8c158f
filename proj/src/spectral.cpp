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

#include "phama/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "phama/errors.hpp"
#include "phama/rng.hpp"

namespace phama {

double centroid_frequency(const std::vector<double>& amplitudes) {
  double num = 0.0, den = 0.0;
  for (double x : amplitudes) {
    if (x < 0.0 || !std::isfinite(x))
      throw DataError("centroid_frequency: amplitudes must be finite and "
                      "nonnegative");
    num += x * x * x;
    den += x * x;
  }
  if (den == 0.0)
    throw NumericError("centroid_frequency: undefined statistic (all-zero "
                       "amplitudes)");
  return num / den;
}

double frequency_std(const std::vector<double>& amplitudes) {
  double fc = centroid_frequency(amplitudes);
  double num = 0.0, den = 0.0;
  for (double x : amplitudes) {
    num += (x - fc) * (x - fc) * x * x;
    den += x * x;
  }
  return std::sqrt(num / den);
}

std::vector<double> low_frequency_filter(const double* plane, int h, int w,
                                         double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ConfigError("spectra.keep_fraction", "must be in (0, 1]");
  int kh = int(std::lround(keep_fraction * h));
  int kw = int(std::lround(keep_fraction * w));
  if (kh < 2 || kw < 2)
    throw ConfigError("spectra.keep_fraction",
                      "crop window smaller than 2x2 for plane " +
                          std::to_string(h) + "x" + std::to_string(w));
  const int r0 = (h - kh) / 2;
  const int c0 = (w - kw) / 2;
  const int sh = h / 2;  // center shift puts the DC bin at (h/2, w/2)
  const int sw = w / 2;
  std::vector<double> out;
  out.reserve(size_t(kh) * kw);
  for (int r = r0; r < r0 + kh; ++r) {
    int u = (r - sh + h) % h;
    for (int c = c0; c < c0 + kw; ++c) {
      int v = (c - sw + w) % w;
      out.push_back(std::log1p(plane[size_t(u) * w + v]));
    }
  }
  return out;
}

AuditResult audit_dataset(const MultiDomainDataset& ds, int per_domain,
                          double keep_fraction, uint64_t seed) {
  if (per_domain < 1)
    throw ConfigError("spectra.per_domain", "must be at least 1");
  AuditResult result;
  Rng master(seed);
  int want_h = -1, want_w = -1;
  for (size_t d = 0; d < ds.domains.size(); ++d) {
    const Domain& dom = ds.domains[d];
    if (dom.samples.empty())
      throw DataError("audit: domain '" + dom.name + "' has no samples");
    std::vector<int> order(dom.samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng pick = master.child("audit", d);
    pick.shuffle(order.begin(), order.end());
    size_t take = std::min(size_t(per_domain), order.size());
    for (size_t k = 0; k < take; ++k) {
      const DomainSample& s = dom.samples[size_t(order[k])];
      if (want_h < 0) {
        want_h = s.image.height;
        want_w = s.image.width;
      } else if (s.image.height != want_h || s.image.width != want_w) {
        throw DataError("audit: mixed image sizes; resize the dataset on "
                        "load first");
      }
      PolarSpectrum p = to_polar(fft2(s.image));
      SpectralStats row;
      row.sample_id = s.id;
      row.domain = dom.name;
      std::vector<double> chan(p.amplitude.plane_size());
      std::vector<double> mean_plane(p.amplitude.plane_size(), 0.0);
      for (int c = 0; c < p.amplitude.channels; ++c) {
        std::copy(p.amplitude.plane(c),
                  p.amplitude.plane(c) + chan.size(), chan.begin());
        row.f_c += centroid_frequency(chan);
        row.f_std += frequency_std(chan);
        for (size_t i = 0; i < chan.size(); ++i) mean_plane[i] += chan[i];
      }
      row.f_c /= p.amplitude.channels;
      row.f_std /= p.amplitude.channels;
      for (double& v : mean_plane) v /= p.amplitude.channels;
      result.rows.push_back(std::move(row));
      result.embeddings.push_back(low_frequency_filter(
          mean_plane.data(), want_h, want_w, keep_fraction));
    }
  }
  result.embedding_dim =
      result.embeddings.empty() ? 0 : int(result.embeddings.front().size());

  std::vector<size_t> order(result.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return result.rows[a].sample_id < result.rows[b].sample_id;
  });
  AuditResult sorted;
  sorted.embedding_dim = result.embedding_dim;
  for (size_t i : order) {
    sorted.rows.push_back(std::move(result.rows[i]));
    sorted.embeddings.push_back(std::move(result.embeddings[i]));
  }
  return sorted;
}

void write_audit(const AuditResult& audit, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::ofstream csv(out_dir + "/stats.csv");
  if (!csv) throw IoError("cannot write " + out_dir + "/stats.csv");
  csv << "sample_id,domain,f_c,f_std\n";
  char buf[64];
  for (const SpectralStats& r : audit.rows) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", r.f_c, r.f_std);
    csv << r.sample_id << ',' << r.domain << ',' << buf << '\n';
  }

  std::ofstream bin(out_dir + "/embeddings.f32", std::ios::binary);
  if (!bin) throw IoError("cannot write " + out_dir + "/embeddings.f32");
  for (const auto& row : audit.embeddings) {
    std::vector<float> f(row.begin(), row.end());
    bin.write(reinterpret_cast<const char*>(f.data()),
              std::streamsize(f.size() * sizeof(float)));
  }

  nlohmann::json meta;
  meta["rows"] = audit.rows.size();
  meta["cols"] = audit.embedding_dim;
  meta["dtype"] = "float32";
  meta["order"] = "row-major";
  std::vector<std::string> ids, domains;
  for (const SpectralStats& r : audit.rows) {
    ids.push_back(r.sample_id);
    domains.push_back(r.domain);
  }
  meta["ids"] = ids;
  meta["domains"] = domains;
  std::ofstream js(out_dir + "/embeddings.json");
  if (!js) throw IoError("cannot write " + out_dir + "/embeddings.json");
  js << meta.dump(2) << '\n';
}

}  // namespace phama
