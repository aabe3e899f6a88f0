// Copyright 2026 The mcgasr Authors
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

#include "mcgasr/gate_labels.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mcgasr/io_util.h"

namespace mcgasr {

CorpusStats corpus_stats(const std::vector<LogFbank>& clean_set) {
  if (clean_set.empty()) throw ConfigError("corpus_stats: empty clean set");
  const Index q = clean_set[0].q;
  const Index d = static_cast<Index>(clean_set.size());
  // per-clip time-means first; clips keep their own T in the inner average
  std::vector<std::vector<double>> clip_means;
  clip_means.reserve(clean_set.size());
  for (const auto& clip : clean_set) {
    if (clip.q != q) {
      throw ShapeError(str_cat("corpus_stats: clip has ", clip.q, " bins, expected ", q));
    }
    if (clip.t < 1) throw ShapeError("corpus_stats: clip with no frames");
    std::vector<double> m(static_cast<size_t>(q), 0.0);
    for (Index t = 0; t < clip.t; ++t) {
      for (Index k = 0; k < q; ++k) m[static_cast<size_t>(k)] += clip.at(t, k);
    }
    for (auto& v : m) v /= static_cast<double>(clip.t);
    clip_means.push_back(std::move(m));
  }
  CorpusStats stats;
  stats.q = q;
  stats.d = d;
  stats.mu.assign(static_cast<size_t>(q), 0.0);
  stats.sigma.assign(static_cast<size_t>(q), 0.0);
  for (const auto& m : clip_means) {
    for (Index k = 0; k < q; ++k) stats.mu[static_cast<size_t>(k)] += m[static_cast<size_t>(k)];
  }
  for (auto& v : stats.mu) v /= static_cast<double>(d);
  // population standard deviation: divide by D, not D-1
  for (const auto& m : clip_means) {
    for (Index k = 0; k < q; ++k) {
      double diff = m[static_cast<size_t>(k)] - stats.mu[static_cast<size_t>(k)];
      stats.sigma[static_cast<size_t>(k)] += diff * diff;
    }
  }
  for (auto& v : stats.sigma) v = std::sqrt(v / static_cast<double>(d));
  return stats;
}

ThresholdSet make_thresholds(const CorpusStats& stats, std::vector<double> epsilons) {
  if (epsilons.empty()) throw ConfigError("make_thresholds: no offsets given");
  if (!std::is_sorted(epsilons.begin(), epsilons.end())) {
    throw ConfigError("make_thresholds: offsets must be sorted ascending");
  }
  ThresholdSet ts;
  ts.q = stats.q;
  ts.epsilons = std::move(epsilons);
  ts.kappas.resize(static_cast<size_t>(ts.n() * stats.q));
  for (Index i = 0; i < ts.n(); ++i) {
    for (Index k = 0; k < stats.q; ++k) {
      ts.kappas[static_cast<size_t>(i * stats.q + k)] =
          stats.mu[static_cast<size_t>(k)] +
          ts.epsilons[static_cast<size_t>(i)] * stats.sigma[static_cast<size_t>(k)];
    }
  }
  return ts;
}

std::vector<GateLabel> make_gate_labels(const LogFbank& x_clean, const ThresholdSet& thresholds) {
  if (x_clean.q != thresholds.q) {
    throw ShapeError(str_cat("make_gate_labels: clip has ", x_clean.q, " bins, thresholds have ",
                             thresholds.q));
  }
  std::vector<GateLabel> labels;
  labels.reserve(static_cast<size_t>(thresholds.n()));
  for (Index i = 0; i < thresholds.n(); ++i) {
    GateLabel lab;
    lab.t = x_clean.t;
    lab.q = x_clean.q;
    lab.epsilon = thresholds.epsilons[static_cast<size_t>(i)];
    lab.values.resize(static_cast<size_t>(x_clean.t * x_clean.q));
    for (Index t = 0; t < x_clean.t; ++t) {
      for (Index k = 0; k < x_clean.q; ++k) {
        lab.values[static_cast<size_t>(t * x_clean.q + k)] =
            x_clean.at(t, k) >= thresholds.kappa(i, k) ? 1 : 0;
      }
    }
    labels.push_back(std::move(lab));
  }
  return labels;
}

namespace {
constexpr char kStatsMagic[9] = "MCGASRST";
constexpr std::uint32_t kStatsVersion = 1;
}  // namespace

void write_stats(const std::string& path, const CorpusStats& stats,
                 const std::vector<double>& epsilons) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(str_cat("stats: cannot open '", path, "' for writing"));
  os.write(kStatsMagic, 8);
  write_pod<std::uint32_t>(os, kStatsVersion);
  write_pod<std::int64_t>(os, stats.q);
  write_pod<std::int64_t>(os, stats.d);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(epsilons.size()));
  write_vec(os, epsilons);
  write_vec(os, stats.mu);
  write_vec(os, stats.sigma);
  if (!os) throw IoError(str_cat("stats: write failed for '", path, "'"));
}

CorpusStats read_stats(const std::string& path, std::vector<double>* epsilons_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(str_cat("stats: cannot open '", path, "'"));
  expect_magic(is, kStatsMagic, "stats cache");
  auto version = read_pod<std::uint32_t>(is, "stats version");
  if (version != kStatsVersion) throw IoError(str_cat("stats: unsupported version ", version));
  CorpusStats stats;
  stats.q = read_pod<std::int64_t>(is, "bin count");
  stats.d = read_pod<std::int64_t>(is, "clip count");
  auto n_eps = read_pod<std::uint32_t>(is, "offset count");
  std::vector<double> eps;
  read_vec(is, eps, n_eps, "offsets");
  if (stats.q <= 0 || stats.d <= 0) throw IoError("stats: invalid header");
  read_vec(is, stats.mu, static_cast<size_t>(stats.q), "mu");
  read_vec(is, stats.sigma, static_cast<size_t>(stats.q), "sigma");
  if (epsilons_out) *epsilons_out = std::move(eps);
  return stats;
}

}  // namespace mcgasr
