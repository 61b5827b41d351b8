//
// Copyright 2026 The filaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FILAUDIT_REPORT_HPP
#define FILAUDIT_REPORT_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fil/random.hpp"

namespace fil {

inline constexpr std::string_view kVersion = "0.1.0";

// Reproducibility record embedded as the first line of every report. Two
// runs with identical manifests produce identical numerical content; no
// timestamps or host state.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config;

  nlohmann::json to_json() const {
    return nlohmann::json{{"record", "manifest"},
                          {"tool", "filaudit"},
                          {"version", std::string(kVersion)},
                          {"command", command},
                          {"seed", seed},
                          {"rng", std::string(Rng::name())},
                          {"config", config}};
  }
};

// Plot-ready equal-width histogram bins.
struct Histogram {
  std::vector<double> edges;        // bins + 1 entries
  std::vector<std::size_t> counts;  // bins entries

  static Histogram build(const Eigen::VectorXd& values, int bins = 20) {
    Histogram h;
    if (values.size() == 0 || bins < 1) return h;
    double lo = values.minCoeff();
    double hi = values.maxCoeff();
    if (lo == hi) hi = lo + 1.0;  // degenerate spread: single occupied bin
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
      h.edges[static_cast<std::size_t>(b)] =
          lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      int b = static_cast<int>(static_cast<double>(bins) * (values[i] - lo) /
                               (hi - lo));
      b = std::clamp(b, 0, bins - 1);
      ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"edges", edges}, {"counts", counts}};
  }
};

// JSON-lines sink; writes the manifest first.
class JsonLinesWriter {
 public:
  JsonLinesWriter(std::ostream& out, const RunManifest& manifest)
      : out_(&out) {
    write(manifest.to_json());
  }

  void write(const nlohmann::json& record) { (*out_) << record.dump() << '\n'; }

 private:
  std::ostream* out_;
};

// Spearman rank correlation with average ranks on ties.
inline double spearman_correlation(const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& b) {
  const Eigen::Index n = a.size();
  if (n != b.size() || n < 2) {
    throw std::invalid_argument("spearman_correlation: bad inputs");
  }
  auto ranks = [n](const Eigen::VectorXd& v) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return v[x] < v[y]; });
    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
      Eigen::Index j = i;
      while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                              v[order[static_cast<std::size_t>(i)]]) {
        ++j;
      }
      const double average = 0.5 * static_cast<double>(i + j) + 1.0;
      for (Eigen::Index k = i; k <= j; ++k) {
        r[order[static_cast<std::size_t>(k)]] = average;
      }
      i = j + 1;
    }
    return r;
  };
  const Eigen::VectorXd ra = ranks(a);
  const Eigen::VectorXd rb = ranks(b);
  const Eigen::VectorXd ca = ra.array() - ra.mean();
  const Eigen::VectorXd cb = rb.array() - rb.mean();
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  return denom == 0.0 ? 0.0 : ca.dot(cb) / denom;
}

// FNV-1a digest of a vector's bytes; compact fingerprint for traces.
inline std::string vector_digest(const Eigen::VectorXd& v) {
  std::uint64_t hash = 1469598103934665603ULL;
  const unsigned char* bytes =
      reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < sizeof(double) * static_cast<std::size_t>(v.size());
       ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buffer);
}

}  // namespace fil

#endif  // FILAUDIT_REPORT_HPP
