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

#include "fil/report.hpp"

#include <sstream>

#include "gtest/gtest.h"

namespace fil {
namespace {

TEST(HistogramTest, CountsLandInTheRightBins) {
  Eigen::VectorXd values(6);
  values << 0.0, 0.1, 0.5, 0.9, 1.0, 0.45;
  const Histogram h = Histogram::build(values, 2);
  ASSERT_EQ(h.edges.size(), 3u);
  ASSERT_EQ(h.counts.size(), 2u);
  EXPECT_EQ(h.counts[0] + h.counts[1], 6u);
  // Bins are half-open [lo, hi), last bin closed: 0.5 lands in the upper bin.
  EXPECT_EQ(h.counts[0], 3u);
  EXPECT_EQ(h.counts[1], 3u);
}

TEST(HistogramTest, DegenerateValuesOccupyOneBin) {
  const Histogram h = Histogram::build(Eigen::VectorXd::Constant(5, 2.0), 4);
  std::size_t total = 0;
  for (std::size_t c : h.counts) total += c;
  EXPECT_EQ(total, 5u);
}

TEST(JsonLinesTest, ManifestComesFirstAndRunsAreByteStable) {
  RunManifest manifest;
  manifest.command = "audit";
  manifest.seed = 42;
  manifest.config = {{"sigma", 1.0}};

  const auto render = [&] {
    std::ostringstream out;
    JsonLinesWriter writer(out, manifest);
    writer.write({{"record", "eta"}, {"index", 0}, {"eta", 0.125}});
    return out.str();
  };
  const std::string a = render();
  const std::string b = render();
  EXPECT_EQ(a, b);
  const auto first_line = a.substr(0, a.find('\n'));
  const auto parsed = nlohmann::json::parse(first_line);
  EXPECT_EQ(parsed.at("record"), "manifest");
  EXPECT_EQ(parsed.at("seed"), 42);
}

TEST(SpearmanTest, PerfectMonotoneRelationGivesOne) {
  Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  Eigen::VectorXd b = a.array().exp();
  EXPECT_NEAR(spearman_correlation(a, b), 1.0, 1e-12);
  EXPECT_NEAR(spearman_correlation(a, (-b).eval()), -1.0, 1e-12);
}

TEST(SpearmanTest, HandlesTiesWithAverageRanks) {
  Eigen::VectorXd a(4), b(4);
  a << 1.0, 1.0, 2.0, 3.0;
  b << 2.0, 2.0, 4.0, 9.0;
  EXPECT_NEAR(spearman_correlation(a, b), 1.0, 1e-12);
}

TEST(VectorDigestTest, DistinguishesVectors) {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  b << 1, 2, 3.0000001;
  EXPECT_EQ(vector_digest(a), vector_digest(a));
  EXPECT_NE(vector_digest(a), vector_digest(b));
}

}  // namespace
}  // namespace fil
