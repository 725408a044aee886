// Copyright 2026 The mtr Authors
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

#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "mtr/error.hpp"
#include "mtr/evaluator.hpp"
#include "test_util.hpp"

namespace mtr {
namespace {

using testing::random_unit;

TEST(Ranking, QueryPresentInGalleryRanksFirst) {
  Rng rng(51);
  std::vector<UnitVector> g;
  std::vector<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 40; ++i) {
    g.push_back(random_unit(rng, 12));
    ids.push_back(100 + i);
  }
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(score_gallery(g[i], g, ids).front(), ids[i]);
}

TEST(Ranking, TiesKeepAscendingIds) {
  const UnitVector q = UnitVector::checked({1, 0});
  const UnitVector a = UnitVector::checked({0, 1});
  const std::vector<UnitVector> g{a, q, a, a};
  EXPECT_EQ(score_gallery(q, g, {9, 5, 3, 7}), (std::vector<std::uint64_t>{5, 3, 7, 9}));
}

TEST(Ranking, MatchesBruteForceRankCounting) {
  Rng rng(52);
  std::vector<UnitVector> g;
  std::vector<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 50; ++i) {
    g.push_back(random_unit(rng, 8));
    ids.push_back(i * 3);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const UnitVector q = random_unit(rng, 8);
    const auto ranked = score_gallery(q, g, ids);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::size_t better = 0;
      for (const auto& other : g)
        if (dot(q.values(), other.values()) > dot(q.values(), g[i].values())) ++better;
      EXPECT_EQ(ranked[better], ids[i]);
    }
  }
}

TEST(Ranking, EmptyGalleryThrows) {
  EXPECT_THROW(score_gallery(UnitVector::checked({1, 0}), {}, {}), EmptyGallery);
}

TEST(Recall, WorkedRanks) {
  // Positive at ranks 1, 4 and 11 of three queries.
  std::vector<std::vector<std::uint64_t>> rankings(3), positives{{0}, {0}, {0}};
  for (std::size_t r : {1u, 4u, 11u}) {
    std::vector<std::uint64_t> list(12);
    for (std::size_t i = 0; i < 12; ++i) list[i] = i + 1;
    list[r - 1] = 0;
    rankings[r == 1 ? 0 : r == 4 ? 1 : 2] = list;
  }
  EXPECT_NEAR(recall_at_k(rankings, positives, 1), 100.0 / 3, 1e-12);
  EXPECT_NEAR(recall_at_k(rankings, positives, 5), 200.0 / 3, 1e-12);
  EXPECT_NEAR(recall_at_k(rankings, positives, 10), 200.0 / 3, 1e-12);
  EXPECT_EQ(recall_at_k(rankings, positives, 12), 100.0);
  EXPECT_EQ(recall_at_k(rankings, positives, 50), 100.0);
}

struct EvalFixture : ::testing::Test {
  EvalFixture() : bench(generate_benchmark(testing::toy_spec())),
                  model(bench.feature_dim(), bench.instruction_count(), testing::toy_config()) {
    Rng rng(53);
    model.initialize(rng);
  }
  Benchmark bench;
  RetrievalModel model;
};

TEST_F(EvalFixture, ReportIsConsistentAndDeterministic) {
  const MetricsReport r = evaluate(model, bench, Split::kTest);
  EXPECT_EQ(r, evaluate(model, bench, Split::kTest));
  ASSERT_EQ(r.datasets.size(), 2u);
  double r1 = 0, mr = 0;
  for (const auto& d : r.datasets) {
    EXPECT_LE(d.r1, d.r5);
    EXPECT_LE(d.r5, d.r10);
    EXPECT_NEAR(d.mr, (d.r1 + d.r5 + d.r10) / 3, 1e-12);
    EXPECT_EQ(d.queries, 8u);
    ASSERT_TRUE(d.mean_lambda.has_value());
    EXPECT_NEAR(*d.mean_lambda, 0.5, 1e-12);
    r1 += d.r1 / 2;
    mr += d.mr / 2;
  }
  EXPECT_NEAR(r.macro.r1, r1, 1e-12);
  EXPECT_NEAR(r.macro.mr, mr, 1e-12);
  EXPECT_EQ(r.split, "test");
  EXPECT_EQ(MetricsReport::from_json(r.to_json()), r);
  EXPECT_NE(r.to_table().find(r.datasets[1].name), std::string::npos);
}

TEST_F(EvalFixture, EmptyGalleryIsAnError) {
  Dataset ds = bench.datasets[0];
  ds.gallery.clear();
  EXPECT_THROW(evaluate_dataset(model, ds, Split::kTest), EmptyGallery);
}

}  // namespace
}  // namespace mtr
