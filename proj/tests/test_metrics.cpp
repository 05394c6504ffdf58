/*
 * Copyright (c) 2026, the mvp authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "mvp/metrics.hpp"
#include "mvp/rng.hpp"

namespace mvp {
namespace {

TEST(Dcg, SingleRelevantAtTop) {
  EXPECT_DOUBLE_EQ(dcg_at_k({0}, {1.0}, 1), 1.0);
}

TEST(Dcg, DerivedTwoItemValue) {
  // (2^0 - 1)/log2(2) + (2^1 - 1)/log2(3), scalar arithmetic oracle
  EXPECT_NEAR(dcg_at_k({0, 1}, {0.0, 1.0}, 2), 0.63092975357145744, 1e-14);
}

TEST(Dcg, AllZeroRelevanceIsZero) {
  EXPECT_DOUBLE_EQ(dcg_at_k({0, 1, 2}, {0.0, 0.0, 0.0}, 3), 0.0);
}

TEST(Ndcg, IdealOrderingIsExactlyOne) {
  EXPECT_DOUBLE_EQ(ndcg_at_k({0, 1, 2}, {2.0, 1.0, 0.0}, 3), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k({1, 0}, {1.0, 1.0}, 2), 1.0);  // ties: any order ideal
}

TEST(Ndcg, ReversedDerivedValue) {
  EXPECT_NEAR(ndcg_at_k({2, 1, 0}, {2.0, 1.0, 0.0}, 3), 0.58688267143572, 1e-13);
}

TEST(Ndcg, CutoffBeyondLengthEqualsFullLength) {
  const std::vector<std::size_t> ranking{1, 0, 2};
  const std::vector<double> rel{1.0, 2.0, 0.0};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranking, rel, 3), ndcg_at_k(ranking, rel, 50));
}

TEST(Ndcg, AllZeroRelevanceIsUndefined) {
  EXPECT_THROW(ndcg_at_k({0, 1}, {0.0, 0.0}, 2), UndefinedMetricError);
}

TEST(Ndcg, RangeAndTailInvarianceProperties) {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(10);
    std::vector<double> rel(n);
    bool positive = false;
    for (double& r : rel) {
      r = static_cast<double>(rng.next_below(4));
      positive |= r > 0.0;
    }
    if (!positive) rel[0] = 1.0;
    std::vector<std::size_t> ranking(n);
    std::iota(ranking.begin(), ranking.end(), 0);
    rng.shuffle(ranking);
    const std::size_t k = 1 + rng.next_below(n);
    const double v = ndcg_at_k(ranking, rel, k);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);

    // permuting items below the cutoff whose relevance is zero cannot matter
    std::vector<std::size_t> tail_zero;
    for (std::size_t pos = k; pos < n; ++pos) {
      if (rel[ranking[pos]] == 0.0) tail_zero.push_back(pos);
    }
    if (tail_zero.size() >= 2) {
      std::vector<std::size_t> permuted = ranking;
      std::swap(permuted[tail_zero[0]], permuted[tail_zero[1]]);
      EXPECT_DOUBLE_EQ(ndcg_at_k(permuted, rel, k), v);
    }
  }
}

TEST(KendallTau, IdenticalAndReversed) {
  EXPECT_DOUBLE_EQ(kendall_tau({0, 1, 2}, {0, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau({0, 1, 2, 3}, {3, 2, 1, 0}), -1.0);
}

TEST(KendallTau, DerivedOneThird) {
  EXPECT_NEAR(kendall_tau({0, 1, 2}, {0, 2, 1}), 1.0 / 3.0, 1e-15);
}

TEST(KendallTau, RejectsMismatchedIdSets) {
  EXPECT_THROW(kendall_tau({0, 1, 2}, {0, 1, 3}), ParameterError);
  EXPECT_THROW(kendall_tau({0, 1}, {0, 1, 2}), ParameterError);
  EXPECT_THROW(kendall_tau({0, 0, 1}, {0, 1, 2}), ParameterError);
}

}  // namespace
}  // namespace mvp
