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

#include "mvp/decoder.hpp"
#include "mvp/model.hpp"
#include "mvp/rng.hpp"

namespace mvp {
namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.heads = 4;
  cfg.ff = 32;
  cfg.max_len = 32;
  cfg.views = 3;
  cfg.vocab_size = 32;
  return cfg;
}

Tensor random_rows(std::size_t n, std::size_t d, SplitMix64& rng) {
  Tensor t({n, d});
  for (double& x : t.data()) x = rng.next_gaussian();
  return t;
}

RelevanceMatrix fake_relevance(const std::vector<Tensor>& per_passage) {
  RelevanceMatrix rel;
  rel.views = static_cast<int>(per_passage[0].dim(0));
  rel.width = static_cast<int>(per_passage[0].dim(1));
  for (const Tensor& t : per_passage) rel.passages.push_back(Var::constant(t));
  return rel;
}

TEST(StackView, RoundTripAndBounds) {
  SplitMix64 rng(41);
  const Tensor a = random_rows(3, 4, rng);
  const Tensor b = random_rows(3, 4, rng);
  const RelevanceMatrix rel = fake_relevance({a, b});
  for (int k = 1; k <= 3; ++k) {
    const Tensor ek = stack_view(rel, k).value();
    ASSERT_EQ(ek.shape(), (std::vector<std::size_t>{2, 4}));
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_DOUBLE_EQ(ek.at(0, j), a.at(static_cast<std::size_t>(k - 1), j));
      EXPECT_DOUBLE_EQ(ek.at(1, j), b.at(static_cast<std::size_t>(k - 1), j));
    }
  }
  EXPECT_THROW(stack_view(rel, 0), ParameterError);
  EXPECT_THROW(stack_view(rel, 4), ParameterError);
}

TEST(StackView, SinglePassageSingleView) {
  SplitMix64 rng(42);
  const Tensor a = random_rows(1, 4, rng);
  const RelevanceMatrix rel = fake_relevance({a});
  EXPECT_TRUE(bitwise_equal(stack_view(rel, 1).value(), a));
}

TEST(DecodeAnchor, SingleKeyAttentionWeightIsExactlyOne) {
  const ModelConfig cfg = small_config();
  const ModelParams params = ModelParams::init(cfg, 51);
  const ModelGraph g = ModelGraph::bind(params, false);
  SplitMix64 rng(52);
  AttentionProbe probe;
  decode_anchor(Var::constant(random_rows(1, 16, rng)), g.dec, cfg, &probe);
  ASSERT_EQ(probe.weights.size(), static_cast<std::size_t>(cfg.decoder_layers * cfg.heads));
  for (const Tensor& w : probe.weights) {
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0], 1.0);  // exact, not approximate
  }
}

TEST(DecodeAnchor, DuplicatedRowsLeaveAnchorUnchanged) {
  const ModelConfig cfg = small_config();
  const ModelParams params = ModelParams::init(cfg, 53);
  const ModelGraph g = ModelGraph::bind(params, false);
  SplitMix64 rng(54);
  const Tensor ek = random_rows(5, 16, rng);
  Tensor doubled({10, 16});
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 16; ++j) doubled.at(i, j) = ek.at(i % 5, j);
  }
  const Tensor a1 = decode_anchor(Var::constant(ek), g.dec, cfg).value();
  const Tensor a2 = decode_anchor(Var::constant(doubled), g.dec, cfg).value();
  EXPECT_LT(max_abs_diff(a1, a2), 1e-10);
}

TEST(DecodeAnchor, RowPermutationInvariantWithinTolerance) {
  const ModelConfig cfg = small_config();
  const ModelParams params = ModelParams::init(cfg, 55);
  const ModelGraph g = ModelGraph::bind(params, false);
  SplitMix64 rng(56);
  const Tensor ek = random_rows(12, 16, rng);
  const Tensor base = decode_anchor(Var::constant(ek), g.dec, cfg).value();
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 100; ++trial) {
    rng.shuffle(perm);
    Tensor shuffled({12, 16});
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < 16; ++j) shuffled.at(i, j) = ek.at(perm[i], j);
    }
    const Tensor anchor = decode_anchor(Var::constant(shuffled), g.dec, cfg).value();
    EXPECT_LT(max_abs_diff(base, anchor), 1e-9);
  }
}

TEST(Score, HandVectors) {
  // anchors ([1,0],[0,1]), relevance rows ([2,0],[0,3]) per the module example
  AnchorSet anchors;
  anchors.anchors.push_back(Var::constant(Tensor({1, 2}, {1, 0})));
  anchors.anchors.push_back(Var::constant(Tensor({1, 2}, {0, 1})));
  const RelevanceMatrix rel = fake_relevance({Tensor({2, 2}, {2, 0, 0, 3})});
  EXPECT_DOUBLE_EQ(score(anchors, rel, AggregationStrategy::Mean()).scores[0], 2.5);
  EXPECT_DOUBLE_EQ(score(anchors, rel, AggregationStrategy::Max()).scores[0], 3.0);
  EXPECT_DOUBLE_EQ(score(anchors, rel, AggregationStrategy::SingleView(1)).scores[0], 2.0);
  EXPECT_DOUBLE_EQ(score(anchors, rel, AggregationStrategy::SingleView(2)).scores[0], 3.0);
}

TEST(Score, SingleViewDegeneracyAndZeroAnchors) {
  SplitMix64 rng(57);
  const RelevanceMatrix rel = fake_relevance({random_rows(1, 4, rng), random_rows(1, 4, rng)});
  AnchorSet anchors;
  anchors.anchors.push_back(Var::constant(random_rows(1, 4, rng)));
  const auto mean = score(anchors, rel, AggregationStrategy::Mean()).scores;
  const auto mx = score(anchors, rel, AggregationStrategy::Max()).scores;
  const auto single = score(anchors, rel, AggregationStrategy::SingleView(1)).scores;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(mean[i], single[i]);
    EXPECT_DOUBLE_EQ(mx[i], single[i]);
  }
  AnchorSet zero;
  zero.anchors.push_back(Var::constant(Tensor({1, 4})));
  for (double s : score(zero, rel, AggregationStrategy::Mean()).scores) {
    EXPECT_DOUBLE_EQ(s, 0.0);
  }
}

TEST(Score, MeanOfIdenticalViewScoresEqualsSingleView) {
  // identical rows across views: Mean == SingleView(k) for every k
  SplitMix64 rng(58);
  Tensor row = random_rows(1, 6, rng);
  Tensor passage({3, 6});
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 6; ++j) passage.at(k, j) = row.at(0, j);
  }
  Tensor anchor = random_rows(1, 6, rng);
  AnchorSet anchors;
  for (int k = 0; k < 3; ++k) anchors.anchors.push_back(Var::constant(anchor));
  const RelevanceMatrix rel = fake_relevance({passage});
  const double mean = score(anchors, rel, AggregationStrategy::Mean()).scores[0];
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(score(anchors, rel, AggregationStrategy::SingleView(k)).scores[0], mean, 1e-12);
  }
}

TEST(Score, DimensionMismatchNamesAxis) {
  SplitMix64 rng(59);
  const RelevanceMatrix rel = fake_relevance({random_rows(2, 4, rng)});
  AnchorSet anchors;
  anchors.anchors.push_back(Var::constant(random_rows(1, 4, rng)));
  try {
    score(anchors, rel, AggregationStrategy::Mean());
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("views"), std::string::npos);
  }
}

TEST(Rank, ExamplesAndTies) {
  EXPECT_EQ(rank(std::vector<double>{3, 1, 2}), (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(rank(std::vector<double>{5, 5, 5}), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Rank, AgreesWithIndependentSortOracle) {
  SplitMix64 rng(60);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next_below(12);
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.next_gaussian();
    if (trial % 3 == 0 && n > 2) scores[1] = scores[0];  // exercise ties
    const auto got = rank(scores);
    // oracle: selection sort on (score desc, index asc)
    std::vector<std::size_t> remaining(n);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> expected;
    while (!remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < remaining.size(); ++i) {
        if (scores[remaining[i]] > scores[remaining[best]]) best = i;
      }
      expected.push_back(remaining[best]);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    EXPECT_EQ(got, expected);
  }
}

std::vector<int> content(std::initializer_list<int> offsets) {
  std::vector<int> out;
  for (int o : offsets) out.push_back(Vocab::kContentBase + o);
  return out;
}

TEST(Rerank, SingleCandidate) {
  const ModelParams params = ModelParams::init(small_config(), 61);
  const Reranker reranker(params);
  const RerankResult r = reranker.rerank(content({0}), {content({1, 2})});
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.scores.size(), 1u);
}

TEST(Rerank, PermutedCandidatesGivePermutedScores) {
  const ModelParams params = ModelParams::init(small_config(), 62);
  const Reranker reranker(params);
  const auto query = content({0, 1});
  const std::vector<std::vector<int>> candidates{content({2, 3}), content({4, 5}),
                                                 content({6}), content({7, 8, 9}),
                                                 content({1, 2})};
  const RerankResult base = reranker.rerank(query, candidates);
  SplitMix64 rng(63);
  std::vector<std::size_t> perm(candidates.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(perm);
    std::vector<std::vector<int>> shuffled;
    for (std::size_t i : perm) shuffled.push_back(candidates[i]);
    const RerankResult run = reranker.rerank(query, shuffled);
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
      EXPECT_NEAR(run.scores[pos], base.scores[perm[pos]], 1e-9);
    }
    // induced ranking over original candidate identities must be identical
    std::vector<std::size_t> induced;
    for (std::size_t pos : run.order) induced.push_back(perm[pos]);
    EXPECT_EQ(induced, base.order);
  }
}

TEST(Rerank, DecodeStepCounterCountsQueries) {
  const ModelParams params = ModelParams::init(small_config(), 64);
  const Reranker reranker(params);
  const auto query = content({0});
  for (int i = 0; i < 50; ++i) {
    reranker.rerank(query, {content({1}), content({2}), content({3})});
  }
  EXPECT_EQ(reranker.decode_steps(), 50u);
}

}  // namespace
}  // namespace mvp
