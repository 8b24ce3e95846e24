// Copyright 2026 The Signex Authors.
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

#include "signex/crf.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace signex {
namespace {

using crf::kEnd;
using crf::kStart;
using crf::TransitionMatrix;

EmissionScores zeros(std::size_t n) { return EmissionScores::Zero(static_cast<Eigen::Index>(n), kNumTags); }

TEST(PathScore, ZeroParameters) {
  const std::vector<Tag> path{Tag::BeginP, Tag::InsideP, Tag::O};
  EXPECT_EQ(crf::path_score(zeros(3), TransitionMatrix::Zero(), path), 0.0);
}

TEST(PathScore, SingleToken) {
  EmissionScores e(1, kNumTags);
  e << 0.5, -1.0, 2.0, 0.25, 3.0, -0.75, 1.5;
  for (std::size_t t = 0; t < kNumTags; ++t) {
    TransitionMatrix A = TransitionMatrix::Zero();
    A(kStart, t) = 0.3;
    A(t, kEnd) = -1.1;
    EXPECT_DOUBLE_EQ(crf::path_score(e, A, std::vector<Tag>{tag_at(t)}), e(0, t) + 0.3 - 1.1);
  }
}

TEST(PathScore, MatchesTermByTermOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto P = testing::random_emissions(rng, 3);
    const auto A = testing::random_transitions(rng);
    const auto y = testing::random_path(rng, 3);
    EXPECT_NEAR(crf::path_score(P, A, y), testing::brute_score(P, A, y), 1e-12);
  }
}

TEST(PathScore, DimensionMismatch) {
  EXPECT_THROW(crf::path_score(zeros(3), TransitionMatrix::Zero(), std::vector<Tag>(2, Tag::O)),
               InputError);
  EXPECT_THROW(crf::log_partition(zeros(0), TransitionMatrix::Zero()), InputError);
  EXPECT_THROW(crf::viterbi_decode(zeros(0), TransitionMatrix::Zero(), true), InputError);
}

TEST(LogPartition, ZeroParametersCountsPaths) {
  for (std::size_t n = 1; n <= 6; ++n)
    EXPECT_NEAR(crf::log_partition(zeros(n), TransitionMatrix::Zero()), n * std::log(7.0), 1e-12);
}

TEST(LogPartition, SingleTokenIsLogSumExp) {
  std::mt19937_64 rng(2);
  const auto P = testing::random_emissions(rng, 1);
  const auto A = testing::random_transitions(rng);
  double sum = 0.0;
  for (std::size_t t = 0; t < kNumTags; ++t) sum += std::exp(A(kStart, t) + P(0, t) + A(t, kEnd));
  EXPECT_NEAR(crf::log_partition(P, A), std::log(sum), 1e-12);
}

TEST(LogPartition, MatchesEnumerationN4) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto P = testing::random_emissions(rng, 4);
    const auto A = testing::random_transitions(rng);
    const double expected = testing::brute_log_partition(P, A);
    EXPECT_NEAR(crf::log_partition(P, A), expected, 1e-10 * std::abs(expected));
  }
}

TEST(LogPartition, StableForLargeScores) {
  EmissionScores P = zeros(30);
  P.array() += 800.0;
  const double z = crf::log_partition(P, TransitionMatrix::Zero());
  EXPECT_TRUE(std::isfinite(z));
  EXPECT_NEAR(z, 30 * (800.0 + std::log(7.0)), 1e-8);
}

TEST(LogPartition, ForwardEqualsBackward) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto P = testing::random_emissions(rng, 1 + rng() % 20, 3.0);
    const auto A = testing::random_transitions(rng, 2.0);
    const double f = crf::log_partition(P, A);
    EXPECT_NEAR(crf::log_partition_backward(P, A), f, 1e-10 * std::max(1.0, std::abs(f)));
  }
}

TEST(Nll, ConfidentGoldIsNearZero) {
  EmissionScores P = zeros(1);
  P(0, index_of(Tag::BeginAbn)) = 50.0;
  EXPECT_NEAR(crf::nll(P, TransitionMatrix::Zero(), std::vector<Tag>{Tag::BeginAbn}), 0.0, 1e-12);
}

TEST(Nll, ZeroParameters) {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 5; ++n)
    EXPECT_NEAR(crf::nll(zeros(n), TransitionMatrix::Zero(), testing::random_path(rng, n)),
                n * std::log(7.0), 1e-12);
}

TEST(Nll, MatchesEnumeratedProbability) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    const auto y = testing::random_path(rng, n);
    const double expected = testing::brute_log_partition(P, A) - testing::brute_score(P, A, y);
    EXPECT_NEAR(crf::nll(P, A, y), expected, 1e-9);
  }
}

TEST(Probability, NormalizesOverAllPaths) {
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    const double log_z = crf::log_partition(P, A);
    double total = 0.0;
    testing::for_each_path(n, [&](const std::vector<Tag>& y) {
      const double p = std::exp(crf::path_score(P, A, y) - log_z);
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_GE(crf::nll(P, A, y), 0.0);
      total += p;
    });
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(NllGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    const auto y = testing::random_path(rng, n);
    const auto grad = crf::nll_gradient(P, A, y);
    const auto fd = testing::finite_difference_nll(P, A, y, 1e-5);
    EXPECT_LT((grad.emissions - fd.emissions).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LT((grad.transitions - fd.transitions).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_NEAR(grad.nll, crf::nll(P, A, y), 1e-12);
  }
}

TEST(NllGradient, EmissionRowsSumToZero) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 15;
    const auto grad = crf::nll_gradient(testing::random_emissions(rng, n),
                                        testing::random_transitions(rng), testing::random_path(rng, n));
    for (Eigen::Index i = 0; i < grad.emissions.rows(); ++i)
      EXPECT_NEAR(grad.emissions.row(i).sum(), 0.0, 1e-12);
    // Start row and end column also hold one unit of probability mass each.
    EXPECT_NEAR(grad.transitions.row(kStart).sum(), 0.0, 1e-12);
    EXPECT_NEAR(grad.transitions.col(kEnd).sum(), 0.0, 1e-12);
  }
}

TEST(NllGradient, UniformAtZeroPoint) {
  const auto grad = crf::nll_gradient(zeros(1), TransitionMatrix::Zero(), std::vector<Tag>{Tag::BeginD});
  for (std::size_t t = 0; t < kNumTags; ++t)
    EXPECT_NEAR(grad.emissions(0, t), 1.0 / 7.0 - (tag_at(t) == Tag::BeginD ? 1.0 : 0.0), 1e-15);
}

TEST(Viterbi, DecoupledIsPerPositionArgmax) {
  std::mt19937_64 rng(10);
  const auto P = testing::random_emissions(rng, 12);
  const auto path = crf::viterbi_decode(P, TransitionMatrix::Zero(), false);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index best;
    P.row(i).maxCoeff(&best);
    EXPECT_EQ(index_of(path[static_cast<std::size_t>(i)]), static_cast<std::size_t>(best));
  }
}

TEST(Viterbi, TiesGoToLowestTag) {
  EXPECT_EQ(crf::viterbi_decode(zeros(4), TransitionMatrix::Zero(), false), std::vector<Tag>(4, Tag::O));
  EmissionScores P = zeros(1);
  P(0, index_of(Tag::BeginD)) = 1.0;
  P(0, index_of(Tag::BeginAbn)) = 1.0;
  EXPECT_EQ(crf::viterbi_decode(P, TransitionMatrix::Zero(), false), std::vector<Tag>{Tag::BeginD});
}

TEST(Viterbi, MatchesBruteForceArgmax) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    EXPECT_EQ(crf::viterbi_decode(P, A, false), testing::brute_argmax(P, A, false));
    EXPECT_EQ(crf::viterbi_decode(P, A, true), testing::brute_argmax(P, A, true));
  }
}

TEST(Viterbi, ConstrainedNeverEmitsInvalidPaths) {
  EmissionScores P = zeros(2);
  P(0, index_of(Tag::O)) = 5.0;
  P(1, index_of(Tag::InsideP)) = 5.0;
  EXPECT_EQ(crf::viterbi_decode(P, TransitionMatrix::Zero(), false),
            (std::vector<Tag>{Tag::O, Tag::InsideP}));
  const auto constrained = crf::viterbi_decode(P, TransitionMatrix::Zero(), true);
  EXPECT_TRUE(validate_path(constrained).empty());

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    const auto path = crf::viterbi_decode(testing::random_emissions(rng, n, 4.0),
                                          testing::random_transitions(rng, 2.0), true);
    ASSERT_TRUE(validate_path(path).empty());
  }
}

TEST(Viterbi, BeatsRandomPaths) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + rng() % 20;
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    const double best = crf::path_score(P, A, crf::viterbi_decode(P, A, false));
    for (int k = 0; k < 1000; ++k)
      ASSERT_GE(best, crf::path_score(P, A, testing::random_path(rng, n)));
  }
}

TEST(Viterbi, InvariantUnderPerPositionShift) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> shift(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const auto P = testing::random_emissions(rng, n);
    const auto A = testing::random_transitions(rng);
    EmissionScores shifted = P;
    double total = 0.0;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) {
      const double c = shift(rng);
      shifted.row(i).array() += c;
      total += c;
    }
    const auto y = testing::random_path(rng, n);
    EXPECT_NEAR(crf::path_score(shifted, A, y), crf::path_score(P, A, y) + total, 1e-9);
    EXPECT_NEAR(crf::nll(shifted, A, y), crf::nll(P, A, y), 1e-9);
    EXPECT_EQ(crf::viterbi_decode(shifted, A, false), crf::viterbi_decode(P, A, false));
    EXPECT_EQ(crf::viterbi_decode(shifted, A, true), crf::viterbi_decode(P, A, true));
  }
}

}  // namespace
}  // namespace signex
