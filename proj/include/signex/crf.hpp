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

#pragma once

// Linear-chain CRF over the 7-tag set.
//
// A path y_1..y_n over a sentence with emission scores P (n x k) scores
//
//   score(y) = A[start, y_1] + sum_i A[y_i, y_{i+1}] + A[y_n, end] + sum_i P[i, y_i]
//
// where A is (k+2) x (k+2) and rows/columns k and k+1 hold the virtual start
// and end states. Column `start` and row `end` are never read.
//
// Everything is accumulated in log space with a max-shifted logsumexp.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "signex/corpus.hpp"
#include "signex/tags.hpp"
#include "signex/tagscheme.hpp"

namespace signex::crf {

inline constexpr std::size_t kStart = kNumTags;
inline constexpr std::size_t kEnd = kNumTags + 1;
inline constexpr std::size_t kNumStates = kNumTags + 2;

using TransitionMatrix = Eigen::Matrix<double, static_cast<int>(kNumStates),
                                       static_cast<int>(kNumStates), Eigen::RowMajor>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline TransitionMatrix zero_transitions() { return TransitionMatrix::Zero(); }

namespace detail {

inline Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

inline void check_emissions(const EmissionScores& emissions) {
  if (emissions.rows() == 0) throw InputError("emission matrix has no rows");
}

inline void check_path(const EmissionScores& emissions, std::span<const Tag> path) {
  check_emissions(emissions);
  if (static_cast<std::size_t>(emissions.rows()) != path.size())
    throw InputError("dimension mismatch: " + std::to_string(emissions.rows()) +
                     " emission rows vs path of length " + std::to_string(path.size()));
}

template <typename Range>
double logsumexp(const Range& values) {
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

// n x k table of log-space prefix (alpha) or suffix (beta) scores.
using Lattice = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumTags), Eigen::RowMajor>;

// alpha(i, t): log-sum of scores of all prefixes ending in tag t at i,
// including P[i, t].
inline Lattice forward(const EmissionScores& P, const TransitionMatrix& A) {
  const Eigen::Index n = P.rows();
  Lattice alpha(n, kNumTags);
  for (std::size_t t = 0; t < kNumTags; ++t)
    alpha(0, ix(t)) = A(ix(kStart), ix(t)) + P(0, ix(t));
  std::array<double, kNumTags> terms{};
  for (Eigen::Index i = 1; i < n; ++i) {
    for (std::size_t t = 0; t < kNumTags; ++t) {
      for (std::size_t s = 0; s < kNumTags; ++s) terms[s] = alpha(i - 1, ix(s)) + A(ix(s), ix(t));
      alpha(i, ix(t)) = logsumexp(terms) + P(i, ix(t));
    }
  }
  return alpha;
}

// beta(i, t): log-sum of scores of all suffixes after tag t at i, including
// the transition into end but excluding P[i, t].
inline Lattice backward(const EmissionScores& P, const TransitionMatrix& A) {
  const Eigen::Index n = P.rows();
  Lattice beta(n, kNumTags);
  for (std::size_t t = 0; t < kNumTags; ++t) beta(n - 1, ix(t)) = A(ix(t), ix(kEnd));
  std::array<double, kNumTags> terms{};
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    for (std::size_t s = 0; s < kNumTags; ++s) {
      for (std::size_t t = 0; t < kNumTags; ++t)
        terms[t] = A(ix(s), ix(t)) + P(i + 1, ix(t)) + beta(i + 1, ix(t));
      beta(i, ix(s)) = logsumexp(terms);
    }
  }
  return beta;
}

}  // namespace detail

inline double path_score(const EmissionScores& emissions, const TransitionMatrix& A,
                         std::span<const Tag> path) {
  using detail::ix;
  detail::check_path(emissions, path);
  double score = A(ix(kStart), ix(index_of(path.front()))) +
                 A(ix(index_of(path.back())), ix(kEnd));
  for (std::size_t i = 0; i < path.size(); ++i) {
    score += emissions(ix(i), ix(index_of(path[i])));
    if (i + 1 < path.size()) score += A(ix(index_of(path[i])), ix(index_of(path[i + 1])));
  }
  return score;
}

inline double path_score(const EmissionMatrix& emissions, const TransitionMatrix& A,
                         const TagSequence& path) {
  return path_score(emissions.scores, A, path.tags);
}

// log of the sum of exp(score) over all k^n paths (forward algorithm).
inline double log_partition(const EmissionScores& emissions, const TransitionMatrix& A) {
  using detail::ix;
  detail::check_emissions(emissions);
  const auto alpha = detail::forward(emissions, A);
  std::array<double, kNumTags> terms{};
  const Eigen::Index last = emissions.rows() - 1;
  for (std::size_t t = 0; t < kNumTags; ++t) terms[t] = alpha(last, ix(t)) + A(ix(t), ix(kEnd));
  return detail::logsumexp(terms);
}

inline double log_partition(const EmissionMatrix& emissions, const TransitionMatrix& A) {
  return log_partition(emissions.scores, A);
}

// Same quantity via the backward recursion.
inline double log_partition_backward(const EmissionScores& emissions, const TransitionMatrix& A) {
  using detail::ix;
  detail::check_emissions(emissions);
  const auto beta = detail::backward(emissions, A);
  std::array<double, kNumTags> terms{};
  for (std::size_t t = 0; t < kNumTags; ++t)
    terms[t] = A(ix(kStart), ix(t)) + emissions(0, ix(t)) + beta(0, ix(t));
  return detail::logsumexp(terms);
}

// Negative log-likelihood of `gold`: log Z - score(gold). Never negative.
inline double nll(const EmissionScores& emissions, const TransitionMatrix& A,
                  std::span<const Tag> gold) {
  const double score = path_score(emissions, A, gold);
  return std::max(0.0, log_partition(emissions, A) - score);
}

inline double nll(const EmissionMatrix& emissions, const TransitionMatrix& A,
                  const TagSequence& gold) {
  return nll(emissions.scores, A, gold.tags);
}

struct NllGradient {
  double nll = 0.0;
  EmissionScores emissions;     // d nll / d P
  TransitionMatrix transitions; // d nll / d A
};

// Expected counts minus gold counts, via forward-backward.
inline NllGradient nll_gradient(const EmissionScores& emissions, const TransitionMatrix& A,
                                std::span<const Tag> gold) {
  using detail::ix;
  detail::check_path(emissions, gold);
  const Eigen::Index n = emissions.rows();
  const auto alpha = detail::forward(emissions, A);
  const auto beta = detail::backward(emissions, A);

  std::array<double, kNumTags> terms{};
  for (std::size_t t = 0; t < kNumTags; ++t) terms[t] = alpha(n - 1, ix(t)) + A(ix(t), ix(kEnd));
  const double log_z = detail::logsumexp(terms);

  NllGradient grad;
  grad.nll = std::max(0.0, log_z - path_score(emissions, A, gold));
  grad.emissions = EmissionScores::Zero(n, kNumTags);
  grad.transitions = TransitionMatrix::Zero();

  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < kNumTags; ++t) {
      const double marginal = std::exp(alpha(i, ix(t)) + beta(i, ix(t)) - log_z);
      grad.emissions(i, ix(t)) = marginal;
      if (i == 0) grad.transitions(ix(kStart), ix(t)) += marginal;
      if (i == n - 1) grad.transitions(ix(t), ix(kEnd)) += marginal;
    }
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (std::size_t s = 0; s < kNumTags; ++s) {
      for (std::size_t t = 0; t < kNumTags; ++t) {
        grad.transitions(ix(s), ix(t)) +=
            std::exp(alpha(i, ix(s)) + A(ix(s), ix(t)) + emissions(i + 1, ix(t)) +
                     beta(i + 1, ix(t)) - log_z);
      }
    }
  }

  grad.transitions(ix(kStart), ix(index_of(gold.front()))) -= 1.0;
  grad.transitions(ix(index_of(gold.back())), ix(kEnd)) -= 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto g = index_of(gold[static_cast<std::size_t>(i)]);
    grad.emissions(i, ix(g)) -= 1.0;
    if (i + 1 < n)
      grad.transitions(ix(g), ix(index_of(gold[static_cast<std::size_t>(i + 1)]))) -= 1.0;
  }
  return grad;
}

inline NllGradient nll_gradient(const EmissionMatrix& emissions, const TransitionMatrix& A,
                                const TagSequence& gold) {
  return nll_gradient(emissions.scores, A, gold.tags);
}

// Highest-scoring path. Ties go to the lowest tag index. With constrain_bio,
// I-X may only follow B-X or I-X (including at sentence start).
inline std::vector<Tag> viterbi_decode(const EmissionScores& emissions, const TransitionMatrix& A,
                                       bool constrain_bio) {
  using detail::ix;
  detail::check_emissions(emissions);
  const std::size_t n = static_cast<std::size_t>(emissions.rows());

  auto transition = [&](std::optional<std::size_t> from, std::size_t to) {
    if (constrain_bio) {
      const std::optional<Tag> prev = from ? std::optional<Tag>(tag_at(*from)) : std::nullopt;
      if (!bio_allowed(prev, tag_at(to))) return kNegInf;
    }
    return A(ix(from.value_or(kStart)), ix(to));
  };

  std::vector<std::array<double, kNumTags>> best(n);
  std::vector<std::array<std::uint8_t, kNumTags>> back(n);
  for (std::size_t t = 0; t < kNumTags; ++t)
    best[0][t] = transition(std::nullopt, t) + emissions(0, ix(t));
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t t = 0; t < kNumTags; ++t) {
      double top = kNegInf;
      std::size_t arg = 0;
      for (std::size_t s = 0; s < kNumTags; ++s) {
        const double v = best[i - 1][s] + transition(s, t);
        if (v > top) {
          top = v;
          arg = s;
        }
      }
      best[i][t] = top + emissions(ix(i), ix(t));
      back[i][t] = static_cast<std::uint8_t>(arg);
    }
  }

  double top = kNegInf;
  std::size_t last = 0;
  for (std::size_t t = 0; t < kNumTags; ++t) {
    const double v = best[n - 1][t] + A(ix(t), ix(kEnd));
    if (v > top) {
      top = v;
      last = t;
    }
  }

  std::vector<Tag> path(n);
  path[n - 1] = tag_at(last);
  for (std::size_t i = n - 1; i > 0; --i) path[i - 1] = tag_at(back[i][index_of(path[i])]);
  return path;
}

inline TagSequence viterbi_decode(const EmissionMatrix& emissions, const TransitionMatrix& A,
                                  bool constrain_bio) {
  return TagSequence{emissions.sentence_id, viterbi_decode(emissions.scores, A, constrain_bio)};
}

}  // namespace signex::crf
