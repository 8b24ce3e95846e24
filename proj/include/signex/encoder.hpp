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

// Emission scores for the CRF. Either a sparse linear scorer over
// character-window features, or a matrix computed offline and read from an
// emission file.

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "signex/corpus.hpp"
#include "signex/unicode.hpp"

namespace signex {

inline constexpr std::string_view kBosSentinel = "<s>";
inline constexpr std::string_view kEosSentinel = "</s>";
inline constexpr std::string_view kUnknownFeature = "<UNK>";
inline constexpr std::string_view kBiasFeature = "bias";

// Feature templates at position i: the character window c-2..c+2, the two
// bigrams touching i, the character class of c0, and a bias feature.
inline std::vector<std::string> extract_features(const Sentence& sentence, std::size_t i) {
  const auto n = static_cast<std::ptrdiff_t>(sentence.size());
  const auto at = [&](std::ptrdiff_t j) -> std::string {
    if (j < 0) return std::string(kBosSentinel);
    if (j >= n) return std::string(kEosSentinel);
    return unicode::encode(sentence.chars[static_cast<std::size_t>(j)]);
  };
  const auto pos = static_cast<std::ptrdiff_t>(i);
  const std::string c0 = at(pos);
  const std::string prev = at(pos - 1);
  const std::string next = at(pos + 1);

  std::vector<std::string> features;
  features.reserve(9);
  features.push_back("c0=" + c0);
  features.push_back("c-1=" + prev);
  features.push_back("c+1=" + next);
  features.push_back("c-2=" + at(pos - 2));
  features.push_back("c+2=" + at(pos + 2));
  features.push_back("bi-1=" + prev + c0);
  features.push_back("bi0=" + c0 + next);
  const auto cls = i < sentence.size() ? unicode::classify(sentence.chars[i])
                                       : unicode::CharClass::Other;
  features.push_back("cls=" + std::string(unicode::class_name(cls)));
  features.push_back(std::string(kBiasFeature));
  return features;
}

// Feature string -> weight row. Row 0 is reserved for unknown features.
class FeatureVocabulary {
 public:
  FeatureVocabulary() { names_.emplace_back(kUnknownFeature); index_.emplace(kUnknownFeature, 0); }

  static constexpr std::size_t kUnknown = 0;

  std::size_t add(std::string_view feature) {
    if (auto it = index_.find(std::string(feature)); it != index_.end()) return it->second;
    if (frozen_) return kUnknown;
    const std::size_t id = names_.size();
    names_.emplace_back(feature);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::size_t lookup(std::string_view feature) const {
    auto it = index_.find(std::string(feature));
    return it == index_.end() ? kUnknown : it->second;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  bool frozen_ = false;
};

inline FeatureVocabulary build_vocabulary(std::span<const TaggedSentence> corpus) {
  FeatureVocabulary vocab;
  for (const auto& item : corpus)
    for (std::size_t i = 0; i < item.sentence.size(); ++i)
      for (const auto& f : extract_features(item.sentence, i)) vocab.add(f);
  vocab.freeze();
  return vocab;
}

using WeightMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumTags), Eigen::RowMajor>;

// One row of tag weights per vocabulary entry; bias lives in the bias feature.
struct LinearScorerParams {
  WeightMatrix weights;

  static LinearScorerParams zeros(std::size_t features) {
    return {WeightMatrix::Zero(static_cast<Eigen::Index>(features), kNumTags)};
  }
};

// Active feature rows per position.
using FeatureIndices = std::vector<std::vector<std::size_t>>;

inline FeatureIndices featurize(const Sentence& sentence, const FeatureVocabulary& vocab) {
  FeatureIndices rows(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i)
    for (const auto& f : extract_features(sentence, i)) rows[i].push_back(vocab.lookup(f));
  return rows;
}

inline EmissionScores score_features(const FeatureIndices& features,
                                     const LinearScorerParams& params) {
  EmissionScores scores = EmissionScores::Zero(static_cast<Eigen::Index>(features.size()), kNumTags);
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t f : features[i])
      scores.row(static_cast<Eigen::Index>(i)) += params.weights.row(static_cast<Eigen::Index>(f));
  return scores;
}

inline EmissionMatrix score_sentence(const Sentence& sentence, const LinearScorerParams& params,
                                     const FeatureVocabulary& vocab) {
  if (static_cast<std::size_t>(params.weights.rows()) != vocab.size())
    throw InputError("scorer has " + std::to_string(params.weights.rows()) +
                     " weight rows for a vocabulary of " + std::to_string(vocab.size()));
  return {sentence.id, score_features(featurize(sentence, vocab), params)};
}

// Validates an externally computed matrix against its sentence.
inline EmissionMatrix external_emissions(const Sentence& sentence, const EmissionMatrix& matrix) {
  if (matrix.sentence_id != sentence.id)
    throw InputError("emission matrix id '" + matrix.sentence_id + "' does not match sentence '" +
                     sentence.id + "'");
  if (matrix.rows() != sentence.size())
    throw InputError("dimension mismatch: emission matrix for '" + sentence.id + "' has " +
                     std::to_string(matrix.rows()) + " rows, sentence has " +
                     std::to_string(sentence.size()) + " characters");
  if (!matrix.scores.allFinite())
    throw InputError("non-finite emission value for '" + sentence.id + "'");
  return matrix;
}

}  // namespace signex
