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

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "signex/crf.hpp"
#include "signex/encoder.hpp"
#include "signex/tagscheme.hpp"

namespace signex {

inline constexpr std::string_view kModelFormat = "signex-crf/1";

// Linear emission scorer + CRF transitions.
struct CrfModel {
  FeatureVocabulary vocab;
  LinearScorerParams scorer;
  crf::TransitionMatrix transitions = crf::zero_transitions();

  static CrfModel zeros(FeatureVocabulary vocab) {
    CrfModel model;
    model.scorer = LinearScorerParams::zeros(vocab.size());
    model.vocab = std::move(vocab);
    return model;
  }

  EmissionMatrix emissions(const Sentence& sentence) const {
    return score_sentence(sentence, scorer, vocab);
  }

  TagSequence decode(const Sentence& sentence, bool constrain_bio = true) const {
    return crf::viterbi_decode(emissions(sentence), transitions, constrain_bio);
  }

  TagSequence decode(const EmissionMatrix& external, bool constrain_bio = true) const {
    return crf::viterbi_decode(external, transitions, constrain_bio);
  }
};

inline nlohmann::json model_to_json(const CrfModel& model) {
  nlohmann::json transitions = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.transitions.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < model.transitions.cols(); ++c) row.push_back(model.transitions(r, c));
    transitions.push_back(std::move(row));
  }
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.scorer.weights.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < model.scorer.weights.cols(); ++c)
      row.push_back(model.scorer.weights(r, c));
    weights.push_back(std::move(row));
  }
  return {{"format", kModelFormat},
          {"tags", kTagLabels},
          {"transitions", std::move(transitions)},
          {"features", model.vocab.names()},
          {"weights", std::move(weights)}};
}

inline CrfModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw InputError("unsupported model format " + j.at("format").dump());
    const auto tags = j.at("tags").get<std::vector<std::string>>();
    if (tags.size() != kNumTags || !std::equal(tags.begin(), tags.end(), kTagLabels.begin()))
      throw InputError("model tag set does not match the built-in tag set");

    CrfModel model;
    const auto& transitions = j.at("transitions");
    if (transitions.size() != crf::kNumStates) throw InputError("transition matrix must be 9x9");
    for (std::size_t r = 0; r < crf::kNumStates; ++r) {
      if (transitions[r].size() != crf::kNumStates) throw InputError("transition matrix must be 9x9");
      for (std::size_t c = 0; c < crf::kNumStates; ++c)
        model.transitions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            transitions[r][c].get<double>();
    }

    const auto names = j.at("features").get<std::vector<std::string>>();
    if (names.empty() || names.front() != kUnknownFeature)
      throw InputError("feature list must start with " + std::string(kUnknownFeature));
    for (std::size_t i = 1; i < names.size(); ++i)
      if (model.vocab.add(names[i]) != i) throw InputError("duplicate feature '" + names[i] + "'");
    model.vocab.freeze();

    const auto& weights = j.at("weights");
    if (weights.size() != names.size()) throw InputError("weights/features size mismatch");
    model.scorer = LinearScorerParams::zeros(names.size());
    for (std::size_t r = 0; r < names.size(); ++r) {
      if (weights[r].size() != kNumTags) throw InputError("weight rows must have 7 columns");
      for (std::size_t c = 0; c < kNumTags; ++c)
        model.scorer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            weights[r][c].get<double>();
    }
    if (!model.transitions.allFinite() || !model.scorer.weights.allFinite())
      throw InputError("model contains non-finite parameters");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model: ") + e.what());
  }
}

inline void save_model(const CrfModel& model, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << model_to_json(model).dump() << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

inline CrfModel load_model(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace signex
