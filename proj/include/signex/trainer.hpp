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

// Joint training of the linear emission scorer and CRF transitions by
// mini-batch gradient descent on the summed sentence NLL, with dev-set model
// selection.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "signex/crf.hpp"
#include "signex/encoder.hpp"
#include "signex/eval.hpp"
#include "signex/model.hpp"
#include "signex/tagscheme.hpp"

namespace signex {

struct TrainConfig {
  int epochs = 200;
  double initial_rate = 0.5;
  double decayed_rate = 0.1;
  int decay_epoch = 2;  // 1-based epoch from which decayed_rate applies
  int batch_size = 16;
  std::uint64_t seed = 1;
  double l2 = 0.0;

  void validate() const {
    if (epochs < 1) throw InputError("epochs must be >= 1");
    if (!(initial_rate > 0.0) || !(decayed_rate > 0.0))
      throw InputError("learning rates must be > 0");
    if (decay_epoch < 1) throw InputError("decay epoch must be >= 1");
    if (batch_size < 1) throw InputError("batch size must be >= 1");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw InputError("l2 must be a finite value >= 0");
  }

  double rate_for_epoch(int epoch) const { return epoch >= decay_epoch ? decayed_rate : initial_rate; }
};

struct TrainReport {
  std::vector<double> train_nll;  // summed over the epoch, before each update
  std::vector<double> dev_f1;     // strict entity F1 after each epoch
  std::size_t selected_epoch = 0; // 0-based index into the vectors above
  std::size_t updates = 0;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

inline nlohmann::json to_json(const TrainReport& report) {
  return {{"train_nll", report.train_nll},
          {"dev_f1", report.dev_f1},
          {"selected_epoch", report.selected_epoch},
          {"updates", report.updates}};
}

inline eval::EntityCorpus entity_corpus(std::span<const TaggedSentence> corpus) {
  eval::EntityCorpus out;
  for (const auto& item : corpus) out[item.sentence.id] = tags_to_entities(item.sentence, item.tags);
  return out;
}

// Strict entity F1 of constrained Viterbi output against dev gold.
inline double evaluate_dev(const CrfModel& model, std::span<const TaggedSentence> dev) {
  eval::EntityCorpus pred;
  for (const auto& item : dev)
    pred[item.sentence.id] = tags_to_entities(item.sentence, model.decode(item.sentence, true));
  return eval::entity_prf(pred, entity_corpus(dev)).overall.f1();
}

struct TrainResult {
  CrfModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_nll, double dev_f1)>;

namespace detail {

// Fisher-Yates over the raw engine output so the order depends only on the seed.
inline void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace detail

inline TrainResult train(std::span<const TaggedSentence> corpus, std::span<const TaggedSentence> dev,
                         const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (corpus.empty()) throw InputError("training corpus is empty");
  if (dev.empty()) throw InputError("dev corpus is empty");
  for (const auto& item : corpus)
    if (item.sentence.size() != item.tags.size() || item.sentence.size() == 0)
      throw InputError("sentence '" + item.sentence.id + "' is empty or misaligned with its tags");

  CrfModel model = CrfModel::zeros(build_vocabulary(corpus));
  std::vector<FeatureIndices> features;
  features.reserve(corpus.size());
  for (const auto& item : corpus) features.push_back(featurize(item.sentence, model.vocab));

  WeightMatrix weight_grad = WeightMatrix::Zero(model.scorer.weights.rows(), kNumTags);
  std::vector<bool> touched(static_cast<std::size_t>(weight_grad.rows()), false);
  std::vector<std::size_t> touched_rows;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult best{model, {}};
  TrainReport report;
  double best_f1 = -1.0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    detail::shuffle(order, rng);
    const double rate = config.rate_for_epoch(epoch);
    double epoch_nll = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      crf::TransitionMatrix transition_grad = crf::TransitionMatrix::Zero();
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t s = order[b];
        const auto emissions = score_features(features[s], model.scorer);
        const auto grad = crf::nll_gradient(emissions, model.transitions, corpus[s].tags.tags);
        if (!std::isfinite(grad.nll) || !grad.emissions.allFinite())
          throw NumericalError("non-finite loss on sentence '" + corpus[s].sentence.id + "'");
        epoch_nll += grad.nll;
        transition_grad += grad.transitions;
        for (std::size_t i = 0; i < features[s].size(); ++i) {
          for (std::size_t f : features[s][i]) {
            if (!touched[f]) {
              touched[f] = true;
              touched_rows.push_back(f);
            }
            weight_grad.row(static_cast<Eigen::Index>(f)) += grad.emissions.row(static_cast<Eigen::Index>(i));
          }
        }
      }

      const double step = rate / static_cast<double>(end - begin);
      if (config.l2 > 0.0) {
        model.scorer.weights *= 1.0 - rate * config.l2;
        model.transitions *= 1.0 - rate * config.l2;
      }
      model.transitions -= step * transition_grad;
      for (std::size_t f : touched_rows) {
        const auto row = static_cast<Eigen::Index>(f);
        model.scorer.weights.row(row) -= step * weight_grad.row(row);
        weight_grad.row(row).setZero();
        touched[f] = false;
      }
      touched_rows.clear();
      ++report.updates;
    }

    if (!std::isfinite(epoch_nll) || !model.transitions.allFinite())
      throw NumericalError("non-finite parameters after epoch " + std::to_string(epoch));

    const double f1 = evaluate_dev(model, dev);
    report.train_nll.push_back(epoch_nll);
    report.dev_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best.model = model;
      report.selected_epoch = report.dev_f1.size() - 1;
    }
    if (on_epoch) on_epoch(report.dev_f1.size() - 1, epoch_nll, f1);
  }
  best.report = std::move(report);
  return best;
}

}  // namespace signex
