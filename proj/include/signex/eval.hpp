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

// Strict-match scoring, annotator agreement and entity error analysis.

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "signex/corpus.hpp"

namespace signex::eval {

using EntityCorpus = std::map<std::string, std::vector<Entity>>;
using signex::RelationCorpus;

// Precision/recall/F1 in percent, derived from raw counts.
struct PrfScores {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  double precision() const { return predicted ? 100.0 * correct / predicted : 0.0; }
  double recall() const { return gold ? 100.0 * correct / gold : 0.0; }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  PrfScores& operator+=(const PrfScores& other) {
    correct += other.correct;
    predicted += other.predicted;
    gold += other.gold;
    return *this;
  }
  friend bool operator==(const PrfScores&, const PrfScores&) = default;
};

// Two decimals.
inline std::string fixed2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

struct EntityScores {
  PrfScores overall;
  std::array<PrfScores, kNumKinds> per_kind{};
};

struct RelationScores {
  PrfScores overall;
  std::array<PrfScores, 3> per_kind{};
};

namespace detail {

using EntityKey = std::tuple<EntityKind, std::size_t, std::size_t>;
using RelationKey = std::tuple<RelationKind, EntityKey, EntityKey>;

inline EntityKey key(const Entity& e) { return {e.kind, e.start, e.end}; }
inline RelationKey key(const Relation& r) { return {r.kind, key(r.head), key(r.tail)}; }

inline std::size_t kind_index(const Entity& e) { return index_of(e.kind); }
inline std::size_t kind_index(const Relation& r) { return static_cast<std::size_t>(r.kind); }

// Multiset intersection size of items by strict key, bucketed by kind.
template <typename Item, std::size_t Kinds>
void count_sentence(const std::vector<Item>& pred, const std::vector<Item>& gold,
                    PrfScores& overall, std::array<PrfScores, Kinds>& per_kind) {
  std::map<decltype(key(std::declval<Item>())), std::size_t> remaining;
  for (const auto& g : gold) {
    ++remaining[key(g)];
    ++overall.gold;
    ++per_kind[kind_index(g)].gold;
  }
  for (const auto& p : pred) {
    ++overall.predicted;
    ++per_kind[kind_index(p)].predicted;
    if (auto it = remaining.find(key(p)); it != remaining.end() && it->second > 0) {
      --it->second;
      ++overall.correct;
      ++per_kind[kind_index(p)].correct;
    }
  }
}

template <typename Item, std::size_t Kinds>
void count_corpus(const std::map<std::string, std::vector<Item>>& pred,
                  const std::map<std::string, std::vector<Item>>& gold, PrfScores& overall,
                  std::array<PrfScores, Kinds>& per_kind) {
  static const std::vector<Item> kEmpty;
  auto find = [](const auto& corpus, const std::string& id) -> const std::vector<Item>& {
    auto it = corpus.find(id);
    return it == corpus.end() ? kEmpty : it->second;
  };
  std::set<std::string> ids;
  for (const auto& [id, _] : pred) ids.insert(id);
  for (const auto& [id, _] : gold) ids.insert(id);
  for (const auto& id : ids) count_sentence(find(pred, id), find(gold, id), overall, per_kind);
}

}  // namespace detail

// Throws InputError unless both corpora cover exactly the same sentence ids.
template <typename A, typename B>
void check_aligned(const std::map<std::string, A>& pred, const std::map<std::string, B>& gold) {
  auto p = pred.begin();
  auto g = gold.begin();
  for (; p != pred.end() && g != gold.end(); ++p, ++g)
    if (p->first != g->first) break;
  if (p == pred.end() && g == gold.end()) return;
  const std::string id = p == pred.end() ? g->first
                         : g == gold.end() ? p->first
                                           : std::min(p->first, g->first);
  throw InputError("sentence id mismatch between corpora at '" + id + "'");
}

// An entity is correct iff (sentence, kind, start, end) match a gold entity.
// Sentences absent from one side count as empty. Micro-averaged.
inline EntityScores entity_prf(const EntityCorpus& pred, const EntityCorpus& gold) {
  EntityScores scores;
  detail::count_corpus(pred, gold, scores.overall, scores.per_kind);
  return scores;
}

// A relation is correct iff its kind and both endpoints match strictly.
inline RelationScores relation_prf(const RelationCorpus& pred, const RelationCorpus& gold) {
  RelationScores scores;
  detail::count_corpus(pred, gold, scores.overall, scores.per_kind);
  return scores;
}

// Annotator agreement: P = identical / |A|, R = identical / |B|.
inline PrfScores agreement_f1(const EntityCorpus& a, const EntityCorpus& b) {
  return entity_prf(a, b).overall;
}

inline PrfScores agreement_f1(const RelationCorpus& a, const RelationCorpus& b) {
  return relation_prf(a, b).overall;
}

// ---------------------------------------------------------------------------
// Error taxonomy.

enum class ErrorCategory { Type, Extent, Spurious, Missing };
enum class ExtentSubtype { Short, Long, ShortAndLong };

inline constexpr std::array<std::string_view, 4> kCategoryNames{"TYPE", "EXTENT", "SPURIOUS",
                                                                "MISSING"};
inline constexpr std::array<std::string_view, 3> kSubtypeNames{"SHORT", "LONG", "S&L"};

constexpr std::string_view name(ErrorCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
constexpr std::string_view name(ExtentSubtype s) { return kSubtypeNames[static_cast<std::size_t>(s)]; }

struct ErrorRecord {
  std::string sentence_id;
  ErrorCategory category{};
  std::optional<ExtentSubtype> extent_subtype;
  std::optional<Entity> predicted;
  std::optional<Entity> gold;

  friend bool operator==(const ErrorRecord&, const ErrorRecord&) = default;
};

// Rows: gold kind (P, D, Abn) then "spurious". Columns: predicted kind then
// "missing". Index 3 on either axis is the O / no-entity side.
struct ConfusionMatrix {
  static constexpr std::size_t kNone = kNumKinds;
  std::array<std::array<std::size_t, kNumKinds + 1>, kNumKinds + 1> counts{};

  std::size_t& at(std::size_t gold, std::size_t pred) { return counts[gold][pred]; }
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold][pred]; }

  std::size_t row_total(std::size_t gold) const {
    std::size_t sum = 0;
    for (auto c : counts[gold]) sum += c;
    return sum;
  }
  std::size_t column_total(std::size_t pred) const {
    std::size_t sum = 0;
    for (const auto& row : counts) sum += row[pred];
    return sum;
  }
  bool diagonal() const {
    for (std::size_t r = 0; r < counts.size(); ++r)
      for (std::size_t c = 0; c < counts.size(); ++c)
        if (r != c && counts[r][c]) return false;
    return true;
  }
};

struct ErrorSummary {
  std::size_t exact = 0;
  std::array<std::size_t, 4> by_category{};
  // extent[subtype][kind]
  std::array<std::array<std::size_t, kNumKinds>, 3> extent{};
  std::array<std::size_t, kNumKinds> gold_per_kind{};
  std::array<std::size_t, kNumKinds> predicted_per_kind{};

  std::size_t total_errors() const {
    std::size_t sum = 0;
    for (auto c : by_category) sum += c;
    return sum;
  }
};

struct ErrorAnalysis {
  std::vector<ErrorRecord> records;
  ConfusionMatrix confusion;
  ErrorSummary summary;
};

namespace detail {

inline std::size_t overlap(const Entity& a, const Entity& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

inline ExtentSubtype extent_subtype(const Entity& pred, const Entity& gold) {
  if (gold.contains(pred)) return ExtentSubtype::Short;
  if (pred.contains(gold)) return ExtentSubtype::Long;
  return ExtentSubtype::ShortAndLong;
}

enum class GoldState { Unused, Exact, Type, Extent };

inline void classify_sentence(const std::string& id, std::vector<Entity> pred,
                              std::vector<Entity> gold, ErrorAnalysis& out) {
  std::sort(pred.begin(), pred.end());
  std::sort(gold.begin(), gold.end());
  std::vector<GoldState> state(gold.size(), GoldState::Unused);
  std::vector<bool> done(pred.size(), false);
  auto& cm = out.confusion;
  auto& summary = out.summary;

  for (const auto& g : gold) ++summary.gold_per_kind[index_of(g.kind)];
  for (const auto& p : pred) ++summary.predicted_per_kind[index_of(p.kind)];

  auto record = [&](ErrorCategory category, std::optional<Entity> p, std::optional<Entity> g,
                    std::optional<ExtentSubtype> subtype = std::nullopt) {
    ++summary.by_category[static_cast<std::size_t>(category)];
    out.records.push_back({id, category, subtype, std::move(p), std::move(g)});
  };

  // Exact matches.
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (state[j] == GoldState::Unused && key(pred[i]) == key(gold[j])) {
        state[j] = GoldState::Exact;
        done[i] = true;
        ++summary.exact;
        ++cm.at(index_of(gold[j].kind), index_of(pred[i].kind));
        break;
      }
    }
  }
  // Same span, different kind.
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (done[i]) continue;
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (state[j] == GoldState::Unused && pred[i].same_span(gold[j])) {
        state[j] = GoldState::Type;
        done[i] = true;
        ++cm.at(index_of(gold[j].kind), index_of(pred[i].kind));
        record(ErrorCategory::Type, pred[i], gold[j]);
        break;
      }
    }
  }
  // Overlap with a same-kind gold entity: extent error against the gold
  // entity with the largest overlap, preferring ones not yet claimed.
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (done[i]) continue;
    std::optional<std::size_t> best;
    auto better = [&](std::size_t j) {
      if (!best) return true;
      const bool fresh_j = state[j] == GoldState::Unused;
      const bool fresh_best = state[*best] == GoldState::Unused;
      if (fresh_j != fresh_best) return fresh_j;
      return overlap(pred[i], gold[j]) > overlap(pred[i], gold[*best]);
    };
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (gold[j].kind != pred[i].kind || !pred[i].overlaps(gold[j])) continue;
      if (state[j] != GoldState::Unused && state[j] != GoldState::Extent) continue;
      if (better(j)) best = j;
    }
    if (!best) continue;
    const std::size_t j = *best;
    if (state[j] == GoldState::Unused) ++cm.at(index_of(gold[j].kind), index_of(gold[j].kind));
    state[j] = GoldState::Extent;
    done[i] = true;
    const auto subtype = extent_subtype(pred[i], gold[j]);
    ++summary.extent[static_cast<std::size_t>(subtype)][index_of(gold[j].kind)];
    record(ErrorCategory::Extent, pred[i], gold[j], subtype);
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (done[i]) continue;
    ++cm.at(ConfusionMatrix::kNone, index_of(pred[i].kind));
    record(ErrorCategory::Spurious, pred[i], std::nullopt);
  }
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (state[j] != GoldState::Unused) continue;
    ++cm.at(index_of(gold[j].kind), ConfusionMatrix::kNone);
    record(ErrorCategory::Missing, std::nullopt, gold[j]);
  }
}

}  // namespace detail

// Classifies every non-exact prediction and every unmatched gold entity.
// Records are ordered by sentence id, then by category within a sentence.
inline ErrorAnalysis classify_errors(const EntityCorpus& pred, const EntityCorpus& gold) {
  ErrorAnalysis analysis;
  std::set<std::string> ids;
  for (const auto& [id, _] : pred) ids.insert(id);
  for (const auto& [id, _] : gold) ids.insert(id);
  for (const auto& id : ids) {
    auto p = pred.find(id);
    auto g = gold.find(id);
    detail::classify_sentence(id, p == pred.end() ? std::vector<Entity>{} : p->second,
                              g == gold.end() ? std::vector<Entity>{} : g->second, analysis);
  }
  return analysis;
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::json to_json(const PrfScores& s) {
  return {{"precision", s.precision()}, {"recall", s.recall()}, {"f1", s.f1()},
          {"correct", s.correct},       {"predicted", s.predicted}, {"gold", s.gold}};
}

inline nlohmann::json to_json(const EntityScores& s) {
  nlohmann::json per_kind;
  for (auto kind : kAllKinds) per_kind[std::string(name(kind))] = to_json(s.per_kind[index_of(kind)]);
  return {{"overall", to_json(s.overall)}, {"per_kind", per_kind}};
}

inline nlohmann::json to_json(const RelationScores& s) {
  nlohmann::json per_kind;
  for (std::size_t k = 0; k < s.per_kind.size(); ++k)
    per_kind[std::string(kRelationNames[k])] = to_json(s.per_kind[k]);
  return {{"overall", to_json(s.overall)}, {"per_kind", per_kind}};
}

inline std::string axis_name(std::size_t index, bool gold_axis) {
  if (index < kNumKinds) return std::string(kKindNames[index]);
  return gold_axis ? "Spurious" : "Missing";
}

inline nlohmann::json to_json(const ErrorAnalysis& a) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : a.records) {
    nlohmann::json j{{"sentence_id", r.sentence_id}, {"category", name(r.category)}};
    j["extent_subtype"] = r.extent_subtype ? nlohmann::json(name(*r.extent_subtype)) : nlohmann::json(nullptr);
    j["predicted"] = r.predicted ? nlohmann::json(*r.predicted) : nlohmann::json(nullptr);
    j["gold"] = r.gold ? nlohmann::json(*r.gold) : nlohmann::json(nullptr);
    records.push_back(std::move(j));
  }
  const auto total = a.summary.total_errors();
  nlohmann::json categories;
  for (std::size_t c = 0; c < 4; ++c)
    categories[std::string(kCategoryNames[c])] = {
        {"count", a.summary.by_category[c]},
        {"percent_of_errors", total ? 100.0 * a.summary.by_category[c] / total : 0.0}};
  nlohmann::json extent;
  for (std::size_t s = 0; s < 3; ++s)
    for (auto kind : kAllKinds)
      extent[std::string(kSubtypeNames[s])][std::string(name(kind))] =
          a.summary.extent[s][index_of(kind)];
  nlohmann::json confusion = nlohmann::json::object();
  for (std::size_t r = 0; r <= kNumKinds; ++r)
    for (std::size_t c = 0; c <= kNumKinds; ++c)
      confusion[axis_name(r, true)][axis_name(c, false)] = a.confusion.at(r, c);
  return {{"exact", a.summary.exact}, {"total_errors", total},   {"categories", categories},
          {"extent", extent},         {"confusion", confusion}, {"records", records}};
}

inline std::string prf_table(const std::vector<std::pair<std::string, PrfScores>>& rows) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s %8s %8s\n", "", "P", "R", "F1", "correct",
                "pred", "gold");
  out << buf;
  for (const auto& [label, s] : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %8.2f %8.2f %8.2f %8zu %8zu %8zu\n", label.c_str(),
                  s.precision(), s.recall(), s.f1(), s.correct, s.predicted, s.gold);
    out << buf;
  }
  return out.str();
}

inline std::string prf_table(const EntityScores& s) {
  std::vector<std::pair<std::string, PrfScores>> rows;
  for (auto kind : kAllKinds) rows.emplace_back(std::string(name(kind)), s.per_kind[index_of(kind)]);
  rows.emplace_back("overall", s.overall);
  return prf_table(rows);
}

inline std::string prf_table(const RelationScores& s) {
  std::vector<std::pair<std::string, PrfScores>> rows;
  for (std::size_t k = 0; k < s.per_kind.size(); ++k)
    rows.emplace_back(std::string(kRelationNames[k]), s.per_kind[k]);
  rows.emplace_back("overall", s.overall);
  return prf_table(rows);
}

inline std::string percent(std::size_t part, std::size_t whole) {
  return whole ? fixed2(100.0 * part / whole) + "%" : "-";
}

// Category counts, confusion matrix with missing/spurious shares, and the
// extent breakdown.
inline std::string error_report(const ErrorAnalysis& a) {
  std::ostringstream out;
  char buf[160];
  const auto total = a.summary.total_errors();
  std::snprintf(buf, sizeof buf, "%-10s %8s %12s\n", "", "Count", "% of Errors");
  out << buf;
  for (std::size_t c = 0; c < 4; ++c) {
    std::snprintf(buf, sizeof buf, "%-10s %8zu %12s\n", std::string(kCategoryNames[c]).c_str(),
                  a.summary.by_category[c], percent(a.summary.by_category[c], total).c_str());
    out << buf;
  }

  out << "\nGold \\ Output\n";
  std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s %16s %8s\n", "", "P", "D", "Abn", "Missing",
                "Total");
  out << buf;
  for (std::size_t r = 0; r <= kNumKinds; ++r) {
    std::string cells[4];
    for (std::size_t c = 0; c <= kNumKinds; ++c) {
      const auto count = a.confusion.at(r, c);
      std::string cell = std::to_string(count);
      if (r == ConfusionMatrix::kNone && c < kNumKinds && count)
        cell += " (" + percent(count, a.confusion.column_total(c)) + ")";
      if (c == ConfusionMatrix::kNone && r < kNumKinds && count)
        cell += " (" + percent(count, a.confusion.row_total(r)) + ")";
      if (r == ConfusionMatrix::kNone && c == ConfusionMatrix::kNone) cell.clear();
      cells[c] = cell;
    }
    std::snprintf(buf, sizeof buf, "%-10s %16s %16s %16s %16s %8zu\n", axis_name(r, true).c_str(),
                  cells[0].c_str(), cells[1].c_str(), cells[2].c_str(), cells[3].c_str(),
                  a.confusion.row_total(r));
    out << buf;
  }
  std::size_t grand = 0;
  std::snprintf(buf, sizeof buf, "%-10s", "Total");
  out << buf;
  for (std::size_t c = 0; c <= kNumKinds; ++c) {
    grand += a.confusion.column_total(c);
    std::snprintf(buf, sizeof buf, " %16zu", a.confusion.column_total(c));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, " %8zu\n", grand);
  out << buf;

  out << "\nExtent errors\n";
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s\n", "", "P", "D", "Abn", "Total");
  out << buf;
  std::array<std::size_t, kNumKinds> column{};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& row = a.summary.extent[s];
    std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %8zu %8zu\n",
                  std::string(kSubtypeNames[s]).c_str(), row[0], row[1], row[2],
                  row[0] + row[1] + row[2]);
    out << buf;
    for (std::size_t k = 0; k < kNumKinds; ++k) column[k] += row[k];
  }
  std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %8zu %8zu\n", "Total", column[0], column[1],
                column[2], column[0] + column[1] + column[2]);
  out << buf;
  return out.str();
}

inline std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "gold\\predicted";
  for (std::size_t c = 0; c <= kNumKinds; ++c) out << ',' << axis_name(c, false);
  out << '\n';
  for (std::size_t r = 0; r <= kNumKinds; ++r) {
    out << axis_name(r, true);
    for (std::size_t c = 0; c <= kNumKinds; ++c) out << ',' << cm.at(r, c);
    out << '\n';
  }
  return out.str();
}

}  // namespace signex::eval
