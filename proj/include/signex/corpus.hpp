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

// Data model and file formats: sentences, tag annotations, entities,
// relations, quadruples, secondary-part dictionaries and emission matrices.
//
// Tagged corpus     one "<char>\t<tag>" per line, blank line between
//                   sentences. Optional "# id = X" / "# report = Y" lines
//                   before a sentence's first character set its identity;
//                   otherwise sentences are named s1, s2, ... by position.
// Plain sentences   one sentence per line, optionally "<id>\t<text>".
// Dictionary        one term per line, '#' comments, blank lines ignored.
// Emissions         header "<id> <n> <k>" then n rows of k numbers.
// Relations/quads   JSON Lines.

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "signex/error.hpp"
#include "signex/tags.hpp"
#include "signex/unicode.hpp"

namespace signex {

struct Sentence {
  std::string id;
  std::u32string chars;  // Unicode scalar values; offsets index this.
  std::optional<std::string> source_report_id;

  static Sentence from_utf8(std::string id, std::string_view text) {
    return Sentence{std::move(id), unicode::decode(text), std::nullopt};
  }

  std::size_t size() const { return chars.size(); }
  std::string text() const { return unicode::encode(chars); }
  std::string text(std::size_t start, std::size_t end) const {
    return unicode::encode(std::u32string_view(chars).substr(start, end - start));
  }
};

struct TagSequence {
  std::string sentence_id;
  std::vector<Tag> tags;

  std::size_t size() const { return tags.size(); }
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

struct TaggedSentence {
  Sentence sentence;
  TagSequence tags;
};

// Typed character span [start, end).
struct Entity {
  EntityKind kind{};
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  std::size_t size() const { return end - start; }
  bool same_span(const Entity& other) const {
    return start == other.start && end == other.end;
  }
  bool overlaps(const Entity& other) const {
    return start < other.end && other.start < end;
  }
  bool contains(const Entity& other) const {
    return start <= other.start && other.end <= end;
  }

  friend bool operator==(const Entity&, const Entity&) = default;
  friend auto operator<=>(const Entity& a, const Entity& b) {
    return std::tie(a.start, a.end, a.kind, a.text) <=>
           std::tie(b.start, b.end, b.kind, b.text);
  }
};

inline Entity make_entity(const Sentence& sentence, EntityKind kind,
                          std::size_t start, std::size_t end) {
  if (start >= end || end > sentence.size())
    throw InputError("entity span [" + std::to_string(start) + ", " +
                     std::to_string(end) + ") out of bounds in sentence '" +
                     sentence.id + "'");
  return Entity{kind, start, end, sentence.text(start, end)};
}

enum class RelationKind : std::uint8_t { P2Abn = 0, D2Abn = 1, P2P = 2 };

inline constexpr std::array<std::string_view, 3> kRelationNames{"P2Abn", "D2Abn",
                                                                "P2P"};

constexpr std::string_view name(RelationKind kind) {
  return kRelationNames[static_cast<std::size_t>(kind)];
}

inline std::optional<RelationKind> parse_relation_kind(std::string_view text) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i)
    if (kRelationNames[i] == text) return static_cast<RelationKind>(i);
  return std::nullopt;
}

struct Relation {
  RelationKind kind{};
  Entity head;
  Entity tail;

  // Kind/endpoint consistency: P2Abn is P->Abn, D2Abn is D->Abn, P2P is a
  // secondary P -> its primary P.
  bool well_typed() const {
    switch (kind) {
      case RelationKind::P2Abn:
        return head.kind == EntityKind::P && tail.kind == EntityKind::Abn;
      case RelationKind::D2Abn:
        return head.kind == EntityKind::D && tail.kind == EntityKind::Abn;
      case RelationKind::P2P:
        return head.kind == EntityKind::P && tail.kind == EntityKind::P &&
               head != tail;
    }
    return false;
  }

  friend bool operator==(const Relation&, const Relation&) = default;
  friend auto operator<=>(const Relation& a, const Relation& b) {
    return std::tie(a.tail, a.head, a.kind) <=> std::tie(b.tail, b.head, b.kind);
  }
};

struct Quadruple {
  std::optional<Entity> pp;
  std::optional<Entity> sp;
  std::optional<Entity> d;
  Entity abn;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
};

// Secondary body-part lexicon. Terms are stored and queried in NFC.
class SecondaryPartDictionary {
 public:
  SecondaryPartDictionary() = default;
  SecondaryPartDictionary(std::initializer_list<std::string_view> terms) {
    for (auto term : terms) insert(term);
  }

  void insert(std::string_view term) {
    if (term.empty()) throw InputError("dictionary term must not be empty");
    terms_.insert(unicode::nfc(term));
  }

  bool contains(std::string_view term) const {
    return terms_.contains(unicode::nfc(term));
  }

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::set<std::string>& terms() const { return terms_; }

 private:
  std::set<std::string> terms_;
};

using EmissionScores =
    Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumTags), Eigen::RowMajor>;

// n x k per-character tag scores for one sentence.
struct EmissionMatrix {
  std::string sentence_id;
  EmissionScores scores;

  std::size_t rows() const { return static_cast<std::size_t>(scores.rows()); }
};

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

inline std::string default_id(std::size_t ordinal) {
  return "s" + std::to_string(ordinal);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t begin = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > begin) fields.push_back(line.substr(begin, i - begin));
  }
  return fields;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tagged corpus.

inline std::vector<TaggedSentence> parse_tagged_corpus(std::istream& in,
                                                       std::string_view source = "<input>") {
  std::vector<TaggedSentence> corpus;
  TaggedSentence current;
  std::optional<std::string> pending_id;
  std::optional<std::string> pending_report;
  std::string raw;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (current.sentence.chars.empty()) return;
    const std::size_t ordinal = corpus.size() + 1;
    current.sentence.id = pending_id.value_or(detail::default_id(ordinal));
    current.sentence.source_report_id = pending_report;
    current.tags.sentence_id = current.sentence.id;
    corpus.push_back(std::move(current));
    current = TaggedSentence{};
    pending_id.reset();
    pending_report.reset();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_cr(std::move(raw));
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      if (line.front() == '#' && current.sentence.chars.empty()) {
        constexpr std::string_view kId = "# id = ";
        constexpr std::string_view kReport = "# report = ";
        std::string_view body(line);
        if (body.starts_with(kId)) pending_id = std::string(body.substr(kId.size()));
        if (body.starts_with(kReport))
          pending_report = std::string(body.substr(kReport.size()));
        continue;
      }
      throw InputError(detail::location(source, line_no) +
                       "malformed line (expected <char>\\t<tag>)");
    }
    if (line.find('\t', tab + 1) != std::string::npos)
      throw InputError(detail::location(source, line_no) +
                       "malformed line (more than 2 fields)");
    const std::u32string ch = unicode::decode(std::string_view(line).substr(0, tab));
    if (ch.size() != 1)
      throw InputError(detail::location(source, line_no) +
                       "malformed line (first field must be one character)");
    const auto tag = parse_tag(std::string_view(line).substr(tab + 1));
    if (!tag)
      throw InputError(detail::location(source, line_no) + "unknown tag '" +
                       line.substr(tab + 1) + "'");
    current.sentence.chars.push_back(ch.front());
    current.tags.tags.push_back(*tag);
  }
  flush();
  if (corpus.empty()) throw InputError(std::string(source) + ": empty corpus");
  return corpus;
}

inline std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_tagged_corpus(in, path.string());
}

inline void write_tagged_corpus(std::ostream& out, std::span<const TaggedSentence> corpus) {
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& [sentence, tags] = corpus[s];
    if (sentence.size() != tags.size())
      throw InputError("sentence '" + sentence.id + "' has " +
                       std::to_string(sentence.size()) + " chars but " +
                       std::to_string(tags.size()) + " tags");
    if (s > 0) out << '\n';
    out << "# id = " << sentence.id << '\n';
    if (sentence.source_report_id) out << "# report = " << *sentence.source_report_id << '\n';
    for (std::size_t i = 0; i < sentence.size(); ++i)
      out << unicode::encode(sentence.chars[i]) << '\t' << label(tags.tags[i]) << '\n';
  }
}

inline void write_tagged_corpus(const std::filesystem::path& path,
                                std::span<const TaggedSentence> corpus) {
  auto out = detail::open_output(path);
  write_tagged_corpus(out, corpus);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

// Plain sentences, one per line. Blank lines are skipped.
inline std::vector<Sentence> parse_sentences(std::istream& in,
                                             std::string_view source = "<input>") {
  std::vector<Sentence> sentences;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_cr(std::move(raw));
    if (line.empty()) continue;
    std::string id = detail::default_id(sentences.size() + 1);
    std::string_view text(line);
    if (const auto tab = line.find('\t'); tab != std::string::npos) {
      id = line.substr(0, tab);
      text = text.substr(tab + 1);
    }
    if (text.empty())
      throw InputError(detail::location(source, line_no) + "empty sentence text");
    try {
      sentences.push_back(Sentence::from_utf8(std::move(id), text));
    } catch (const InputError& e) {
      throw InputError(detail::location(source, line_no) + e.what());
    }
  }
  return sentences;
}

inline std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_sentences(in, path.string());
}

// ---------------------------------------------------------------------------
// Dictionary.

inline SecondaryPartDictionary parse_dictionary(std::istream& in,
                                                std::string_view source = "<input>") {
  SecondaryPartDictionary dict;
  std::string raw;
  while (std::getline(in, raw)) {
    std::string line = detail::strip_cr(std::move(raw));
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    dict.insert(std::string_view(line).substr(first, last - first + 1));
  }
  if (dict.empty()) throw InputError(std::string(source) + ": empty dictionary");
  return dict;
}

inline SecondaryPartDictionary read_dictionary(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_dictionary(in, path.string());
}

// ---------------------------------------------------------------------------
// Emission matrices.

namespace detail {

// Reads one block. Returns nullopt at clean end of input.
inline std::optional<EmissionMatrix> parse_emission_block(std::istream& in,
                                                          std::string_view source,
                                                          std::size_t& line_no) {
  std::string raw;
  std::string header;
  while (std::getline(in, raw)) {
    ++line_no;
    header = strip_cr(std::move(raw));
    if (header.find_first_not_of(" \t") != std::string::npos) break;
    header.clear();
  }
  if (header.empty()) return std::nullopt;

  const auto fields = split_ws(header);
  if (fields.size() != 3)
    throw InputError(location(source, line_no) + "emission header must be '<id> <n> <k>'");
  std::size_t n = 0;
  std::size_t k = 0;
  auto parse_size = [&](std::string_view text, std::size_t& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw InputError(location(source, line_no) + "bad dimension '" +
                       std::string(text) + "'");
  };
  parse_size(fields[1], n);
  parse_size(fields[2], k);
  if (k != kNumTags)
    throw InputError(location(source, line_no) + "emission column count " +
                     std::to_string(k) + " != " + std::to_string(kNumTags));
  if (n == 0) throw InputError(location(source, line_no) + "emission row count is 0");

  EmissionMatrix matrix{std::string(fields[0]), EmissionScores(static_cast<Eigen::Index>(n), kNumTags)};
  for (std::size_t row = 0; row < n; ++row) {
    if (!std::getline(in, raw))
      throw InputError(location(source, line_no) + "dimension mismatch: expected " +
                       std::to_string(n) + " rows, got " + std::to_string(row));
    ++line_no;
    const std::string line = strip_cr(std::move(raw));
    const auto values = split_ws(line);
    if (values.size() != k)
      throw InputError(location(source, line_no) + "dimension mismatch: expected " +
                       std::to_string(k) + " values, got " + std::to_string(values.size()));
    for (std::size_t col = 0; col < k; ++col) {
      double value = 0.0;
      const auto text = values[col];
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError(location(source, line_no) + "bad number '" + std::string(text) + "'");
      if (!std::isfinite(value))
        throw InputError(location(source, line_no) + "non-finite emission value '" +
                         std::string(text) + "'");
      matrix.scores(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = value;
    }
  }
  return matrix;
}

}  // namespace detail

// Exactly one matrix.
inline EmissionMatrix parse_emissions(std::istream& in, std::string_view source = "<input>") {
  std::size_t line_no = 0;
  auto matrix = detail::parse_emission_block(in, source, line_no);
  if (!matrix) throw InputError(std::string(source) + ": no emission matrix");
  std::string rest;
  while (std::getline(in, rest)) {
    ++line_no;
    if (detail::strip_cr(rest).find_first_not_of(" \t") != std::string::npos)
      throw InputError(detail::location(source, line_no) +
                       "dimension mismatch: trailing rows after matrix");
  }
  return *matrix;
}

inline EmissionMatrix read_emissions(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_emissions(in, path.string());
}

// Zero or more concatenated matrices, keyed by sentence id.
inline std::map<std::string, EmissionMatrix> parse_emission_set(std::istream& in,
                                                                std::string_view source = "<input>") {
  std::map<std::string, EmissionMatrix> set;
  std::size_t line_no = 0;
  while (auto matrix = detail::parse_emission_block(in, source, line_no)) {
    const std::string id = matrix->sentence_id;
    if (!set.emplace(id, std::move(*matrix)).second)
      throw InputError(std::string(source) + ": duplicate emission matrix for '" + id + "'");
  }
  return set;
}

inline std::map<std::string, EmissionMatrix> read_emission_set(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_emission_set(in, path.string());
}

inline void write_emissions(std::ostream& out, const EmissionMatrix& matrix) {
  out << matrix.sentence_id << ' ' << matrix.rows() << ' ' << kNumTags << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index i = 0; i < matrix.scores.rows(); ++i) {
    for (Eigen::Index t = 0; t < matrix.scores.cols(); ++t)
      out << (t ? " " : "") << matrix.scores(i, t);
    out << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// JSON.

inline void to_json(nlohmann::json& j, const Entity& e) {
  j = nlohmann::json{{"kind", name(e.kind)}, {"start", e.start}, {"end", e.end}, {"text", e.text}};
}

inline void from_json(const nlohmann::json& j, Entity& e) {
  const auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) throw InputError("unknown entity kind " + j.at("kind").dump());
  e.kind = *kind;
  e.start = j.at("start").get<std::size_t>();
  e.end = j.at("end").get<std::size_t>();
  e.text = j.at("text").get<std::string>();
  if (e.start >= e.end) throw InputError("empty entity span in " + j.dump());
}

inline void to_json(nlohmann::json& j, const Relation& r) {
  j = nlohmann::json{{"kind", name(r.kind)}, {"head", r.head}, {"tail", r.tail}};
}

inline void from_json(const nlohmann::json& j, Relation& r) {
  const auto kind = parse_relation_kind(j.at("kind").get<std::string>());
  if (!kind) throw InputError("unknown relation kind " + j.at("kind").dump());
  r.kind = *kind;
  r.head = j.at("head").get<Entity>();
  r.tail = j.at("tail").get<Entity>();
  if (!r.well_typed()) throw InputError("ill-typed relation " + j.dump());
}

inline void to_json(nlohmann::json& j, const Quadruple& q) {
  auto optional_entity = [](const std::optional<Entity>& e) {
    return e ? nlohmann::json(*e) : nlohmann::json(nullptr);
  };
  j = nlohmann::json{{"pp", optional_entity(q.pp)},
                     {"sp", optional_entity(q.sp)},
                     {"d", optional_entity(q.d)},
                     {"abn", q.abn}};
}

inline void write_quadruples(std::span<const Quadruple> quads, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& q : quads) out << nlohmann::json(q).dump() << '\n';
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

// Relations keyed by sentence id, from JSON Lines carrying a "sentence_id".
using RelationCorpus = std::map<std::string, std::vector<Relation>>;

inline RelationCorpus parse_relations(std::istream& in, std::string_view source = "<input>") {
  RelationCorpus corpus;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::strip_cr(std::move(raw));
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      corpus[j.at("sentence_id").get<std::string>()].push_back(j.get<Relation>());
    } catch (const nlohmann::json::exception& e) {
      throw InputError(detail::location(source, line_no) + e.what());
    } catch (const InputError& e) {
      throw InputError(detail::location(source, line_no) + e.what());
    }
  }
  return corpus;
}

inline RelationCorpus read_relations(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_relations(in, path.string());
}

}  // namespace signex
