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

// Attribute-to-sign matching over tagged entities.
//
// Body parts absent from the secondary-part dictionary are primary parts.
// Each primary part opens a chunk that runs until the next primary part; a
// non-empty prefix before the first primary forms an unheaded chunk. Inside
// a chunk:
//   * the primary part attaches (P2Abn) to every sign in the chunk;
//   * each secondary part and each degree attaches (P2Abn / D2Abn) to the
//     nearest sign, ties going to the later sign;
//   * each secondary part is linked (P2P) to the chunk's primary part.
// A chunk without any sign produces nothing.

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "signex/corpus.hpp"

namespace signex {

struct Chunk {
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<Entity> primary;
  std::vector<Entity> members;  // every entity starting in [start, end), primary included
};

struct MatchResult {
  std::vector<Relation> relations;
  std::vector<Quadruple> quadruples;
};

// Character gap between the closest ends of two spans; 0 if they touch or overlap.
inline std::size_t span_distance(const Entity& a, const Entity& b) {
  if (a.end <= b.start) return b.start - a.end;
  if (b.end <= a.start) return a.start - b.end;
  return 0;
}

inline std::vector<Entity> find_primary_parts(std::span<const Entity> entities,
                                              const SecondaryPartDictionary& dict) {
  std::vector<Entity> primaries;
  for (const auto& e : entities)
    if (e.kind == EntityKind::P && !dict.contains(e.text)) primaries.push_back(e);
  std::sort(primaries.begin(), primaries.end());
  return primaries;
}

// Chunks with empty member lists; see assign_members.
inline std::vector<Chunk> chunk_sentence(const Sentence& sentence, std::span<const Entity> primaries) {
  std::vector<Chunk> chunks;
  const std::size_t n = sentence.size();
  if (primaries.empty() || primaries.front().start > 0)
    chunks.push_back({0, 0, primaries.empty() ? n : primaries.front().start, std::nullopt, {}});
  for (std::size_t i = 0; i < primaries.size(); ++i) {
    const std::size_t end = i + 1 < primaries.size() ? primaries[i + 1].start : n;
    chunks.push_back({chunks.size(), primaries[i].start, end, primaries[i], {}});
  }
  return chunks;
}

inline void assign_members(std::vector<Chunk>& chunks, std::span<const Entity> entities) {
  for (const auto& e : entities) {
    auto it = std::find_if(chunks.begin(), chunks.end(),
                           [&](const Chunk& c) { return c.start <= e.start && e.start < c.end; });
    if (it != chunks.end()) it->members.push_back(e);
  }
  for (auto& c : chunks) std::sort(c.members.begin(), c.members.end());
}

namespace detail {

// Nearest sign to `attribute`; on equal distance the later sign wins.
inline const Entity* nearest_sign(const Entity& attribute, const std::vector<const Entity*>& signs) {
  const Entity* best = nullptr;
  for (const Entity* sign : signs) {
    if (!best || span_distance(attribute, *sign) < span_distance(attribute, *best) ||
        (span_distance(attribute, *sign) == span_distance(attribute, *best) &&
         sign->start > best->start))
      best = sign;
  }
  return best;
}

}  // namespace detail

inline MatchResult match(const Sentence& sentence, std::span<const Entity> entities,
                         const SecondaryPartDictionary& dict) {
  std::vector<Entity> sorted(entities.begin(), entities.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i - 1].overlaps(sorted[i]))
      throw InputError("overlapping entities in sentence '" + sentence.id + "'");

  const auto primaries = find_primary_parts(sorted, dict);
  auto chunks = chunk_sentence(sentence, primaries);
  assign_members(chunks, sorted);

  MatchResult result;
  for (const auto& chunk : chunks) {
    std::vector<const Entity*> signs;
    for (const auto& e : chunk.members)
      if (e.kind == EntityKind::Abn) signs.push_back(&e);
    if (signs.empty()) continue;

    // Attributes attached to each sign, in member order.
    std::vector<std::vector<const Entity*>> secondary_of(signs.size());
    std::vector<std::vector<const Entity*>> degree_of(signs.size());
    auto sign_slot = [&](const Entity* sign) {
      return static_cast<std::size_t>(std::find(signs.begin(), signs.end(), sign) - signs.begin());
    };

    for (const auto& e : chunk.members) {
      if (e.kind == EntityKind::Abn || (chunk.primary && e == *chunk.primary)) continue;
      const Entity* sign = detail::nearest_sign(e, signs);
      if (e.kind == EntityKind::D) {
        result.relations.push_back({RelationKind::D2Abn, e, *sign});
        degree_of[sign_slot(sign)].push_back(&e);
      } else {
        result.relations.push_back({RelationKind::P2Abn, e, *sign});
        secondary_of[sign_slot(sign)].push_back(&e);
        if (chunk.primary) result.relations.push_back({RelationKind::P2P, e, *chunk.primary});
      }
    }
    if (chunk.primary)
      for (const Entity* sign : signs)
        result.relations.push_back({RelationKind::P2Abn, *chunk.primary, *sign});

    for (std::size_t s = 0; s < signs.size(); ++s) {
      std::vector<std::optional<Entity>> sps;
      std::vector<std::optional<Entity>> ds;
      for (const Entity* e : secondary_of[s]) sps.emplace_back(*e);
      for (const Entity* e : degree_of[s]) ds.emplace_back(*e);
      if (sps.empty()) sps.emplace_back(std::nullopt);
      if (ds.empty()) ds.emplace_back(std::nullopt);
      for (const auto& sp : sps)
        for (const auto& d : ds) result.quadruples.push_back({chunk.primary, sp, d, *signs[s]});
    }
  }
  std::sort(result.relations.begin(), result.relations.end());
  return result;
}

}  // namespace signex
