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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace signex {

// Semantic role of an entity span.
enum class EntityKind : std::uint8_t { P = 0, D = 1, Abn = 2 };

inline constexpr std::size_t kNumKinds = 3;
inline constexpr std::array<EntityKind, kNumKinds> kAllKinds{
    EntityKind::P, EntityKind::D, EntityKind::Abn};

// The 7-tag BIO label set. The numeric value is the column index used by
// emission matrices and the CRF; O is always 0.
enum class Tag : std::uint8_t {
  O = 0,
  BeginP = 1,
  InsideP = 2,
  BeginD = 3,
  InsideD = 4,
  BeginAbn = 5,
  InsideAbn = 6,
};

inline constexpr std::size_t kNumTags = 7;

inline constexpr std::array<std::string_view, kNumTags> kTagLabels{
    "O", "B-P", "I-P", "B-D", "I-D", "B-Abn", "I-Abn"};

inline constexpr std::array<std::string_view, kNumKinds> kKindNames{"P", "D",
                                                                    "Abn"};

constexpr std::size_t index_of(Tag tag) { return static_cast<std::size_t>(tag); }
constexpr std::size_t index_of(EntityKind kind) {
  return static_cast<std::size_t>(kind);
}

constexpr Tag tag_at(std::size_t index) { return static_cast<Tag>(index); }

constexpr std::string_view label(Tag tag) { return kTagLabels[index_of(tag)]; }
constexpr std::string_view name(EntityKind kind) {
  return kKindNames[index_of(kind)];
}

inline std::optional<Tag> parse_tag(std::string_view text) {
  for (std::size_t i = 0; i < kNumTags; ++i)
    if (kTagLabels[i] == text) return tag_at(i);
  return std::nullopt;
}

inline std::optional<EntityKind> parse_kind(std::string_view text) {
  for (std::size_t i = 0; i < kNumKinds; ++i)
    if (kKindNames[i] == text) return static_cast<EntityKind>(i);
  return std::nullopt;
}

constexpr bool is_begin(Tag tag) {
  return tag != Tag::O && index_of(tag) % 2 == 1;
}
constexpr bool is_inside(Tag tag) {
  return tag != Tag::O && index_of(tag) % 2 == 0;
}

// Kind carried by a B-/I- tag; nullopt for O.
constexpr std::optional<EntityKind> kind_of(Tag tag) {
  if (tag == Tag::O) return std::nullopt;
  return static_cast<EntityKind>((index_of(tag) - 1) / 2);
}

constexpr Tag begin_tag(EntityKind kind) { return tag_at(1 + 2 * index_of(kind)); }
constexpr Tag inside_tag(EntityKind kind) { return tag_at(2 + 2 * index_of(kind)); }

}  // namespace signex
