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

// Entity spans <-> BIO tag paths.

#include <algorithm>
#include <span>
#include <vector>

#include "signex/corpus.hpp"
#include "signex/tags.hpp"

namespace signex {

// Encodes non-overlapping entities as B-X I-X* runs; everything else is O.
inline TagSequence entities_to_tags(const Sentence& sentence, std::span<const Entity> entities) {
  TagSequence out{sentence.id, std::vector<Tag>(sentence.size(), Tag::O)};
  std::vector<bool> taken(sentence.size(), false);
  for (const auto& e : entities) {
    if (e.start >= e.end || e.end > sentence.size())
      throw InputError("entity [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                       ") out of bounds in sentence '" + sentence.id + "'");
    for (std::size_t i = e.start; i < e.end; ++i) {
      if (taken[i])
        throw InputError("overlapping entities at offset " + std::to_string(i) +
                         " in sentence '" + sentence.id + "'");
      taken[i] = true;
      out.tags[i] = i == e.start ? begin_tag(e.kind) : inside_tag(e.kind);
    }
  }
  return out;
}

// Decodes any tag path into entities sorted by start. An I-X that does not
// continue a run of kind X opens a new entity, as does every B-X.
inline std::vector<Entity> tags_to_entities(const Sentence& sentence, std::span<const Tag> tags) {
  if (tags.size() != sentence.size())
    throw InputError("sentence '" + sentence.id + "' has " + std::to_string(sentence.size()) +
                     " chars but " + std::to_string(tags.size()) + " tags");
  std::vector<Entity> entities;
  std::optional<EntityKind> open;
  std::size_t open_start = 0;
  auto close = [&](std::size_t end) {
    if (open) entities.push_back(make_entity(sentence, *open, open_start, end));
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto kind = kind_of(tags[i]);
    if (!kind) {
      close(i);
    } else if (is_begin(tags[i]) || open != kind) {
      close(i);
      open = kind;
      open_start = i;
    }
  }
  close(tags.size());
  return entities;
}

inline std::vector<Entity> tags_to_entities(const Sentence& sentence, const TagSequence& tags) {
  return tags_to_entities(sentence, std::span<const Tag>(tags.tags));
}

// True when `next` may follow `prev` in a well-formed BIO path. `prev` is
// nullopt at sentence start.
constexpr bool bio_allowed(std::optional<Tag> prev, Tag next) {
  if (!is_inside(next)) return true;
  return prev && kind_of(*prev) == kind_of(next);
}

// Indices where I-X follows neither B-X nor I-X.
inline std::vector<std::size_t> validate_path(std::span<const Tag> tags) {
  std::vector<std::size_t> violations;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::optional<Tag> prev = i ? std::optional<Tag>(tags[i - 1]) : std::nullopt;
    if (!bio_allowed(prev, tags[i])) violations.push_back(i);
  }
  return violations;
}

inline std::vector<std::size_t> validate_path(const TagSequence& tags) {
  return validate_path(std::span<const Tag>(tags.tags));
}

// Re-encodes an arbitrary tag path into a well-formed one.
inline TagSequence repair_path(const Sentence& sentence, const TagSequence& tags) {
  const auto entities = tags_to_entities(sentence, tags);
  return entities_to_tags(sentence, entities);
}

}  // namespace signex
