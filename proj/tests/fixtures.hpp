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

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "signex/corpus.hpp"
#include "signex/eval.hpp"
#include "signex/tagscheme.hpp"
#include "synthetic.hpp"

namespace signex::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(SIGNEX_TEST_DATA) / name;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("signex-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Patchy shadows in the right upper lung, reduced since the last exam.
inline const std::string kShadowText = "右上肺见多发斑片状密影较前减少。";

inline std::vector<Tag> shadow_tags() {
  using enum Tag;
  return {BeginP, InsideP, InsideP, O, BeginD, InsideD, BeginAbn, InsideAbn,
          InsideAbn, InsideAbn, InsideAbn, O, O, O, O, O};
}

inline Sentence shadow_sentence() { return Sentence::from_utf8("shadow", kShadowText); }

inline std::vector<Entity> shadow_entities() {
  const auto s = shadow_sentence();
  return {make_entity(s, EntityKind::P, 0, 3), make_entity(s, EntityKind::D, 4, 6),
          make_entity(s, EntityKind::Abn, 6, 11)};
}

// Partial occlusion of a right upper lobe bronchus.
inline const std::string kOcclusionText = "右上肺支气管部分闭塞。";

inline Sentence occlusion_sentence() { return Sentence::from_utf8("occlusion", kOcclusionText); }

inline std::vector<Entity> occlusion_entities() {
  const auto s = occlusion_sentence();
  return {make_entity(s, EntityKind::P, 0, 3), make_entity(s, EntityKind::P, 3, 6),
          make_entity(s, EntityKind::D, 6, 8), make_entity(s, EntityKind::Abn, 8, 10)};
}

// Error-analysis fixture: one sentence per documented error pattern.
struct ErrorFixture {
  std::vector<TaggedSentence> gold;
  std::vector<TaggedSentence> pred;
};

inline ErrorFixture error_fixture() {
  using K = EntityKind;
  struct Case {
    std::string id;
    std::string text;
    std::vector<std::tuple<K, std::size_t, std::size_t>> gold;
    std::vector<std::tuple<K, std::size_t, std::size_t>> pred;
  };
  const std::vector<Case> cases{
      // degree tagged as body part
      {"type", "食管全程扩张，局部较前增著",
       {{K::P, 0, 2}, {K::D, 2, 4}, {K::Abn, 4, 6}},
       {{K::P, 0, 2}, {K::P, 2, 4}, {K::Abn, 4, 6}}},
      // trailing enumeration comma swallowed into the body part
      {"long", "肝、脾多发囊肿",
       {{K::P, 0, 1}, {K::P, 2, 3}, {K::D, 3, 5}, {K::Abn, 5, 7}},
       {{K::P, 0, 2}, {K::P, 2, 3}, {K::D, 3, 5}, {K::Abn, 5, 7}}},
      // ordinary body part that is not an attribute
      {"spurious", "两肺膨胀良好", {}, {{K::P, 0, 2}}},
      // uncommon sign not recognized
      {"missing", "胃内见食糜及液体潴留", {{K::P, 0, 1}, {K::Abn, 3, 10}}, {{K::P, 0, 1}}},
      // two gold body parts tagged as one
      {"merged", "食管下端贲门区狭窄",
       {{K::P, 0, 4}, {K::P, 4, 7}, {K::Abn, 7, 9}},
       {{K::P, 0, 7}, {K::Abn, 7, 9}}},
  };
  ErrorFixture fx;
  for (const auto& c : cases) {
    const auto sentence = Sentence::from_utf8(c.id, c.text);
    auto build = [&](const auto& spans) {
      std::vector<Entity> es;
      for (const auto& [k, b, e] : spans) es.push_back(make_entity(sentence, k, b, e));
      return TaggedSentence{sentence, entities_to_tags(sentence, es)};
    };
    fx.gold.push_back(build(c.gold));
    fx.pred.push_back(build(c.pred));
  }
  return fx;
}

inline eval::EntityCorpus to_entity_corpus(const std::vector<TaggedSentence>& corpus) {
  eval::EntityCorpus out;
  for (const auto& item : corpus) out[item.sentence.id] = tags_to_entities(item.sentence, item.tags);
  return out;
}

}  // namespace signex::testing
