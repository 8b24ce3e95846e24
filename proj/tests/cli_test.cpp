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

#include "signex/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

namespace signex {
namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "signex");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(testing::slurp(path));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

std::string tagged(const std::vector<TaggedSentence>& corpus) {
  std::ostringstream out;
  write_tagged_corpus(out, corpus);
  return out.str();
}

TaggedSentence occlusion_tagged() {
  const auto s = testing::occlusion_sentence();
  return {s, entities_to_tags(s, testing::occlusion_entities())};
}

TaggedSentence shadow_tagged() { return {testing::shadow_sentence(), TagSequence{"shadow", testing::shadow_tags()}}; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    train_path = dir.write("train.tsv", tagged({shadow_tagged(), occlusion_tagged()}));
    dict_path = dir.write("dict.txt", "支气管\n胸膜\n");
    model_path = dir.file("model.json");
    const auto r = run({"train", "--train", train_path, "--dev", train_path, "--model-out", model_path,
                        "--epochs", "30", "--batch-size", "1", "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  testing::TempDir dir;
  std::string train_path;
  std::string dict_path;
  std::string model_path;
};

TEST_F(CliTest, TrainWritesModelAndReport) {
  const auto report = nlohmann::json::parse(testing::slurp(model_path + ".report.json"));
  EXPECT_EQ(report["dev_f1"].size(), 30u);
  EXPECT_EQ(report["updates"], 60);
  EXPECT_NO_THROW(load_model(model_path));
}

TEST_F(CliTest, TrainPrintsEpochLines) {
  const auto r = run({"train", "--train", train_path, "--dev", train_path, "--model-out",
                      dir.file("m2.json"), "--epochs", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
}

TEST_F(CliTest, TrainArgumentErrors) {
  EXPECT_EQ(run({"train", "--train", train_path, "--dev", dir.file("missing.tsv"), "--model-out",
                 dir.file("m.json")}).code, cli::kExitInput);
  EXPECT_EQ(run({"train", "--train", train_path, "--dev", train_path, "--model-out", dir.file("m.json"),
                 "--epochs", "0"}).code, cli::kExitInput);
  const auto bad = dir.write("bad.tsv", "右\tB-X\n");
  const auto r = run({"train", "--train", bad, "--dev", train_path, "--model-out", dir.file("m.json")});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("bad.tsv:1"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainDivergenceIsNumericalExit) {
  const auto r = run({"train", "--train", train_path, "--dev", train_path, "--model-out", dir.file("m.json"),
                      "--epochs", "2", "--lr", "1e308", "--lr-decayed", "1e308"});
  EXPECT_EQ(r.code, cli::kExitNumerical);
}

TEST_F(CliTest, TagDecodesText) {
  const auto input = dir.write("in.txt", std::string("shadow\t") + testing::kShadowText + "\n");
  const auto output = dir.file("out.tsv");
  ASSERT_EQ(run({"tag", "--model", model_path, "--input", input, "--output", output}).code, 0);
  const auto corpus = read_tagged_corpus(output);
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(corpus[0].sentence.id, "shadow");
  EXPECT_EQ(corpus[0].tags.tags, testing::shadow_tags());
}

TEST_F(CliTest, ExtractFromText) {
  const auto input = dir.write("in.txt", std::string("shadow\t") + testing::kShadowText + "\n");
  const auto rel = dir.file("rel.jsonl");
  const auto quads = dir.file("quads.jsonl");
  const auto r = run({"extract", "--model", model_path, "--input", input, "--dict", dict_path,
                      "--relations-out", rel, "--quads-out", quads});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto q = read_jsonl(quads);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0]["sentence_id"], "shadow");
  EXPECT_EQ(q[0]["pp"]["text"], "右上肺");
  EXPECT_TRUE(q[0]["sp"].is_null());
  EXPECT_EQ(q[0]["d"]["text"], "多发");
  EXPECT_EQ(q[0]["abn"]["text"], "斑片状密影");
  EXPECT_EQ(read_jsonl(rel).size(), 2u);
}

TEST_F(CliTest, ExtractFromTaggedSkipsDecoding) {
  const auto input = dir.write("occlusion.tsv", tagged({occlusion_tagged()}));
  const auto rel = dir.file("rel.jsonl");
  const auto quads = dir.file("quads.jsonl");
  ASSERT_EQ(run({"extract", "--input", input, "--input-format", "tagged", "--dict", dict_path,
                 "--relations-out", rel, "--quads-out", quads}).code, 0);
  const auto relations = read_jsonl(rel);
  ASSERT_EQ(relations.size(), 4u);
  std::size_t p2p = 0;
  for (const auto& j : relations) p2p += j["kind"] == "P2P";
  EXPECT_EQ(p2p, 1u);
  const auto q = read_jsonl(quads);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0]["sp"]["text"], "支气管");
}

TEST_F(CliTest, ExtractDictionaryFromEnvironment) {
  const auto input = dir.write("occlusion.tsv", tagged({occlusion_tagged()}));
  ::setenv(cli::kDictionaryEnv, dict_path.c_str(), 1);
  const auto r = run({"extract", "--input", input, "--input-format", "tagged", "--relations-out",
                      dir.file("r.jsonl"), "--quads-out", dir.file("q.jsonl")});
  ::unsetenv(cli::kDictionaryEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_jsonl(dir.file("r.jsonl")).size(), 4u);
}

TEST_F(CliTest, TagThenExtractEqualsExtract) {
  std::string text;
  for (int i = 0; i < 12; ++i)
    text += "s" + std::to_string(i) + "\t" + (i % 2 ? testing::kOcclusionText : testing::kShadowText) + "\n";
  const auto input = dir.write("in.txt", text);
  const auto tagged_path = dir.file("tagged.tsv");
  ASSERT_EQ(run({"tag", "--model", model_path, "--input", input, "--output", tagged_path, "-j", "4"}).code, 0);
  ASSERT_EQ(run({"extract", "--input", tagged_path, "--input-format", "tagged", "--dict", dict_path,
                 "--relations-out", dir.file("r1"), "--quads-out", dir.file("q1")}).code, 0);
  ASSERT_EQ(run({"extract", "--model", model_path, "--input", input, "--dict", dict_path,
                 "--relations-out", dir.file("r2"), "--quads-out", dir.file("q2"), "--jobs", "3"}).code, 0);
  EXPECT_EQ(testing::slurp(dir.file("r1")), testing::slurp(dir.file("r2")));
  EXPECT_EQ(testing::slurp(dir.file("q1")), testing::slurp(dir.file("q2")));
  // Output order follows input order regardless of thread count.
  const auto corpus = read_tagged_corpus(tagged_path);
  ASSERT_EQ(corpus.size(), 12u);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(corpus[i].sentence.id, "s" + std::to_string(i));
}

TEST_F(CliTest, EmptyInputIsNotAnError) {
  const auto input = dir.write("empty.txt", "");
  const auto rel = dir.file("rel.jsonl");
  ASSERT_EQ(run({"extract", "--model", model_path, "--input", input, "--dict", dict_path,
                 "--relations-out", rel, "--quads-out", dir.file("q.jsonl")}).code, 0);
  EXPECT_TRUE(testing::slurp(rel).empty());
}

TEST_F(CliTest, ExternalEmissions) {
  const auto input = dir.write("in.txt", std::string("shadow\t") + testing::kShadowText + "\n");
  // Strong one-hot emissions for a tagging that differs from the trained one.
  std::vector<Tag> want(testing::shadow_sentence().size(), Tag::O);
  want[12] = Tag::BeginAbn;
  want[13] = Tag::InsideAbn;
  EmissionMatrix m{"shadow", EmissionScores::Zero(static_cast<Eigen::Index>(want.size()), kNumTags)};
  for (std::size_t i = 0; i < want.size(); ++i) m.scores(static_cast<Eigen::Index>(i), index_of(want[i])) = 1000.0;
  std::ostringstream emissions;
  write_emissions(emissions, m);
  const auto em_path = dir.write("em.txt", emissions.str());
  const auto output = dir.file("out.tsv");
  const auto r = run({"tag", "--model", model_path, "--input", input, "--output", output, "--emission-source",
                      "external", "--emissions", em_path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_tagged_corpus(output)[0].tags.tags, want);

  const auto short_path = dir.write("short.txt", "shadow 2 7\n0 0 0 0 0 0 0\n0 0 0 0 0 0 0\n");
  EXPECT_EQ(run({"tag", "--model", model_path, "--input", input, "--output", output, "--emission-source",
                 "external", "--emissions", short_path}).code, cli::kExitInput);
}

TEST_F(CliTest, EvalEntityScores) {
  auto pred = shadow_tagged();
  pred.tags.tags[4] = Tag::O;
  pred.tags.tags[5] = Tag::O;
  auto pred2 = occlusion_tagged();
  const auto pred_path = dir.write("pred.tsv", tagged({pred, pred2}));
  const auto gold_path = dir.write("gold.tsv", tagged({shadow_tagged(), occlusion_tagged()}));
  const auto r = run({"eval", "--pred", pred_path, "--gold", gold_path, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(eval::fixed2(j["overall"]["precision"]), "100.00");
  EXPECT_EQ(eval::fixed2(j["overall"]["recall"]), "85.71");
  EXPECT_EQ(eval::fixed2(j["per_kind"]["D"]["recall"]), "50.00");

  const auto text = run({"eval", "--pred", pred_path, "--gold", gold_path});
  EXPECT_NE(text.out.find("100.00"), std::string::npos) << text.out;
  EXPECT_NE(text.out.find("92.31"), std::string::npos) << text.out;
}

TEST_F(CliTest, EvalRejectsMismatchedIds) {
  auto other = shadow_tagged();
  other.sentence.id = "elsewhere";
  const auto pred_path = dir.write("pred.tsv", tagged({other}));
  const auto gold_path = dir.write("gold.tsv", tagged({shadow_tagged()}));
  const auto r = run({"eval", "--pred", pred_path, "--gold", gold_path});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("mismatch"), std::string::npos) << r.err;
}

TEST_F(CliTest, RelationAndAgreementModes) {
  const auto gold_rel = dir.file("gold_rel.jsonl");
  const auto input = dir.write("occlusion.tsv", tagged({occlusion_tagged()}));
  ASSERT_EQ(run({"extract", "--input", input, "--input-format", "tagged", "--dict", dict_path,
                 "--relations-out", gold_rel, "--quads-out", dir.file("q")}).code, 0);
  // With 支气管 treated as primary it heads its own chunk; only its links survive.
  const auto empty_dict = dir.write("none.txt", "肋骨\n");
  const auto pred_rel = dir.file("pred_rel.jsonl");
  ASSERT_EQ(run({"extract", "--input", input, "--input-format", "tagged", "--dict", empty_dict,
                 "--relations-out", pred_rel, "--quads-out", dir.file("q2")}).code, 0);
  const auto r = run({"eval", "--mode", "relation", "--pred", pred_rel, "--gold", gold_rel, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["overall"]["gold"], 4);
  EXPECT_EQ(j["overall"]["predicted"], 2);
  EXPECT_EQ(j["overall"]["correct"], 2);

  const auto a = run({"eval", "--mode", "agreement", "--level", "relation", "--pred", gold_rel, "--gold",
                      gold_rel, "--format", "json"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(nlohmann::json::parse(a.out)["f1"], 100.0);
}

TEST_F(CliTest, ErrorsModeCounts) {
  const auto fx = testing::error_fixture();
  const auto pred_path = dir.write("pred.tsv", tagged(fx.pred));
  const auto gold_path = dir.write("gold.tsv", tagged(fx.gold));
  const auto csv = dir.file("cm.csv");
  const auto report = dir.file("report.json");
  const auto r = run({"errors", "--pred", pred_path, "--gold", gold_path, "--confusion-csv", csv,
                      "--report-out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("TYPE"), std::string::npos);
  const auto j = nlohmann::json::parse(testing::slurp(report));
  EXPECT_EQ(j["categories"]["TYPE"]["count"], 1);
  EXPECT_EQ(j["categories"]["EXTENT"]["count"], 2);
  EXPECT_EQ(j["categories"]["SPURIOUS"]["count"], 1);
  EXPECT_EQ(j["categories"]["MISSING"]["count"], 2);
  EXPECT_EQ(j["extent"]["LONG"]["P"], 2);
  EXPECT_NE(testing::slurp(csv).find("Spurious"), std::string::npos);

  const auto same = run({"eval", "--mode", "errors", "--pred", pred_path, "--gold", gold_path, "--format", "json"});
  EXPECT_EQ(nlohmann::json::parse(same.out), j);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitInput);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitInput);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

}  // namespace
}  // namespace signex
