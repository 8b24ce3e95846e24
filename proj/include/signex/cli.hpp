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

// Command-line driver. Subcommands: train, tag, extract, eval, errors.
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "signex/corpus.hpp"
#include "signex/eval.hpp"
#include "signex/model.hpp"
#include "signex/tag2relation.hpp"
#include "signex/tagscheme.hpp"
#include "signex/trainer.hpp"

namespace signex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kDictionaryEnv = "SIGNEX_DICTIONARY";

enum class EmissionSource { Features, External };
enum class InputFormat { Text, Tagged };
enum class OutputFormat { Text, Json };

struct DecodeOptions {
  std::string model_path;
  EmissionSource source = EmissionSource::Features;
  std::string emissions_path;
  bool constrain_bio = true;
  unsigned jobs = 1;
};

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results are
// written by index, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += jobs) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<TaggedSentence> load_input(const std::string& path, InputFormat format) {
  if (format == InputFormat::Tagged) return read_tagged_corpus(path);
  std::vector<TaggedSentence> out;
  for (auto& s : read_sentences(path)) {
    TagSequence tags{s.id, {}};
    out.push_back({std::move(s), std::move(tags)});
  }
  return out;
}

// Fills in tags for every sentence by Viterbi decoding.
inline void decode_all(std::vector<TaggedSentence>& corpus, const DecodeOptions& options) {
  const CrfModel model = load_model(options.model_path);
  std::map<std::string, EmissionMatrix> external;
  if (options.source == EmissionSource::External) {
    if (options.emissions_path.empty())
      throw InputError("--emissions is required with --emission-source external");
    external = read_emission_set(options.emissions_path);
  }
  parallel_for(corpus.size(), options.jobs, [&](std::size_t i) {
    auto& item = corpus[i];
    if (options.source == EmissionSource::External) {
      auto it = external.find(item.sentence.id);
      if (it == external.end())
        throw InputError("no emission matrix for sentence '" + item.sentence.id + "'");
      item.tags = model.decode(external_emissions(item.sentence, it->second), options.constrain_bio);
    } else {
      item.tags = model.decode(item.sentence, options.constrain_bio);
    }
  });
}

inline eval::EntityCorpus entities_of(const std::vector<TaggedSentence>& corpus) {
  eval::EntityCorpus out;
  for (const auto& item : corpus) {
    if (out.contains(item.sentence.id))
      throw InputError("duplicate sentence id '" + item.sentence.id + "'");
    out[item.sentence.id] = tags_to_entities(item.sentence, item.tags);
  }
  return out;
}

inline void check_same_text(const std::vector<TaggedSentence>& pred,
                            const std::vector<TaggedSentence>& gold) {
  std::map<std::string, const Sentence*> by_id;
  for (const auto& item : gold) by_id[item.sentence.id] = &item.sentence;
  for (const auto& item : pred) {
    auto it = by_id.find(item.sentence.id);
    if (it != by_id.end() && it->second->chars != item.sentence.chars)
      throw InputError("sentence '" + item.sentence.id + "' differs between corpora");
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  auto out = detail::open_output(path);
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string train_path;
  std::string dev_path;
  std::string model_out;
  std::string report_out;
  TrainConfig config;
  bool quiet = false;
};

inline int cmd_train(const TrainArgs& args, std::ostream& out) {
  args.config.validate();
  const auto train_corpus = read_tagged_corpus(args.train_path);
  const auto dev_corpus = read_tagged_corpus(args.dev_path);
  auto result = train(train_corpus, dev_corpus, args.config,
                      [&](std::size_t epoch, double loss, double f1) {
                        if (!args.quiet)
                          out << "epoch " << epoch + 1 << "\tnll " << eval::fixed2(loss)
                              << "\tdev_f1 " << eval::fixed2(f1) << '\n';
                      });
  save_model(result.model, args.model_out);
  const std::string report_path =
      args.report_out.empty() ? args.model_out + ".report.json" : args.report_out;
  write_text_file(report_path, to_json(result.report).dump(2) + "\n");
  out << "selected epoch " << result.report.selected_epoch + 1 << " dev_f1 "
      << eval::fixed2(result.report.dev_f1[result.report.selected_epoch]) << '\n';
  return kExitOk;
}

struct TagArgs {
  std::string input;
  InputFormat input_format = InputFormat::Text;
  std::string output;
  DecodeOptions decode;
};

inline int cmd_tag(const TagArgs& args) {
  auto corpus = load_input(args.input, args.input_format);
  decode_all(corpus, args.decode);
  auto out = detail::open_output(args.output);
  write_tagged_corpus(out, corpus);
  if (!out) throw InputError("failed writing '" + args.output + "'");
  return kExitOk;
}

struct ExtractArgs {
  std::string input;
  InputFormat input_format = InputFormat::Text;
  std::string dict_path;
  std::string relations_out;
  std::string quads_out;
  DecodeOptions decode;
};

inline int cmd_extract(const ExtractArgs& args) {
  auto corpus = load_input(args.input, args.input_format);
  if (args.dict_path.empty())
    throw InputError(std::string("no dictionary given (--dict or ") + kDictionaryEnv + ")");
  const auto dict = read_dictionary(args.dict_path);
  // Pre-tagged input is matched as-is; plain text is decoded first.
  if (args.input_format == InputFormat::Text) {
    if (args.decode.model_path.empty()) throw InputError("--model is required for text input");
    decode_all(corpus, args.decode);
  }

  std::vector<MatchResult> results(corpus.size());
  parallel_for(corpus.size(), args.decode.jobs, [&](std::size_t i) {
    const auto& item = corpus[i];
    results[i] = match(item.sentence, tags_to_entities(item.sentence, item.tags), dict);
  });

  auto relations = detail::open_output(args.relations_out);
  auto quads = detail::open_output(args.quads_out);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& id = corpus[i].sentence.id;
    for (const auto& r : results[i].relations) {
      nlohmann::json j = r;
      j["sentence_id"] = id;
      relations << j.dump() << '\n';
    }
    for (const auto& q : results[i].quadruples) {
      nlohmann::json j = q;
      j["sentence_id"] = id;
      quads << j.dump() << '\n';
    }
  }
  if (!relations || !quads) throw InputError("failed writing extraction output");
  return kExitOk;
}

enum class EvalMode { Entity, Relation, Agreement, Errors };
enum class AgreementLevel { Entity, Relation };

struct EvalArgs {
  std::string pred_path;
  std::string gold_path;
  EvalMode mode = EvalMode::Entity;
  AgreementLevel level = AgreementLevel::Entity;
  OutputFormat format = OutputFormat::Text;
  std::string report_out;
  std::string confusion_csv;
};

inline int cmd_eval(const EvalArgs& args, std::ostream& out) {
  nlohmann::json report;
  std::string text;

  auto entity_pair = [&] {
    const auto pred = read_tagged_corpus(args.pred_path);
    const auto gold = read_tagged_corpus(args.gold_path);
    check_same_text(pred, gold);
    auto p = entities_of(pred);
    auto g = entities_of(gold);
    eval::check_aligned(p, g);
    return std::pair{std::move(p), std::move(g)};
  };

  switch (args.mode) {
    case EvalMode::Entity: {
      const auto [pred, gold] = entity_pair();
      const auto scores = eval::entity_prf(pred, gold);
      report = eval::to_json(scores);
      text = eval::prf_table(scores);
      break;
    }
    case EvalMode::Relation: {
      const auto scores =
          eval::relation_prf(read_relations(args.pred_path), read_relations(args.gold_path));
      report = eval::to_json(scores);
      text = eval::prf_table(scores);
      break;
    }
    case EvalMode::Agreement: {
      eval::PrfScores scores;
      if (args.level == AgreementLevel::Entity) {
        const auto [a, b] = entity_pair();
        scores = eval::agreement_f1(a, b);
      } else {
        scores = eval::agreement_f1(read_relations(args.pred_path), read_relations(args.gold_path));
      }
      report = eval::to_json(scores);
      text = eval::prf_table({{"agreement", scores}});
      break;
    }
    case EvalMode::Errors: {
      const auto [pred, gold] = entity_pair();
      const auto analysis = eval::classify_errors(pred, gold);
      report = eval::to_json(analysis);
      text = eval::error_report(analysis);
      if (!args.confusion_csv.empty())
        write_text_file(args.confusion_csv, eval::confusion_csv(analysis.confusion));
      break;
    }
  }

  if (!args.report_out.empty()) write_text_file(args.report_out, report.dump(2) + "\n");
  if (args.format == OutputFormat::Json)
    out << report.dump(2) << '\n';
  else
    out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline void add_decode_options(CLI::App& cmd, DecodeOptions& decode, bool model_required) {
  auto* model = cmd.add_option("--model", decode.model_path, "Model file written by `train`");
  if (model_required) model->required();
  cmd.add_option("--emission-source", decode.source, "Where emission scores come from")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, EmissionSource>{{"features", EmissionSource::Features},
                                                {"external", EmissionSource::External}}));
  cmd.add_option("--emissions", decode.emissions_path, "Emission file for --emission-source external")
      ->check(CLI::ExistingFile);
  cmd.add_flag("--constrain-bio,!--no-constrain-bio", decode.constrain_bio,
               "Forbid I-X after anything but B-X/I-X when decoding (default on)");
  cmd.add_option("--jobs,-j", decode.jobs, "Decoding threads")->check(CLI::PositiveNumber);
}

inline void add_input_format(CLI::App& cmd, InputFormat& format) {
  cmd.add_option("--input-format", format, "text: one sentence per line; tagged: <char>\\t<tag>")
      ->transform(CLI::CheckedTransformer(std::map<std::string, InputFormat>{
          {"text", InputFormat::Text}, {"tagged", InputFormat::Tagged}}));
}

inline void add_output_format(CLI::App& cmd, OutputFormat& format) {
  cmd.add_option("--format", format, "Console output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, OutputFormat>{
          {"text", OutputFormat::Text}, {"json", OutputFormat::Json}}));
}

inline void add_eval_paths(CLI::App& cmd, EvalArgs& args) {
  cmd.add_option("--pred", args.pred_path, "Predicted corpus")->required()->check(CLI::ExistingFile);
  cmd.add_option("--gold", args.gold_path, "Gold corpus")->required()->check(CLI::ExistingFile);
  cmd.add_option("--report-out", args.report_out, "Write the JSON report here");
  add_output_format(cmd, args.format);
}

inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Abnormal imaging sign extraction: CRF tagging and attribute matching"};
  app.name("signex");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a CRF tagger");
  train_cmd->add_option("--train", train_args.train_path, "Tagged training corpus")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", train_args.dev_path, "Tagged dev corpus for model selection")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model-out", train_args.model_out, "Output model file")->required();
  train_cmd->add_option("--report-out", train_args.report_out,
                        "Training report JSON (default: <model-out>.report.json)");
  train_cmd->add_option("--epochs", train_args.config.epochs, "Epoch budget")->capture_default_str();
  train_cmd->add_option("--lr", train_args.config.initial_rate, "Learning rate before decay")
      ->capture_default_str();
  train_cmd->add_option("--lr-decayed", train_args.config.decayed_rate, "Learning rate after decay")
      ->capture_default_str();
  train_cmd->add_option("--decay-epoch", train_args.config.decay_epoch,
                        "First epoch (1-based) using the decayed rate")->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.config.batch_size, "Mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.config.seed, "Shuffle seed")->capture_default_str();
  train_cmd->add_option("--l2", train_args.config.l2, "L2 penalty")->capture_default_str();
  train_cmd->add_flag("--quiet,-q", train_args.quiet, "Do not print per-epoch progress");

  TagArgs tag_args;
  auto* tag_cmd = app.add_subcommand("tag", "Decode BIO tags for sentences");
  tag_cmd->add_option("--input", tag_args.input, "Input sentences")->required()->check(CLI::ExistingFile);
  tag_cmd->add_option("--output", tag_args.output, "Tagged corpus output")->required();
  add_input_format(*tag_cmd, tag_args.input_format);
  add_decode_options(*tag_cmd, tag_args.decode, true);

  ExtractArgs extract_args;
  auto* extract_cmd = app.add_subcommand("extract", "Tag sentences and extract relations/quadruples");
  extract_cmd->add_option("--input", extract_args.input, "Input sentences")
      ->required()->check(CLI::ExistingFile);
  add_input_format(*extract_cmd, extract_args.input_format);
  extract_cmd->add_option("--dict", extract_args.dict_path, "Secondary body-part dictionary")
      ->envname(kDictionaryEnv)->check(CLI::ExistingFile);
  extract_cmd->add_option("--relations-out", extract_args.relations_out, "Relations JSONL")->required();
  extract_cmd->add_option("--quads-out", extract_args.quads_out, "Quadruples JSONL")->required();
  add_decode_options(*extract_cmd, extract_args.decode, false);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold");
  add_eval_paths(*eval_cmd, eval_args);
  eval_cmd->add_option("--mode", eval_args.mode, "entity | relation | agreement | errors")
      ->transform(CLI::CheckedTransformer(std::map<std::string, EvalMode>{
          {"entity", EvalMode::Entity},
          {"relation", EvalMode::Relation},
          {"agreement", EvalMode::Agreement},
          {"errors", EvalMode::Errors}}));
  eval_cmd->add_option("--level", eval_args.level, "Agreement level: entity | relation")
      ->transform(CLI::CheckedTransformer(std::map<std::string, AgreementLevel>{
          {"entity", AgreementLevel::Entity}, {"relation", AgreementLevel::Relation}}));
  eval_cmd->add_option("--confusion-csv", eval_args.confusion_csv, "Confusion matrix CSV (errors mode)");

  EvalArgs errors_args;
  errors_args.mode = EvalMode::Errors;
  auto* errors_cmd = app.add_subcommand("errors", "Entity error analysis (TYPE/EXTENT/SPURIOUS/MISSING)");
  add_eval_paths(*errors_cmd, errors_args);
  errors_cmd->add_option("--confusion-csv", errors_args.confusion_csv, "Confusion matrix CSV");

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*tag_cmd) return cmd_tag(tag_args);
    if (*extract_cmd) return cmd_extract(extract_args);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*errors_cmd) return cmd_eval(errors_args, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace signex::cli
