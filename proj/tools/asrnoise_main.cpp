// tools/asrnoise_main.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "asrnoise/augmentor.hpp"
#include "asrnoise/confusion.hpp"
#include "asrnoise/corpus.hpp"
#include "asrnoise/experiment.hpp"
#include "asrnoise/generator.hpp"
#include "asrnoise/jsonl.hpp"
#include "asrnoise/lexicon.hpp"
#include "asrnoise/parallel.hpp"
#include "asrnoise/slu.hpp"
#include "asrnoise/synth.hpp"

namespace {

using namespace asrnoise;

std::vector<VocabEntry> read_vocab_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot open " + path);
  std::vector<VocabEntry> vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("vocab: missing tab at " + path + ":" +
                               std::to_string(line_no));
    }
    vocab.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
  }
  return vocab;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct CollectArgs {
  std::string refs, hyps, output;
  bool keep_case = false, keep_punct = false;
};

struct ExtractArgs {
  std::string pairs, output;
  int max_ngram = 3;
  int min_count = 1;
};

struct RsArgs {
  std::string dict, vocab, output;
  int max_phone_edit = 2;
};

struct PerArgs {
  std::string dict, orig, gen, pairs;
};

struct TrainNgmArgs {
  std::string pairs, output, dev_pairs;
  NgmConfig cfg;
  TrainOptions opts;
  std::uint64_t seed = 0;
};

struct GenerateArgs {
  std::string model, text, input, output;
  GenerationConfig cfg;
  int count = 1;
};

struct AugmentArgs {
  std::string method = "ss";
  std::string dict, table, model, input, output;
  AugmentConfig cfg;
};

struct TrainSluArgs {
  std::string train, output, mode = "softmax";
  ClassifierConfig cfg;
  std::uint64_t seed = 0;
};

struct EvalSluArgs {
  std::string model, test, report;
};

struct MakeSynthArgs {
  std::string out_dir;
  SynthSizes sizes;
  std::uint64_t seed = 1;
};

struct BenchmarkArgs {
  std::string dict, out_dir;
  BenchmarkOptions opts;
};

int run_collect(const CollectArgs& a) {
  NormalizationPolicy policy{!a.keep_case, !a.keep_punct};
  CollectStats stats;
  const auto pairs = collect_pairs(read_keyed_jsonl(a.refs),
                                   read_keyed_jsonl(a.hyps), policy, &stats);
  write_pairs_jsonl(a.output, pairs);
  std::printf("joined %zu  dropped-equal %zu  kept %zu\n", stats.joined,
              stats.dropped_equal, stats.kept);
  return 0;
}

int run_extract(const ExtractArgs& a) {
  const ConfusionTable table =
      extract_ss_table(read_pairs_jsonl(a.pairs), a.max_ngram, a.min_count);
  table.save_tsv_file(a.output);
  std::printf("sources %zu  total weight %.0f\n", table.size(),
              table.total_weight());
  return 0;
}

int run_rs(const RsArgs& a) {
  const PronouncingDict dict = PronouncingDict::parse_file(a.dict);
  const ConfusionTable table =
      build_rs_table(dict, read_vocab_tsv(a.vocab), a.max_phone_edit);
  table.save_tsv_file(a.output);
  std::printf("sources %zu\n", table.size());
  return 0;
}

int run_per(const PerArgs& a) {
  const PronouncingDict dict = PronouncingDict::parse_file(a.dict);
  if (!a.pairs.empty()) {
    for (const CleanNoisyPair& p : read_pairs_jsonl(a.pairs)) {
      const auto per = per_score(dict, p.clean, p.noisy);
      if (per) {
        std::printf("%.4f\n", *per);
      } else {
        std::printf("undefined\n");
      }
    }
    return 0;
  }
  const auto per = per_score(dict, a.orig, a.gen);
  if (!per) {
    throw std::runtime_error(
        "per: the original text has no phones (undefined denominator)");
  }
  std::printf("%.4f\n", *per);
  return 0;
}

int run_train_ngm(TrainNgmArgs& a) {
  const auto pairs = read_pairs_jsonl(a.pairs);
  std::vector<CleanNoisyPair> dev;
  Rng rng(a.seed);
  TrainStats stats;
  if (!a.dev_pairs.empty()) dev = read_pairs_jsonl(a.dev_pairs);
  const NgmModel model =
      train_ngm(a.cfg, pairs, a.opts, rng, dev.empty() ? nullptr : &dev,
                &stats);
  model.save(a.output);
  std::printf("trained %zu pairs, best dev perplexity %.4f at step %d\n",
              pairs.size(), stats.best_dev_perplexity, stats.best_step);
  if (stats.skipped_too_long > 0) {
    std::fprintf(stderr, "warning: %zu pairs exceeded the context window\n",
                 stats.skipped_too_long);
  }
  return 0;
}

int run_generate(const GenerateArgs& a) {
  const NgmModel model = NgmModel::load(a.model);
  Rng rng(a.cfg.seed);
  if (!a.input.empty()) {
    const auto inputs = read_examples_jsonl(a.input);
    std::ofstream out(a.output.empty() ? "/dev/stdout" : a.output);
    if (!out) throw std::runtime_error("cannot write " + a.output);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Rng line_rng = rng.substream(i);
      for (int c = 0; c < a.count; ++c) {
        const GenerationResult r =
            generate(model, inputs[i].text, a.cfg, line_rng);
        nlohmann::ordered_json j;
        j["text"] = r.text;
        j["original"] = inputs[i].text;
        j["source_index"] = i;
        if (r.truncated) j["truncated"] = true;
        out << j.dump() << '\n';
      }
    }
    return 0;
  }
  for (int c = 0; c < a.count; ++c) {
    const GenerationResult r = generate(model, a.text, a.cfg, rng);
    std::printf("%s\n", r.text.c_str());
  }
  return 0;
}

int run_augment(const AugmentArgs& a) {
  AugmentConfig cfg = a.cfg;
  const auto method = parse_augment_method(a.method);
  if (!method) {
    throw CLI::ValidationError("--method", "expected one of rs, ss, eda, ngm");
  }
  cfg.method = *method;

  const PronouncingDict dict = PronouncingDict::parse_file(a.dict);
  const auto inputs = read_examples_jsonl(a.input);

  std::unique_ptr<ConfusionTable> table;
  std::unique_ptr<NgmModel> model;
  std::unique_ptr<EdaAugmenter> eda;
  AugmentResources res;
  res.dict = &dict;
  switch (cfg.method) {
    case AugmentMethod::kRs:
    case AugmentMethod::kSs: {
      if (a.table.empty()) {
        throw CLI::RequiredError("--table (for methods rs and ss)");
      }
      const TableKind kind = cfg.method == AugmentMethod::kRs ? TableKind::kRs
                                                              : TableKind::kSs;
      table = std::make_unique<ConfusionTable>(
          ConfusionTable::load_tsv_file(a.table, kind));
      res.table = table.get();
      break;
    }
    case AugmentMethod::kNgm: {
      if (a.model.empty()) {
        throw CLI::RequiredError("--model (for method ngm)");
      }
      model = std::make_unique<NgmModel>(NgmModel::load(a.model));
      res.model = model.get();
      break;
    }
    case AugmentMethod::kEda: {
      // Replacement words come from the input corpus itself.
      std::set<std::string> vocab;
      for (const LabeledExample& ex : inputs) {
        for (const std::string& tok : tokenize(ex.text)) vocab.insert(tok);
      }
      eda = std::make_unique<EdaAugmenter>(
          std::vector<std::string>(vocab.begin(), vocab.end()));
      res.eda = eda.get();
      break;
    }
  }

  const AugmentResult result = augment_corpus(inputs, cfg, res);
  write_augmented_jsonl(a.output, result.lines);
  std::printf("inputs %zu  emitted %zu  bypassed %zu  all-filtered %zu\n",
              inputs.size(), result.lines.size(), result.bypassed,
              result.all_filtered);
  return 0;
}

int run_train_slu(TrainSluArgs& a) {
  if (a.mode == "softmax") {
    a.cfg.mode = ClassifierMode::kSoftmax;
  } else if (a.mode == "ova" || a.mode == "one-vs-all") {
    a.cfg.mode = ClassifierMode::kOneVsAll;
  } else {
    throw CLI::ValidationError("--mode", "expected softmax or ova");
  }
  Rng rng(a.seed);
  const Classifier model =
      Classifier::train(read_examples_jsonl(a.train), a.cfg, rng);
  model.save(a.output);
  std::printf("trained classifier with %zu intents\n", model.labels().size());
  return 0;
}

int run_eval_slu(const EvalSluArgs& a) {
  const Classifier model = Classifier::load(a.model);
  const EvalMetrics m = evaluate(model, read_examples_jsonl(a.test));
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["multilabel"] = m.multilabel;
  j["accuracy"] = m.accuracy;
  j["f1"] = m.f1;
  if (!a.report.empty()) write_text_file(a.report, j.dump(2) + "\n");
  if (m.multilabel) {
    std::printf("multilabel accuracy %.4f  f1 %.4f  (%zu samples)\n",
                m.accuracy, m.f1, m.count);
  } else {
    std::printf("accuracy %.4f  (%zu samples)\n", m.accuracy, m.count);
  }
  return 0;
}

int run_make_synth(const MakeSynthArgs& a) {
  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  Rng rng(a.seed);
  const SyntheticChannel channel = default_channel();
  const SentenceTemplates pair_templates = default_pair_templates();
  const SynthBenchmark bench = make_synthetic_benchmark(
      channel, default_templates(), a.sizes, rng, &pair_templates);
  const std::string dir = a.out_dir + "/";
  write_pairs_jsonl(dir + "pairs.jsonl", bench.pairs);
  write_examples_jsonl(dir + "train.jsonl", bench.train);
  write_examples_jsonl(dir + "dev.jsonl", bench.dev);
  write_examples_jsonl(dir + "test.jsonl", bench.test);
  write_examples_jsonl(dir + "noisy_test.jsonl", bench.noisy_test);
  write_text_file(dir + "channel.json", channel.to_json() + "\n");
  std::printf("wrote %zu pairs and %zu/%zu/%zu splits to %s\n",
              bench.pairs.size(), bench.train.size(), bench.dev.size(),
              bench.test.size(), a.out_dir.c_str());
  return 0;
}

int run_benchmark(const BenchmarkArgs& a) {
  const PronouncingDict dict = PronouncingDict::parse_file(a.dict);
  const BenchmarkResult result = run_benchmark(dict, a.opts);
  const std::string table = format_report_table(result.report);
  std::fputs(table.c_str(), stdout);
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    write_text_file(a.out_dir + "/report.json",
                    report_to_json(result.report) + "\n");
    write_text_file(a.out_dir + "/table.txt", table);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ASR-plausible noise injection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; flags take precedence");
  app.failure_message(CLI::FailureMessage::help);

  int jobs = 1;
  app.add_option("--jobs", jobs, "worker threads for parallel kernels")
      ->default_val(1);

  CollectArgs collect;
  {
    CLI::App* c = app.add_subcommand(
        "collect-pairs", "join references with ASR hypotheses by id");
    c->add_option("--refs", collect.refs, "reference JSONL (id/text)")
        ->required();
    c->add_option("--hyps", collect.hyps, "hypothesis JSONL (id/text)")
        ->required();
    c->add_option("-o,--output", collect.output, "output pairs JSONL")
        ->required();
    c->add_flag("--keep-case", collect.keep_case,
                "compare without lowercasing");
    c->add_flag("--keep-punct", collect.keep_punct,
                "compare without stripping punctuation");
  }

  ExtractArgs extract;
  {
    CLI::App* c = app.add_subcommand(
        "extract-confusions", "count aligned n-gram confusions from pairs");
    c->add_option("--pairs", extract.pairs, "clean-noisy pairs JSONL")
        ->required();
    c->add_option("-o,--output", extract.output, "output TSV table")
        ->required();
    c->add_option("--max-ngram", extract.max_ngram, "longest source n-gram")
        ->default_val(3);
    c->add_option("--min-count", extract.min_count, "drop rarer confusions")
        ->default_val(1);
  }

  RsArgs rs;
  {
    CLI::App* c = app.add_subcommand(
        "build-rs-table", "phonetic neighbor candidates from a vocabulary");
    c->add_option("--dict", rs.dict, "pronouncing dictionary")->required();
    c->add_option("--vocab", rs.vocab, "TSV of word<TAB>term-frequency")
        ->required();
    c->add_option("-o,--output", rs.output, "output TSV table")->required();
    c->add_option("--max-phone-edit", rs.max_phone_edit,
                  "neighbors have phone distance strictly below this")
        ->default_val(2);
  }

  PerArgs per;
  {
    CLI::App* c =
        app.add_subcommand("per", "phone edit rate of generated text");
    c->add_option("--dict", per.dict, "pronouncing dictionary")->required();
    c->add_option("--orig", per.orig, "original text");
    c->add_option("--gen", per.gen, "generated text");
    c->add_option("--pairs", per.pairs, "score a pairs JSONL instead");
  }

  TrainNgmArgs tng;
  std::uint64_t tng_seed = 0;
  {
    CLI::App* c = app.add_subcommand("train-ngm",
                                     "train the noise generation model");
    c->add_option("--pairs", tng.pairs, "clean-noisy pairs JSONL")->required();
    c->add_option("-o,--output", tng.output, "model checkpoint path")
        ->required();
    c->add_option("--dev-pairs", tng.dev_pairs, "held-out pairs JSONL");
    c->add_option("--steps", tng.opts.steps)->default_val(2000);
    c->add_option("--batch-size", tng.opts.batch_size)->default_val(16);
    c->add_option("--lr", tng.opts.learning_rate)->default_val(0.3);
    c->add_option("--momentum", tng.opts.momentum)->default_val(0.9);
    c->add_option("--grad-clip", tng.opts.grad_clip)->default_val(1.0);
    c->add_option("--checkpoint-every", tng.opts.checkpoint_every)
        ->default_val(100);
    c->add_option("--dev-fraction", tng.opts.dev_fraction)->default_val(0.1);
    c->add_option("--vocab-max", tng.opts.vocab_max_size)->default_val(8192);
    c->add_option("--layers", tng.cfg.n_layers)->default_val(2);
    c->add_option("--d-model", tng.cfg.d_model)->default_val(64);
    c->add_option("--heads", tng.cfg.n_heads)->default_val(4);
    c->add_option("--d-ff", tng.cfg.d_ff)->default_val(256);
    c->add_option("--context", tng.cfg.context_window)->default_val(128);
    c->add_flag("--loss-on-noisy-only", tng.cfg.loss_on_noisy_only,
                "score only tokens after [SEP]");
    c->add_flag("--verbose", tng.opts.verbose, "log checkpoints");
    c->add_option("--seed", tng_seed)->default_val(0);
  }

  GenerateArgs gen;
  {
    CLI::App* c = app.add_subcommand("generate",
                                     "sample noisy text from a trained model");
    c->add_option("--model", gen.model, "model checkpoint")->required();
    c->add_option("--text", gen.text, "clean text to corrupt");
    c->add_option("--input", gen.input, "JSONL of {\"text\": ...} lines");
    c->add_option("-o,--output", gen.output, "output JSONL for --input mode");
    c->add_option("-n,--count", gen.count, "samples per input")
        ->default_val(1);
    c->add_option("--top-p", gen.cfg.top_p)->default_val(0.9);
    c->add_option("--temperature", gen.cfg.temperature)->default_val(1.0);
    c->add_option("--max-new-tokens", gen.cfg.max_new_tokens)
        ->default_val(64);
    c->add_option("--seed", gen.cfg.seed)->default_val(0);
  }

  AugmentArgs aug;
  {
    CLI::App* c = app.add_subcommand(
        "augment", "emit an augmented corpus with PER filtering");
    c->add_option("--method", aug.method, "rs, ss, eda, or ngm")->required();
    c->add_option("--dict", aug.dict, "pronouncing dictionary")->required();
    c->add_option("--table", aug.table, "confusion TSV (rs/ss)");
    c->add_option("--model", aug.model, "generator checkpoint (ngm)");
    c->add_option("--prop", aug.cfg.substitute_proportion,
                  "substitution probability per position")
        ->default_val(0.1);
    c->add_option("--n-candidates", aug.cfg.n_candidates)->default_val(5);
    c->add_option("--n-aug", aug.cfg.n_aug)->default_val(1);
    c->add_option("--per-threshold", aug.cfg.per_threshold,
                  "keep candidates with PER <= this (inf allowed)")
        ->default_val(1.0);
    c->add_option("--top-p", aug.cfg.generation.top_p)->default_val(0.9);
    c->add_option("--temperature", aug.cfg.generation.temperature)
        ->default_val(1.0);
    c->add_option("--max-new-tokens", aug.cfg.generation.max_new_tokens)
        ->default_val(64);
    c->add_option("--seed", aug.cfg.seed)->default_val(0);
    c->add_option("input", aug.input, "input JSONL")->required();
    c->add_option("output", aug.output, "output JSONL")->required();
  }

  TrainSluArgs tslu;
  {
    CLI::App* c = app.add_subcommand("train-slu",
                                     "train the intent classifier");
    c->add_option("--train", tslu.train, "labeled JSONL")->required();
    c->add_option("-o,--output", tslu.output, "model path")->required();
    c->add_option("--mode", tslu.mode, "softmax or ova")
        ->default_val("softmax");
    c->add_option("--epochs", tslu.cfg.epochs)->default_val(20);
    c->add_option("--lr", tslu.cfg.lr)->default_val(0.5);
    c->add_option("--dim", tslu.cfg.dim)->default_val(20);
    c->add_option("--buckets", tslu.cfg.n_buckets)->default_val(1 << 18);
    c->add_option("--threshold", tslu.cfg.threshold)->default_val(0.5);
    c->add_option("--max-predictions", tslu.cfg.max_predictions)
        ->default_val(3);
    c->add_option("--seed", tslu.seed)->default_val(0);
  }

  EvalSluArgs eslu;
  {
    CLI::App* c = app.add_subcommand("eval-slu",
                                     "evaluate a trained classifier");
    c->add_option("--model", eslu.model, "classifier model")->required();
    c->add_option("--test", eslu.test, "labeled JSONL")->required();
    c->add_option("--report", eslu.report, "write metrics JSON here");
  }

  MakeSynthArgs synth;
  {
    CLI::App* c = app.add_subcommand(
        "make-synth", "generate the synthetic channel benchmark corpus");
    c->add_option("--out-dir", synth.out_dir, "output directory")->required();
    c->add_option("--pairs", synth.sizes.n_pairs)->default_val(4000);
    c->add_option("--train", synth.sizes.n_train)->default_val(2000);
    c->add_option("--dev", synth.sizes.n_dev)->default_val(300);
    c->add_option("--test", synth.sizes.n_test)->default_val(500);
    c->add_option("--seed", synth.seed)->default_val(1);
  }

  BenchmarkArgs bench;
  {
    CLI::App* c = app.add_subcommand(
        "benchmark", "full augmentation-method comparison on synthetic data");
    c->add_option("--dict", bench.dict, "pronouncing dictionary")->required();
    c->add_option("--out-dir", bench.out_dir,
                  "write report.json and table.txt here");
    c->add_option("--seed", bench.opts.seed)->default_val(1);
    c->add_option("--runs", bench.opts.runs)->default_val(5);
    c->add_option("--pairs", bench.opts.sizes.n_pairs)->default_val(4000);
    c->add_option("--train", bench.opts.sizes.n_train)->default_val(2000);
    c->add_option("--dev", bench.opts.sizes.n_dev)->default_val(300);
    c->add_option("--test", bench.opts.sizes.n_test)->default_val(500);
    c->add_option("--n-aug", bench.opts.n_aug)->default_val(4);
    c->add_option("--ngm-candidates", bench.opts.ngm_candidates)
        ->default_val(5);
    c->add_option("--per-threshold", bench.opts.per_threshold)
        ->default_val(1.0);
    c->add_option("--prop", bench.opts.substitute_proportion)
        ->default_val(0.1);
    c->add_option("--ngm-steps", bench.opts.ngm_train.steps)
        ->default_val(1500);
    c->add_option("--ngm-batch", bench.opts.ngm_train.batch_size)
        ->default_val(16);
    c->add_option("--ngm-lr", bench.opts.ngm_train.learning_rate)
        ->default_val(0.3);
    c->add_option("--epochs", bench.opts.classifier.epochs)->default_val(40);
    c->add_flag("--verbose", bench.opts.verbose, "progress to stderr");
  }

  try {
    app.parse(argc, argv);
    parallel::set_max_jobs(jobs);

    if (app.got_subcommand("collect-pairs")) return run_collect(collect);
    if (app.got_subcommand("extract-confusions")) return run_extract(extract);
    if (app.got_subcommand("build-rs-table")) return run_rs(rs);
    if (app.got_subcommand("per")) {
      if (per.pairs.empty() && (per.orig.empty() || per.gen.empty())) {
        throw CLI::RequiredError("--orig and --gen (or --pairs)");
      }
      return run_per(per);
    }
    if (app.got_subcommand("train-ngm")) {
      tng.seed = tng_seed;
      return run_train_ngm(tng);
    }
    if (app.got_subcommand("generate")) {
      if (gen.text.empty() && gen.input.empty()) {
        throw CLI::RequiredError("--text or --input");
      }
      return run_generate(gen);
    }
    if (app.got_subcommand("augment")) return run_augment(aug);
    if (app.got_subcommand("train-slu")) return run_train_slu(tslu);
    if (app.got_subcommand("eval-slu")) return run_eval_slu(eslu);
    if (app.got_subcommand("make-synth")) return run_make_synth(synth);
    if (app.got_subcommand("benchmark")) return run_benchmark(bench);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0 is --help, anything else a usage error
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
