// src/experiment.cpp

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

#include "asrnoise/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>

#include "asrnoise/parallel.hpp"
#include "json.hpp"

namespace asrnoise {

RobustnessReport robustness_experiment(
    const std::vector<Condition>& conditions,
    const std::vector<LabeledExample>& clean_test,
    const std::vector<LabeledExample>& noisy_test, const ClassifierConfig& cfg,
    int runs, const Rng& rng) {
  if (runs < 1) throw std::invalid_argument("robustness: runs must be >= 1");
  struct RunResult {
    double clean_acc = 0.0, noisy_acc = 0.0, noisy_f1 = 0.0;
  };
  const std::size_t total = conditions.size() * static_cast<std::size_t>(runs);
  std::vector<RunResult> results(total);
  parallel::parallel_for(total, [&](std::size_t i) {
    const std::size_t c = i / runs;
    Rng run_rng = rng.substream(i);
    const Classifier model =
        Classifier::train(conditions[c].train, cfg, run_rng);
    results[i].clean_acc = evaluate(model, clean_test).accuracy;
    const EvalMetrics noisy = evaluate(model, noisy_test);
    results[i].noisy_acc = noisy.accuracy;
    results[i].noisy_f1 = noisy.f1;
  });

  RobustnessReport report;
  report.runs = runs;
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    ConditionResult cr;
    cr.name = conditions[c].name;
    cr.train_size = conditions[c].train.size();
    for (int r = 0; r < runs; ++r) {
      const RunResult& rr = results[c * runs + r];
      cr.clean_accuracy += rr.clean_acc;
      cr.noisy_accuracy += rr.noisy_acc;
      cr.noisy_f1 += rr.noisy_f1;
      cr.noisy_accuracy_runs.push_back(rr.noisy_acc);
    }
    cr.clean_accuracy /= runs;
    cr.noisy_accuracy /= runs;
    cr.noisy_f1 /= runs;
    report.conditions.push_back(std::move(cr));
  }
  return report;
}

namespace {
bool has_condition(const RobustnessReport& report, const std::string& name) {
  for (const ConditionResult& c : report.conditions) {
    if (c.name == name) return true;
  }
  return false;
}
}  // namespace

std::string format_report_table(const RobustnessReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %8s %12s %12s %10s\n", "condition",
                "train", "clean-acc", "noisy-acc", "noisy-f1");
  out += line;
  out += std::string(63, '-') + "\n";
  for (const ConditionResult& c : report.conditions) {
    std::snprintf(line, sizeof line, "%-18s %8zu %12.2f %12.2f %10.2f\n",
                  c.name.c_str(), c.train_size, 100.0 * c.clean_accuracy,
                  100.0 * c.noisy_accuracy, 100.0 * c.noisy_f1);
    out += line;
  }
  std::snprintf(line, sizeof line,
                "(accuracy and F1 in %%, means over %d runs)\n", report.runs);
  out += line;
  if (has_condition(report, "+noisy")) {
    out += "(+noisy is emulated: the channel's own outputs stand in for real "
           "ASR transcripts)\n";
  }
  return out;
}

std::string report_to_json(const RobustnessReport& report) {
  nlohmann::ordered_json j;
  j["runs"] = report.runs;
  if (has_condition(report, "+noisy")) {
    j["notes"] =
        "+noisy is emulated: the channel's own outputs stand in for real ASR "
        "transcripts";
  }
  nlohmann::ordered_json conditions = nlohmann::ordered_json::array();
  for (const ConditionResult& c : report.conditions) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["train_size"] = c.train_size;
    jc["clean_accuracy"] = c.clean_accuracy;
    jc["noisy_accuracy"] = c.noisy_accuracy;
    jc["noisy_f1"] = c.noisy_f1;
    jc["noisy_accuracy_runs"] = c.noisy_accuracy_runs;
    conditions.push_back(std::move(jc));
  }
  j["conditions"] = std::move(conditions);
  return j.dump(2);
}

namespace {

// Term frequencies over the dictionary vocabulary: 1 + count in the corpus,
// so rare-but-pronounceable words stay available as RS candidates.
std::vector<VocabEntry> rs_vocabulary(const PronouncingDict& dict,
                                      const std::vector<LabeledExample>& texts) {
  std::map<std::string, double> counts;
  for (const auto& [word, prons] : dict.entries()) {
    counts.emplace(to_lower_ascii(word), 1.0);
  }
  for (const LabeledExample& ex : texts) {
    for (const std::string& tok : tokenize(ex.text)) {
      auto it = counts.find(tok);
      if (it != counts.end()) it->second += 1.0;
    }
  }
  std::vector<VocabEntry> vocab;
  vocab.reserve(counts.size());
  for (const auto& [word, tf] : counts) vocab.push_back({word, tf});
  return vocab;
}

std::vector<LabeledExample> dataset_from_lines(
    const std::vector<AugmentOutputLine>& lines) {
  std::vector<LabeledExample> out;
  out.reserve(lines.size());
  for (const AugmentOutputLine& line : lines) out.push_back(line.example);
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const PronouncingDict& dict,
                              const BenchmarkOptions& opts) {
  const Rng root(opts.seed);
  BenchmarkResult result;

  const SyntheticChannel channel = default_channel();
  const SentenceTemplates templates = default_templates();
  const SentenceTemplates pair_templates = default_pair_templates();
  {
    Rng synth_rng = root.substream(0);
    result.data = make_synthetic_benchmark(channel, templates, opts.sizes,
                                           synth_rng, &pair_templates);
  }
  const SynthBenchmark& data = result.data;
  if (opts.verbose) {
    std::cerr << "benchmark: " << data.pairs.size() << " pairs, "
              << data.train.size() << " train, " << data.noisy_test.size()
              << " noisy test\n";
  }

  // The noise generator is trained once on the pair corpus and shared by the
  // NGM conditions.
  Rng ngm_rng = root.substream(1);
  TrainOptions ngm_train = opts.ngm_train;
  ngm_train.verbose = opts.verbose;
  const NgmModel ngm =
      train_ngm(opts.ngm, data.pairs, ngm_train, ngm_rng, nullptr,
                &result.ngm_stats);

  const ConfusionTable ss_table = extract_ss_table(data.pairs, opts.max_ngram);
  const ConfusionTable rs_table =
      build_rs_table(dict, rs_vocabulary(dict, data.train), opts.max_phone_edit);
  result.ss_table_size = ss_table.size();
  result.rs_table_size = rs_table.size();

  const EdaAugmenter eda(templates.vocabulary());

  auto augmented_condition = [&](AugmentMethod method, double threshold,
                                 std::uint64_t seed) {
    AugmentConfig cfg;
    cfg.method = method;
    cfg.per_threshold = threshold;
    cfg.seed = seed;
    cfg.substitute_proportion = opts.substitute_proportion;
    if (method == AugmentMethod::kNgm) {
      cfg.n_candidates = opts.ngm_candidates;
      cfg.generation = opts.generation;
    } else {
      cfg.n_candidates = opts.n_aug;
    }
    cfg.n_aug = opts.n_aug;
    AugmentResources res;
    res.dict = &dict;
    res.table = method == AugmentMethod::kRs
                    ? &rs_table
                    : (method == AugmentMethod::kSs ? &ss_table : nullptr);
    res.model = method == AugmentMethod::kNgm ? &ngm : nullptr;
    res.eda = method == AugmentMethod::kEda ? &eda : nullptr;
    return dataset_from_lines(augment_corpus(data.train, cfg, res).lines);
  };

  std::vector<Condition> conditions;
  conditions.push_back({"clean", data.train});

  {
    // "+noisy" emulation: the channel's own outputs stand in for real ASR
    // transcripts of the training audio.
    Rng noisy_rng = root.substream(2);
    std::vector<LabeledExample> with_noisy = data.train;
    for (const LabeledExample& ex : data.train) {
      for (int k = 0; k < opts.n_aug; ++k) {
        with_noisy.push_back(
            {channel.apply_text(ex.text, noisy_rng), ex.labels});
      }
    }
    conditions.push_back({"+noisy", std::move(with_noisy)});
  }

  const double inf = std::numeric_limits<double>::infinity();
  conditions.push_back(
      {"+eda", augmented_condition(AugmentMethod::kEda, inf, root.substream(3).seed())});
  conditions.push_back(
      {"+rs", augmented_condition(AugmentMethod::kRs, opts.per_threshold,
                                  root.substream(4).seed())});
  conditions.push_back(
      {"+ss", augmented_condition(AugmentMethod::kSs, opts.per_threshold,
                                  root.substream(5).seed())});
  // Both NGM conditions share one seed so the candidate pools coincide and
  // only the PER filter differs.
  const std::uint64_t ngm_seed = root.substream(6).seed();
  conditions.push_back(
      {"+ngm", augmented_condition(AugmentMethod::kNgm, opts.per_threshold,
                                   ngm_seed)});
  conditions.push_back(
      {"+ngm-unfiltered", augmented_condition(AugmentMethod::kNgm, inf,
                                              ngm_seed)});

  result.report =
      robustness_experiment(conditions, data.test, data.noisy_test,
                            opts.classifier, opts.runs, root.substream(7));
  return result;
}

}  // namespace asrnoise
