// include/asrnoise/experiment.hpp

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

#ifndef ASRNOISE_EXPERIMENT_HPP_
#define ASRNOISE_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "asrnoise/augmentor.hpp"
#include "asrnoise/confusion.hpp"
#include "asrnoise/corpus.hpp"
#include "asrnoise/generator.hpp"
#include "asrnoise/lexicon.hpp"
#include "asrnoise/slu.hpp"
#include "asrnoise/synth.hpp"

namespace asrnoise {

struct Condition {
  std::string name;
  std::vector<LabeledExample> train;
};

struct ConditionResult {
  std::string name;
  std::size_t train_size = 0;
  double clean_accuracy = 0.0;  // mean over runs
  double noisy_accuracy = 0.0;
  double noisy_f1 = 0.0;
  std::vector<double> noisy_accuracy_runs;
};

struct RobustnessReport {
  int runs = 0;
  std::vector<ConditionResult> conditions;
};

/// Trains `runs` classifiers per condition (seeded substreams, independent
/// and scheduled on the worker pool), evaluates each on the clean and noisy
/// test sets, and reports per-condition means.
RobustnessReport robustness_experiment(
    const std::vector<Condition>& conditions,
    const std::vector<LabeledExample>& clean_test,
    const std::vector<LabeledExample>& noisy_test, const ClassifierConfig& cfg,
    int runs, const Rng& rng);

/// Fixed-width comparison table, one row per condition.
std::string format_report_table(const RobustnessReport& report);
/// The same report as a JSON document.
std::string report_to_json(const RobustnessReport& report);

struct BenchmarkOptions {
  SynthSizes sizes;
  int runs = 5;
  std::uint64_t seed = 1;
  int n_aug = 4;              // kept noisy samples per sentence
  int ngm_candidates = 5;     // generated pool before PER filtering
  double substitute_proportion = 0.1;
  double per_threshold = 1.0;
  int max_ngram = 3;
  int max_phone_edit = 2;
  NgmConfig ngm;
  TrainOptions ngm_train;
  GenerationConfig generation;
  ClassifierConfig classifier;
  bool verbose = false;

  BenchmarkOptions() {
    classifier.epochs = 40;
    ngm_train.steps = 1500;
    ngm_train.batch_size = 16;
    ngm_train.checkpoint_every = 250;
    generation.max_new_tokens = 24;
  }
};

struct BenchmarkResult {
  RobustnessReport report;
  TrainStats ngm_stats;
  std::size_t ss_table_size = 0;
  std::size_t rs_table_size = 0;
  SynthBenchmark data;
};

/// The end-to-end desk-scale comparison: builds the synthetic benchmark,
/// trains the noise generator on its pair corpus, extracts SS/RS tables,
/// augments the training split per method, and runs the robustness
/// experiment over the conditions clean / +noisy / +eda / +rs / +ss / +ngm /
/// +ngm-unfiltered. Deterministic for a fixed seed.
BenchmarkResult run_benchmark(const PronouncingDict& dict,
                              const BenchmarkOptions& opts);

}  // namespace asrnoise

#endif  // ASRNOISE_EXPERIMENT_HPP_
