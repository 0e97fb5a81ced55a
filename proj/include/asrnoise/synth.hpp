// include/asrnoise/synth.hpp

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

#ifndef ASRNOISE_SYNTH_HPP_
#define ASRNOISE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrnoise/corpus.hpp"
#include "asrnoise/rng.hpp"

namespace asrnoise {

struct ChannelSub {
  std::string replacement;  // empty means the word is dropped
  double prob = 0.0;
};

/// Ground-truth word-level noise source for the desk-scale benchmark. Per
/// token, one uniform draw partitions the events: deletion, then word
/// substitution (probability mass per source word), then identity; a filler
/// word may be inserted after each surviving position. The marginal
/// substitution rate of a word equals its configured mass exactly.
struct SyntheticChannel {
  std::unordered_map<std::string, std::vector<ChannelSub>> substitutions;
  double deletion_prob = 0.0;
  double insertion_prob = 0.0;
  std::vector<std::string> insertion_words;

  void validate() const;  // probabilities in [0,1], per-token mass <= 1
  std::vector<std::string> apply(const std::vector<std::string>& tokens,
                                 Rng& rng) const;
  std::string apply_text(std::string_view text, Rng& rng) const;

  std::string to_json() const;
  static SyntheticChannel from_json(const std::string& text);
};

/// Command-style sentence patterns per intent; {slot} tokens are filled from
/// the slot table.
struct SentenceTemplates {
  struct Intent {
    std::string name;
    std::vector<std::string> patterns;
  };
  std::vector<Intent> intents;
  std::unordered_map<std::string, std::vector<std::string>> slots;

  LabeledExample sample(Rng& rng) const;
  /// Every distinct surface word reachable from the templates.
  std::vector<std::string> vocabulary() const;
};

struct SynthSizes {
  int n_pairs = 4000;
  int n_train = 2000;
  int n_dev = 300;
  int n_test = 500;
};

struct SynthBenchmark {
  std::vector<CleanNoisyPair> pairs;  // exact matches already filtered
  std::vector<LabeledExample> train, dev, test;
  std::vector<LabeledExample> noisy_test;  // channel applied to test texts
};

/// Draws templated sentences, runs them through the channel, and assembles
/// the clean-noisy pair corpus plus SLU train/dev/test splits with a noisy
/// test variant. Pair generation skips channel outputs identical to their
/// source. When `pair_templates` is given, the pair corpus is drawn from
/// that second domain (the "speech corpus") instead of the task templates,
/// so a noise model must generalize the channel to unseen sentences.
SynthBenchmark make_synthetic_benchmark(
    const SyntheticChannel& channel, const SentenceTemplates& templates,
    const SynthSizes& sizes, Rng& rng,
    const SentenceTemplates* pair_templates = nullptr);

/// The built-in ASR-style channel and 8-intent template set used by the
/// shipped benchmark.
SyntheticChannel default_channel();
SentenceTemplates default_templates();
/// Narrative sentences over the same vocabulary, used as the speech-corpus
/// domain for clean-noisy pair collection. Covers every task-template word.
SentenceTemplates default_pair_templates();

}  // namespace asrnoise

#endif  // ASRNOISE_SYNTH_HPP_
