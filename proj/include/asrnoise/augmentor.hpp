// include/asrnoise/augmentor.hpp

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

#ifndef ASRNOISE_AUGMENTOR_HPP_
#define ASRNOISE_AUGMENTOR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asrnoise/confusion.hpp"
#include "asrnoise/corpus.hpp"
#include "asrnoise/generator.hpp"
#include "asrnoise/lexicon.hpp"
#include "asrnoise/rng.hpp"

namespace asrnoise {

/// Phone Edit Rate: phone-level edit distance between original and generated
/// text, divided by the original's phone count. Returns nullopt when the
/// original has no phones (undefined denominator); callers drop or reject
/// such inputs.
std::optional<double> per_score(const PronouncingDict& dict,
                                std::string_view original,
                                std::string_view generated);

/// Scans tokens left to right; at each position, with the given probability,
/// replaces the longest table-matching n-gram starting there by a sampled
/// candidate (a deletion candidate removes the n-gram). Replaced spans are
/// not re-scanned. Positions without candidates stay unchanged.
std::string substitute_augment(const ConfusionTable& table,
                               std::string_view text, double proportion,
                               Rng& rng);

/// The generic insert/replace/drop/swap baseline. Applies one randomly
/// chosen operation at the usual intensity of one edit per ~10 tokens
/// (minimum one). Replacement and insertion words come from the supplied
/// corpus vocabulary rather than a synonym lexicon. Single-token inputs only
/// get insert/replace.
class EdaAugmenter {
 public:
  explicit EdaAugmenter(std::vector<std::string> vocabulary);
  std::string augment(std::string_view text, Rng& rng) const;
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
};

enum class AugmentMethod { kRs, kSs, kEda, kNgm };

const char* augment_method_name(AugmentMethod m);
std::optional<AugmentMethod> parse_augment_method(std::string_view name);

struct AugmentConfig {
  AugmentMethod method = AugmentMethod::kSs;
  int n_candidates = 5;
  int n_aug = 1;
  double substitute_proportion = 0.1;  // RS/SS only
  double per_threshold = 1.0;          // may be +infinity
  std::uint64_t seed = 0;
  GenerationConfig generation;  // NGM only

  void validate() const;  // throws std::invalid_argument
};

/// One scored candidate. `kept` implies per <= threshold at generation time;
/// both fields stay recomputable from the stored strings.
struct NoiseSample {
  std::string original;
  std::string generated;
  double per = 0.0;
  AugmentMethod method = AugmentMethod::kSs;
  bool kept = false;
};

struct AugmentResources {
  const PronouncingDict* dict = nullptr;  // always required
  const ConfusionTable* table = nullptr;  // RS/SS
  const NgmModel* model = nullptr;        // NGM
  const EdaAugmenter* eda = nullptr;      // EDA
};

/// One output line of the augmented dataset: either an original example or a
/// kept noisy sample carrying the original's labels.
struct AugmentOutputLine {
  LabeledExample example;
  bool augmented = false;
  double per = 0.0;
  std::size_t source_index = 0;
  AugmentMethod method = AugmentMethod::kSs;
};

struct AugmentResult {
  std::vector<AugmentOutputLine> lines;  // originals followed by their noise
  std::vector<NoiseSample> samples;      // every candidate, with kept flags
  std::size_t all_filtered = 0;  // inputs whose candidates were all rejected
  std::size_t bypassed = 0;      // inputs with empty Phone(original)
};

/// Per input sentence: generates n_candidates noisy candidates by the
/// configured method, scores each with per_score, rejects per > threshold,
/// uniformly selects up to n_aug survivors, and emits the original plus the
/// selected samples with labels preserved. Sentences whose Phone() is empty
/// bypass augmentation. Work is split across sentences on the worker pool;
/// each sentence draws from substream(seed, index), so output is identical
/// for any worker count.
AugmentResult augment_corpus(const std::vector<LabeledExample>& inputs,
                             const AugmentConfig& cfg,
                             const AugmentResources& resources);

}  // namespace asrnoise

#endif  // ASRNOISE_AUGMENTOR_HPP_
