// include/asrnoise/corpus.hpp

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

#ifndef ASRNOISE_CORPUS_HPP_
#define ASRNOISE_CORPUS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "asrnoise/text.hpp"

namespace asrnoise {

/// A reference transcription paired with an ASR hypothesis for the same
/// audio. Pairs whose normalized token sequences are equal are filtered at
/// collection, so clean != noisy up to normalization.
struct CleanNoisyPair {
  std::string clean;
  std::string noisy;
};

/// A text sample with one or more intent labels. Unlabeled corpora use an
/// empty label list.
struct LabeledExample {
  std::string text;
  std::vector<std::string> labels;
};

/// A transcription or ASR output keyed by utterance id.
struct KeyedText {
  std::string id;
  std::string text;
};

struct CollectStats {
  std::size_t joined = 0;
  std::size_t dropped_equal = 0;
  std::size_t kept = 0;
  std::size_t unmatched_refs = 0;
  std::size_t unmatched_hyps = 0;
};

/// Joins references and hypotheses by utterance id, normalizes both sides per
/// policy, and keeps a pair (raw texts preserved) iff the normalized token
/// sequences differ. Ids present on only one side are counted and skipped.
std::vector<CleanNoisyPair> collect_pairs(const std::vector<KeyedText>& refs,
                                          const std::vector<KeyedText>& hyps,
                                          const NormalizationPolicy& policy,
                                          CollectStats* stats = nullptr);

}  // namespace asrnoise

#endif  // ASRNOISE_CORPUS_HPP_
