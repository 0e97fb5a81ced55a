// include/asrnoise/jsonl.hpp

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

#ifndef ASRNOISE_JSONL_HPP_
#define ASRNOISE_JSONL_HPP_

#include <string>
#include <vector>

#include "asrnoise/augmentor.hpp"
#include "asrnoise/corpus.hpp"

namespace asrnoise {

// Line-oriented JSON corpora. Schemas:
//   pairs:    {"clean": "...", "noisy": "..."}
//   keyed:    {"id": "...", "text": "..."}
//   examples: {"text": "..."} or {"text": "...", "labels": ["..."]};
//             augmented lines additionally carry
//             {"augmented": true, "method": "...", "per": ...,
//              "source_index": ...}
// Malformed lines raise std::runtime_error with the offending line number.

std::vector<CleanNoisyPair> read_pairs_jsonl(const std::string& path);
void write_pairs_jsonl(const std::string& path,
                       const std::vector<CleanNoisyPair>& pairs);

std::vector<KeyedText> read_keyed_jsonl(const std::string& path);

std::vector<LabeledExample> read_examples_jsonl(const std::string& path);
void write_examples_jsonl(const std::string& path,
                          const std::vector<LabeledExample>& examples);

void write_augmented_jsonl(const std::string& path,
                           const std::vector<AugmentOutputLine>& lines);

}  // namespace asrnoise

#endif  // ASRNOISE_JSONL_HPP_
