// src/corpus.cpp

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

#include "asrnoise/corpus.hpp"

#include <iostream>
#include <unordered_map>
#include <unordered_set>

namespace asrnoise {

std::vector<CleanNoisyPair> collect_pairs(const std::vector<KeyedText>& refs,
                                          const std::vector<KeyedText>& hyps,
                                          const NormalizationPolicy& policy,
                                          CollectStats* stats) {
  std::unordered_map<std::string, const KeyedText*> hyp_by_id;
  for (const KeyedText& h : hyps) {
    hyp_by_id.emplace(h.id, &h);  // first occurrence wins
  }

  CollectStats local;
  std::unordered_set<std::string> joined_ids;
  std::vector<CleanNoisyPair> pairs;
  for (const KeyedText& r : refs) {
    auto it = hyp_by_id.find(r.id);
    if (it == hyp_by_id.end()) {
      std::cerr << "collect_pairs: ref id '" << r.id
                << "' has no hypothesis, skipped\n";
      ++local.unmatched_refs;
      continue;
    }
    joined_ids.insert(r.id);
    ++local.joined;
    if (tokenize(r.text, policy) == tokenize(it->second->text, policy)) {
      ++local.dropped_equal;
      continue;
    }
    pairs.push_back({r.text, it->second->text});
    ++local.kept;
  }
  for (const KeyedText& h : hyps) {
    if (!joined_ids.contains(h.id)) {
      std::cerr << "collect_pairs: hyp id '" << h.id
                << "' has no reference, skipped\n";
      ++local.unmatched_hyps;
    }
  }
  if (stats != nullptr) *stats = local;
  return pairs;
}

}  // namespace asrnoise
