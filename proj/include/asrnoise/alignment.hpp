// include/asrnoise/alignment.hpp

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

#ifndef ASRNOISE_ALIGNMENT_HPP_
#define ASRNOISE_ALIGNMENT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asrnoise {

enum class EditKind { kMatch, kSubstitute, kInsert, kDelete };

const char* edit_kind_name(EditKind kind);

/// One step of an alignment path. Match/Substitute carry both tokens,
/// Insert carries only the hypothesis token, Delete only the reference
/// token. Match implies ref_token == hyp_token.
struct EditOp {
  EditKind kind;
  std::optional<std::string> ref_token;
  std::optional<std::string> hyp_token;
};

/// An optimal unit-cost alignment between two token sequences. Projecting
/// ops onto the reference side reproduces `ref` exactly, likewise for `hyp`;
/// distance equals the number of non-Match ops and is minimal.
struct AlignedPair {
  std::vector<std::string> ref;
  std::vector<std::string> hyp;
  std::vector<EditOp> ops;
  int distance = 0;
};

/// Minimal unit-cost (ins = del = sub = 1) edit distance. Symmetric.
int levenshtein_distance(std::span<const std::string> a,
                         std::span<const std::string> b);

/// One optimal alignment path. Equal-cost paths are broken deterministically,
/// preferring Match > Substitute > Delete > Insert during backtrace, so
/// confusion counts are stable across runs.
AlignedPair align(std::vector<std::string> ref, std::vector<std::string> hyp);

}  // namespace asrnoise

#endif  // ASRNOISE_ALIGNMENT_HPP_
