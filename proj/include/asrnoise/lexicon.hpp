// include/asrnoise/lexicon.hpp

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

#ifndef ASRNOISE_LEXICON_HPP_
#define ASRNOISE_LEXICON_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace asrnoise {

/// One pronunciation: an ordered list of phone symbols such as "AY1", "DH".
/// Stress digits are part of the symbol (AY1 != AY0).
using Pronunciation = std::vector<std::string>;

/// A phonetic sequence, the codomain of phone_transform(). May contain the
/// sentinel kUnkPhone, which counts as exactly one phone.
using PhonemeSequence = std::vector<std::string>;

inline constexpr const char* kUnkPhone = "UNK";

/// Pronouncing dictionary in cmudict text format. Immutable after parsing;
/// safe for concurrent reads.
class PronouncingDict {
 public:
  /// Parses cmudict-format text. Comment lines start with ";;;". Each entry
  /// line is `WORD  PH1 PH2 ...`; a `WORD(n)` suffix strips to WORD and
  /// appends an alternate pronunciation in listed order. A line with no
  /// phones after the word is skipped with a warning. Duplicate primary
  /// entries keep the first occurrence.
  static PronouncingDict parse(std::istream& in);
  static PronouncingDict parse_file(const std::string& path);

  /// All pronunciations for `word` in listed order, or nullptr when absent.
  /// Lookup is case-insensitive.
  const std::vector<Pronunciation>* lookup(std::string_view word) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t parse_warnings() const { return warnings_; }

  const std::unordered_map<std::string, std::vector<Pronunciation>>& entries()
      const {
    return entries_;
  }

 private:
  std::unordered_map<std::string, std::vector<Pronunciation>> entries_;
  std::size_t warnings_ = 0;
};

/// The Phone() transform: tokenizes `text` (lowercase, whitespace split,
/// edge punctuation stripped), maps each token to its first listed
/// pronunciation, and concatenates. Out-of-vocabulary tokens contribute the
/// single phone UNK. Total function; deterministic.
PhonemeSequence phone_transform(const PronouncingDict& dict,
                                std::string_view text);

}  // namespace asrnoise

#endif  // ASRNOISE_LEXICON_HPP_
