// include/asrnoise/text.hpp

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

#ifndef ASRNOISE_TEXT_HPP_
#define ASRNOISE_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace asrnoise {

/// How text is normalized before comparisons and lookups. The same policy
/// must be applied to both sides of any comparison.
struct NormalizationPolicy {
  bool lowercase = true;
  bool strip_punctuation = true;  // leading/trailing only; interior kept
};

/// Splits on whitespace, lowercases, and strips leading/trailing punctuation
/// from each token (per policy). Tokens that strip down to nothing are
/// dropped. A token with interior punctuation ("knot.dot") survives as one
/// token.
std::vector<std::string> tokenize(std::string_view text,
                                  const NormalizationPolicy& policy = {});

std::string join_tokens(const std::vector<std::string>& tokens);

std::string to_upper_ascii(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace asrnoise

#endif  // ASRNOISE_TEXT_HPP_
