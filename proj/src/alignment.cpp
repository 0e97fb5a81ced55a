// src/alignment.cpp

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

#include "asrnoise/alignment.hpp"

#include <algorithm>

namespace asrnoise {

const char* edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::kMatch:
      return "match";
    case EditKind::kSubstitute:
      return "sub";
    case EditKind::kInsert:
      return "ins";
    case EditKind::kDelete:
      return "del";
  }
  return "?";
}

int levenshtein_distance(std::span<const std::string> a,
                         std::span<const std::string> b) {
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return static_cast<int>(n);
  if (n == 0) return static_cast<int>(m);
  std::vector<int> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

AlignedPair align(std::vector<std::string> ref, std::vector<std::string> hyp) {
  const std::size_t m = ref.size(), n = hyp.size();
  // Full DP table; inputs here are sentences or phone strings, never huge.
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  std::vector<EditOp> ops;
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    const bool tokens_equal = i > 0 && j > 0 && ref[i - 1] == hyp[j - 1];
    if (tokens_equal && d[i - 1][j - 1] == d[i][j]) {
      ops.push_back({EditKind::kMatch, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && d[i - 1][j - 1] + 1 == d[i][j]) {
      ops.push_back({EditKind::kSubstitute, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && d[i - 1][j] + 1 == d[i][j]) {
      ops.push_back({EditKind::kDelete, ref[i - 1], std::nullopt});
      --i;
    } else {
      ops.push_back({EditKind::kInsert, std::nullopt, hyp[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());

  AlignedPair out;
  out.ops = std::move(ops);
  out.distance = d[m][n];
  out.ref = std::move(ref);
  out.hyp = std::move(hyp);
  return out;
}

}  // namespace asrnoise
