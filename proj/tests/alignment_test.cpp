// tests/alignment_test.cpp

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

#include "asrnoise/lexicon.hpp"
#include "asrnoise/rng.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace asrnoise;

namespace {

using Tokens = std::vector<std::string>;

// Independent full-DP-matrix oracle. Kept deliberately separate from the
// two-row implementation in the library.
int oracle_distance(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<int>> d(a.size() + 1,
                                  std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      const int del = d[i - 1][j] + 1;
      const int ins = d[i][j - 1] + 1;
      d[i][j] = std::min(sub, std::min(del, ins));
    }
  }
  return d[a.size()][b.size()];
}

Tokens random_tokens(Rng& rng, std::size_t max_len, int alphabet) {
  Tokens out;
  const std::size_t len = rng.uniform_index(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(std::string(1, static_cast<char>('a' + rng.uniform_index(alphabet))));
  }
  return out;
}

// Replays an op list against the reference side and returns the hypothesis
// it spells out.
Tokens replay(const std::vector<EditOp>& ops) {
  Tokens hyp;
  for (const EditOp& op : ops) {
    switch (op.kind) {
      case EditKind::kMatch:
      case EditKind::kSubstitute:
        hyp.push_back(*op.hyp_token);
        break;
      case EditKind::kInsert:
        hyp.push_back(*op.hyp_token);
        break;
      case EditKind::kDelete:
        break;
    }
  }
  return hyp;
}

Tokens ref_projection(const std::vector<EditOp>& ops) {
  Tokens ref;
  for (const EditOp& op : ops) {
    if (op.ref_token) ref.push_back(*op.ref_token);
  }
  return ref;
}

}  // namespace

TEST_CASE("levenshtein: one phone substitution in the knot sentence") {
  const PronouncingDict& dict = testutil::fixture_dict();
  const PhonemeSequence a =
      phone_transform(dict, "The priest tied the knot.");
  const PhonemeSequence b =
      phone_transform(dict, "The priest tied the night.");
  CHECK(levenshtein_distance(a, b) == 1);  // AA1 -> AY1
  CHECK(a.size() == 15);
}

TEST_CASE("levenshtein: identity and symmetry") {
  const Tokens a = {"x", "y", "z"};
  CHECK(levenshtein_distance(a, a) == 0);
  const Tokens b = {"x", "z"};
  CHECK(levenshtein_distance(a, b) == levenshtein_distance(b, a));
}

TEST_CASE("levenshtein: abc vs bcd") {
  const Tokens a = {"A", "B", "C"};
  const Tokens b = {"B", "C", "D"};
  CHECK(levenshtein_distance(a, b) == 2);
}

TEST_CASE("levenshtein: empty sequences") {
  const Tokens empty;
  const Tokens abc = {"a", "b", "c"};
  CHECK(levenshtein_distance(empty, empty) == 0);
  CHECK(levenshtein_distance(empty, abc) == 3);
  CHECK(levenshtein_distance(abc, empty) == 3);
}

TEST_CASE("align: single-token substitution") {
  const AlignedPair out = align({"good"}, {"could"});
  CHECK(out.distance == 1);
  REQUIRE(out.ops.size() == 1);
  CHECK(out.ops[0].kind == EditKind::kSubstitute);
  CHECK(*out.ops[0].ref_token == "good");
  CHECK(*out.ops[0].hyp_token == "could");
}

TEST_CASE("align: everything deleted") {
  const AlignedPair out = align({"what", "is"}, {});
  CHECK(out.distance == 2);
  REQUIRE(out.ops.size() == 2);
  CHECK(out.ops[0].kind == EditKind::kDelete);
  CHECK(out.ops[1].kind == EditKind::kDelete);
}

TEST_CASE("align: insertion in the middle") {
  const AlignedPair out = align({"a", "b", "c"}, {"a", "x", "b", "c"});
  CHECK(out.distance == 1);
  REQUIRE(out.ops.size() == 4);
  CHECK(out.ops[0].kind == EditKind::kMatch);
  CHECK(out.ops[1].kind == EditKind::kInsert);
  CHECK(*out.ops[1].hyp_token == "x");
  CHECK(out.ops[2].kind == EditKind::kMatch);
  CHECK(out.ops[3].kind == EditKind::kMatch);
}

TEST_CASE("align: distance matches the full-DP oracle on random pairs") {
  Rng rng(1234);
  for (int it = 0; it < 300; ++it) {
    const Tokens a = random_tokens(rng, 12, 5);
    const Tokens b = random_tokens(rng, 12, 5);
    const AlignedPair out = align(a, b);
    CHECK(out.distance == oracle_distance(a, b));
    CHECK(out.distance == levenshtein_distance(a, b));
  }
}

TEST_CASE("align: path replay reproduces both sides") {
  Rng rng(99);
  for (int it = 0; it < 300; ++it) {
    const Tokens a = random_tokens(rng, 10, 4);
    const Tokens b = random_tokens(rng, 10, 4);
    const AlignedPair out = align(a, b);
    CHECK(ref_projection(out.ops) == a);
    CHECK(replay(out.ops) == b);
    int non_match = 0;
    for (const EditOp& op : out.ops) {
      if (op.kind != EditKind::kMatch) ++non_match;
      if (op.kind == EditKind::kMatch) CHECK(*op.ref_token == *op.hyp_token);
    }
    CHECK(non_match == out.distance);
  }
}

TEST_CASE("levenshtein: triangle inequality and identity-of-indiscernibles") {
  Rng rng(555);
  for (int it = 0; it < 300; ++it) {
    const Tokens a = random_tokens(rng, 8, 3);
    const Tokens b = random_tokens(rng, 8, 3);
    const Tokens c = random_tokens(rng, 8, 3);
    const int ab = levenshtein_distance(a, b);
    const int bc = levenshtein_distance(b, c);
    const int ac = levenshtein_distance(a, c);
    CHECK(ac <= ab + bc);
    CHECK((ab == 0) == (a == b));
  }
}
