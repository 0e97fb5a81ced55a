// include/asrnoise/confusion.hpp

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

#ifndef ASRNOISE_CONFUSION_HPP_
#define ASRNOISE_CONFUSION_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "asrnoise/corpus.hpp"
#include "asrnoise/lexicon.hpp"
#include "asrnoise/rng.hpp"

namespace asrnoise {

/// A replacement option for a source n-gram. An empty text means the source
/// is deleted (serialized as the literal "<EMPTY>"); deletions only occur in
/// statistically extracted tables.
struct ConfusionCandidate {
  std::string text;
  double weight = 0.0;  // strictly positive
};

enum class TableKind { kRs, kSs };

/// Substitution-candidate table: source n-gram (space-joined tokens) to a
/// weighted candidate list. Candidate weights are confusion counts (SS) or
/// term frequencies (RS). Immutable once built; concurrently readable.
class ConfusionTable {
 public:
  explicit ConfusionTable(TableKind kind) : kind_(kind) {}

  /// Accumulates weight onto (source, candidate). Throws on a non-positive
  /// weight, on candidate == source, or on an empty candidate in an RS table.
  void add(const std::string& source, const std::string& candidate,
           double weight);

  const std::vector<ConfusionCandidate>* candidates(
      const std::string& source) const;

  /// Draws a candidate for `source` with probability weight / total weight.
  /// Returns nullopt when the source has no entry; an empty string means the
  /// n-gram is deleted.
  std::optional<std::string> sample(const std::string& source,
                                    Rng& rng) const;

  TableKind kind() const { return kind_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_source_tokens() const { return max_source_tokens_; }
  double total_weight() const;

  /// Sources in sorted order (canonical iteration / serialization order).
  std::vector<std::string> sources() const;

  /// Sorts every candidate list by (weight desc, text asc). Builders call
  /// this once so that tables serialize and sample identically across runs.
  void canonicalize();

  /// TSV rows `source<TAB>candidate<TAB>weight`, deletion candidates encoded
  /// as `<EMPTY>`. Sources are written in sorted order.
  void save_tsv(std::ostream& out) const;
  void save_tsv_file(const std::string& path) const;
  static ConfusionTable load_tsv(std::istream& in, TableKind kind);
  static ConfusionTable load_tsv_file(const std::string& path, TableKind kind);

 private:
  TableKind kind_;
  std::unordered_map<std::string, std::vector<ConfusionCandidate>> entries_;
  std::size_t max_source_tokens_ = 0;
};

/// Builds the statistical confusion table: each pair is word-aligned, maximal
/// runs of consecutive non-Match ops become (ref n-gram -> hyp n-gram) events
/// (empty hyp side -> deletion), and events with 1..max_ngram source tokens
/// are counted across the corpus. Events whose two sides coincide and runs
/// with an empty ref side cannot be keyed and are not counted.
ConfusionTable extract_ss_table(const std::vector<CleanNoisyPair>& pairs,
                                int max_ngram, int min_count = 1);

struct VocabEntry {
  std::string word;
  double term_frequency = 0.0;
};

/// Builds the phonetic-neighbor table: for each vocab word w (skipping words
/// absent from the dictionary), candidates are the other vocab words whose
/// phone-sequence edit distance to w is strictly below max_phone_edit,
/// weighted by their term frequency. The all-pairs scan runs on the worker
/// pool; results are identical to the serial scan.
ConfusionTable build_rs_table(const PronouncingDict& dict,
                              const std::vector<VocabEntry>& vocab,
                              int max_phone_edit);

inline constexpr const char* kEmptyMarker = "<EMPTY>";

}  // namespace asrnoise

#endif  // ASRNOISE_CONFUSION_HPP_
