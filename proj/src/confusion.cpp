// src/confusion.cpp

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

#include "asrnoise/confusion.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "asrnoise/alignment.hpp"
#include "asrnoise/parallel.hpp"

namespace asrnoise {

void ConfusionTable::add(const std::string& source, const std::string& candidate,
                         double weight) {
  if (weight <= 0.0) {
    throw std::invalid_argument("confusion: weight must be positive");
  }
  if (candidate == source) {
    throw std::invalid_argument(
        "confusion: candidate may not equal its source");
  }
  if (candidate.empty() && kind_ == TableKind::kRs) {
    throw std::invalid_argument("confusion: RS tables never delete");
  }
  auto& list = entries_[source];
  for (ConfusionCandidate& c : list) {
    if (c.text == candidate) {
      c.weight += weight;
      return;
    }
  }
  list.push_back({candidate, weight});
  std::size_t source_tokens = tokenize(source).size();
  max_source_tokens_ = std::max(max_source_tokens_, source_tokens);
}

const std::vector<ConfusionCandidate>* ConfusionTable::candidates(
    const std::string& source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> ConfusionTable::sample(const std::string& source,
                                                  Rng& rng) const {
  const auto* list = candidates(source);
  if (list == nullptr || list->empty()) return std::nullopt;
  double total = 0.0;
  for (const ConfusionCandidate& c : *list) total += c.weight;
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (const ConfusionCandidate& c : *list) {
    cum += c.weight;
    if (u < cum) return c.text;
  }
  return list->back().text;  // u landed on the rounding edge
}

double ConfusionTable::total_weight() const {
  double total = 0.0;
  for (const auto& [source, list] : entries_) {
    for (const ConfusionCandidate& c : list) total += c.weight;
  }
  return total;
}

std::vector<std::string> ConfusionTable::sources() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [source, list] : entries_) keys.push_back(source);
  std::sort(keys.begin(), keys.end());
  return keys;
}

void ConfusionTable::canonicalize() {
  for (auto& [source, list] : entries_) {
    std::sort(list.begin(), list.end(),
              [](const ConfusionCandidate& a, const ConfusionCandidate& b) {
                if (a.weight != b.weight) return a.weight > b.weight;
                return a.text < b.text;
              });
  }
}

namespace {

std::string format_weight(double w) {
  std::ostringstream out;
  out.precision(17);
  if (w == static_cast<double>(static_cast<long long>(w))) {
    out << static_cast<long long>(w);
  } else {
    out << w;
  }
  return out.str();
}

}  // namespace

void ConfusionTable::save_tsv(std::ostream& out) const {
  for (const std::string& source : sources()) {
    for (const ConfusionCandidate& c : entries_.at(source)) {
      out << source << '\t' << (c.text.empty() ? kEmptyMarker : c.text.c_str())
          << '\t' << format_weight(c.weight) << '\n';
    }
  }
}

void ConfusionTable::save_tsv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("confusion: cannot write " + path);
  save_tsv(out);
}

ConfusionTable ConfusionTable::load_tsv(std::istream& in, TableKind kind) {
  ConfusionTable table(kind);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos
                               ? std::string::npos
                               : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw std::runtime_error("confusion: bad TSV row at line " +
                               std::to_string(line_no));
    }
    const std::string source = line.substr(0, t1);
    std::string candidate = line.substr(t1 + 1, t2 - t1 - 1);
    if (candidate == kEmptyMarker) candidate.clear();
    const std::string weight_text = line.substr(t2 + 1);
    double weight = 0.0;
    auto [ptr, ec] = std::from_chars(
        weight_text.data(), weight_text.data() + weight_text.size(), weight);
    if (ec != std::errc{} || weight <= 0.0) {
      throw std::runtime_error("confusion: bad weight at line " +
                               std::to_string(line_no));
    }
    table.add(source, candidate, weight);
  }
  return table;
}

ConfusionTable ConfusionTable::load_tsv_file(const std::string& path,
                                             TableKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("confusion: cannot open " + path);
  return load_tsv(in, kind);
}

ConfusionTable extract_ss_table(const std::vector<CleanNoisyPair>& pairs,
                                int max_ngram, int min_count) {
  if (max_ngram < 1) throw std::invalid_argument("extract_ss: max_ngram >= 1");
  // (source, candidate) -> count. An ordered map keeps accumulation and
  // table construction independent of pair order hashing.
  std::map<std::pair<std::string, std::string>, long long> counts;
  for (const CleanNoisyPair& pair : pairs) {
    const AlignedPair aligned =
        align(tokenize(pair.clean), tokenize(pair.noisy));
    std::vector<std::string> ref_run, hyp_run;
    auto flush_run = [&]() {
      if (ref_run.empty() && hyp_run.empty()) return;
      const bool countable = !ref_run.empty() &&
                             ref_run.size() <= static_cast<std::size_t>(max_ngram);
      if (countable) {
        std::string source = join_tokens(ref_run);
        std::string candidate = join_tokens(hyp_run);
        if (source != candidate) {
          ++counts[{std::move(source), std::move(candidate)}];
        }
      }
      ref_run.clear();
      hyp_run.clear();
    };
    for (const EditOp& op : aligned.ops) {
      if (op.kind == EditKind::kMatch) {
        flush_run();
        continue;
      }
      if (op.ref_token) ref_run.push_back(*op.ref_token);
      if (op.hyp_token) hyp_run.push_back(*op.hyp_token);
    }
    flush_run();
  }

  ConfusionTable table(TableKind::kSs);
  for (const auto& [key, count] : counts) {
    if (count < min_count) continue;
    table.add(key.first, key.second, static_cast<double>(count));
  }
  table.canonicalize();
  return table;
}

ConfusionTable build_rs_table(const PronouncingDict& dict,
                              const std::vector<VocabEntry>& vocab,
                              int max_phone_edit) {
  if (max_phone_edit < 1) {
    throw std::invalid_argument("build_rs: max_phone_edit >= 1");
  }
  // Keep the vocab words that have a pronunciation; first duplicate wins.
  struct Word {
    const VocabEntry* entry;
    PhonemeSequence phones;
  };
  std::vector<Word> words;
  {
    std::unordered_map<std::string, bool> seen;
    for (const VocabEntry& e : vocab) {
      if (e.term_frequency <= 0.0) {
        throw std::invalid_argument("build_rs: term frequencies must be positive");
      }
      if (seen.contains(e.word)) continue;
      seen.emplace(e.word, true);
      const auto* prons = dict.lookup(e.word);
      if (prons == nullptr) continue;  // OOV vocab words are skipped
      words.push_back({&e, prons->front()});
    }
  }

  // All-pairs phone distances; each row is independent.
  std::vector<std::vector<ConfusionCandidate>> rows(words.size());
  parallel::parallel_for(words.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (j == i) continue;
      if (levenshtein_distance(words[i].phones, words[j].phones) <
          max_phone_edit) {
        rows[i].push_back(
            {words[j].entry->word, words[j].entry->term_frequency});
      }
    }
  });

  ConfusionTable table(TableKind::kRs);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (const ConfusionCandidate& c : rows[i]) {
      table.add(words[i].entry->word, c.text, c.weight);
    }
  }
  table.canonicalize();
  return table;
}

}  // namespace asrnoise
