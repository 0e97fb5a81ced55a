// src/augmentor.cpp

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

#include "asrnoise/augmentor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "asrnoise/alignment.hpp"
#include "asrnoise/parallel.hpp"
#include "asrnoise/text.hpp"

namespace asrnoise {

std::optional<double> per_score(const PronouncingDict& dict,
                                std::string_view original,
                                std::string_view generated) {
  const PhonemeSequence orig = phone_transform(dict, original);
  if (orig.empty()) return std::nullopt;
  const PhonemeSequence gen = phone_transform(dict, generated);
  return static_cast<double>(levenshtein_distance(orig, gen)) /
         static_cast<double>(orig.size());
}

std::string substitute_augment(const ConfusionTable& table,
                               std::string_view text, double proportion,
                               Rng& rng) {
  if (proportion < 0.0 || proportion > 1.0) {
    throw std::invalid_argument("substitute_augment: proportion in [0,1]");
  }
  const std::vector<std::string> tokens = tokenize(text);
  const std::size_t max_n =
      std::max<std::size_t>(1, table.max_source_tokens());
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (rng.uniform() >= proportion) {
      out.push_back(tokens[i]);
      ++i;
      continue;
    }
    // Longest table-matching n-gram starting here wins.
    std::size_t matched = 0;
    const std::vector<ConfusionCandidate>* entry = nullptr;
    std::string source;
    const std::size_t limit = std::min(max_n, tokens.size() - i);
    std::string probe;
    for (std::size_t n = 1; n <= limit; ++n) {
      if (n == 1) {
        probe = tokens[i];
      } else {
        probe += ' ';
        probe += tokens[i + n - 1];
      }
      if (const auto* c = table.candidates(probe)) {
        matched = n;
        entry = c;
        source = probe;
      }
    }
    if (entry == nullptr) {
      out.push_back(tokens[i]);
      ++i;
      continue;
    }
    const std::optional<std::string> candidate = table.sample(source, rng);
    if (candidate && !candidate->empty()) {
      for (std::string& tok : tokenize(*candidate)) out.push_back(std::move(tok));
    }
    // An empty candidate deletes the n-gram; either way the span is consumed
    // and never re-scanned.
    i += matched;
  }
  return join_tokens(out);
}

EdaAugmenter::EdaAugmenter(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {
  if (vocabulary_.empty()) {
    throw std::invalid_argument("eda: vocabulary must be non-empty");
  }
}

std::string EdaAugmenter::augment(std::string_view text, Rng& rng) const {
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) {
    throw std::invalid_argument("eda: text must have at least one token");
  }
  enum Op { kInsert, kReplace, kDrop, kSwap };
  // Drop and swap need two tokens to act on.
  const int n_ops = tokens.size() >= 2 ? 4 : 2;
  const Op op = static_cast<Op>(rng.uniform_index(n_ops));
  const std::size_t n_edits = std::max<std::size_t>(1, tokens.size() / 10);

  for (std::size_t e = 0; e < n_edits; ++e) {
    switch (op) {
      case kInsert: {
        const std::size_t pos = rng.uniform_index(tokens.size() + 1);
        tokens.insert(tokens.begin() + pos,
                      vocabulary_[rng.uniform_index(vocabulary_.size())]);
        break;
      }
      case kReplace: {
        const std::size_t pos = rng.uniform_index(tokens.size());
        tokens[pos] = vocabulary_[rng.uniform_index(vocabulary_.size())];
        break;
      }
      case kDrop: {
        if (tokens.size() < 2) break;  // never empty the sentence
        const std::size_t pos = rng.uniform_index(tokens.size());
        tokens.erase(tokens.begin() + pos);
        break;
      }
      case kSwap: {
        if (tokens.size() < 2) break;
        const std::size_t pos = rng.uniform_index(tokens.size() - 1);
        std::swap(tokens[pos], tokens[pos + 1]);
        break;
      }
    }
  }
  return join_tokens(tokens);
}

const char* augment_method_name(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::kRs:
      return "rs";
    case AugmentMethod::kSs:
      return "ss";
    case AugmentMethod::kEda:
      return "eda";
    case AugmentMethod::kNgm:
      return "ngm";
  }
  return "?";
}

std::optional<AugmentMethod> parse_augment_method(std::string_view name) {
  const std::string lower = to_lower_ascii(name);
  if (lower == "rs") return AugmentMethod::kRs;
  if (lower == "ss") return AugmentMethod::kSs;
  if (lower == "eda") return AugmentMethod::kEda;
  if (lower == "ngm") return AugmentMethod::kNgm;
  return std::nullopt;
}

void AugmentConfig::validate() const {
  if (n_candidates < 1) {
    throw std::invalid_argument("augment: n_candidates must be >= 1");
  }
  if (n_aug < 0 || n_aug > n_candidates) {
    throw std::invalid_argument("augment: need 0 <= n_aug <= n_candidates");
  }
  if (substitute_proportion < 0.0 || substitute_proportion > 1.0) {
    throw std::invalid_argument("augment: substitute_proportion in [0,1]");
  }
  if (std::isnan(per_threshold) || per_threshold < 0.0) {
    throw std::invalid_argument("augment: per_threshold must be >= 0");
  }
}

namespace {

struct SentenceOutput {
  std::vector<NoiseSample> samples;   // all candidates, kept flags set
  std::vector<std::size_t> selected;  // indices into samples, in draw order
  bool bypassed = false;
};

void check_resources(const AugmentConfig& cfg, const AugmentResources& res) {
  if (res.dict == nullptr) {
    throw std::invalid_argument("augment: pronouncing dictionary is required");
  }
  switch (cfg.method) {
    case AugmentMethod::kRs:
    case AugmentMethod::kSs:
      if (res.table == nullptr) {
        throw std::invalid_argument("augment: confusion table is required");
      }
      break;
    case AugmentMethod::kEda:
      if (res.eda == nullptr) {
        throw std::invalid_argument("augment: EDA augmenter is required");
      }
      break;
    case AugmentMethod::kNgm:
      if (res.model == nullptr) {
        throw std::invalid_argument("augment: generator model is required");
      }
      break;
  }
}

std::string make_candidate(const AugmentConfig& cfg,
                           const AugmentResources& res,
                           const std::string& text, Rng& rng) {
  switch (cfg.method) {
    case AugmentMethod::kRs:
    case AugmentMethod::kSs:
      return substitute_augment(*res.table, text, cfg.substitute_proportion,
                                rng);
    case AugmentMethod::kEda:
      return res.eda->augment(text, rng);
    case AugmentMethod::kNgm:
      return generate(*res.model, text, cfg.generation, rng).text;
  }
  return text;
}

SentenceOutput augment_sentence(const LabeledExample& input,
                                const AugmentConfig& cfg,
                                const AugmentResources& res, Rng rng) {
  SentenceOutput out;
  if (phone_transform(*res.dict, input.text).empty()) {
    out.bypassed = true;  // PER denominator undefined, emit unaugmented
    return out;
  }
  for (int c = 0; c < cfg.n_candidates; ++c) {
    NoiseSample sample;
    sample.original = input.text;
    sample.method = cfg.method;
    sample.generated = make_candidate(cfg, res, input.text, rng);
    const std::optional<double> per =
        per_score(*res.dict, sample.original, sample.generated);
    sample.per = *per;  // the original has phones, checked above
    sample.kept = sample.per <= cfg.per_threshold;
    out.samples.push_back(std::move(sample));
  }
  std::vector<std::size_t> survivors;
  for (std::size_t s = 0; s < out.samples.size(); ++s) {
    if (out.samples[s].kept) survivors.push_back(s);
  }
  // Uniform selection of up to n_aug survivors (partial Fisher-Yates).
  const std::size_t take = std::min<std::size_t>(cfg.n_aug, survivors.size());
  for (std::size_t t = 0; t < take; ++t) {
    const std::size_t pick = t + rng.uniform_index(survivors.size() - t);
    std::swap(survivors[t], survivors[pick]);
    out.selected.push_back(survivors[t]);
  }
  return out;
}

}  // namespace

AugmentResult augment_corpus(const std::vector<LabeledExample>& inputs,
                             const AugmentConfig& cfg,
                             const AugmentResources& resources) {
  cfg.validate();
  check_resources(cfg, resources);

  const Rng root(cfg.seed);
  std::vector<SentenceOutput> outputs(inputs.size());
  parallel::parallel_for(inputs.size(), [&](std::size_t i) {
    outputs[i] = augment_sentence(inputs[i], cfg, resources, root.substream(i));
  });

  AugmentResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const SentenceOutput& s = outputs[i];
    AugmentOutputLine original;
    original.example = inputs[i];
    original.source_index = i;
    original.method = cfg.method;
    result.lines.push_back(std::move(original));
    if (s.bypassed) {
      ++result.bypassed;
      continue;
    }
    if (s.selected.empty() && cfg.n_aug > 0) ++result.all_filtered;
    for (std::size_t idx : s.selected) {
      const NoiseSample& sample = s.samples[idx];
      AugmentOutputLine line;
      line.example.text = sample.generated;
      line.example.labels = inputs[i].labels;  // labels preserved verbatim
      line.augmented = true;
      line.per = sample.per;
      line.source_index = i;
      line.method = cfg.method;
      result.lines.push_back(std::move(line));
    }
    for (const NoiseSample& sample : s.samples) {
      result.samples.push_back(sample);
    }
  }
  return result;
}

}  // namespace asrnoise
