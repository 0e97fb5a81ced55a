// src/lexicon.cpp

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

#include "asrnoise/lexicon.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "asrnoise/text.hpp"

namespace asrnoise {

namespace {

// Strips a trailing variant marker: "WORD(2)" -> "WORD". Returns the word
// unchanged when there is no "(digits)" suffix.
std::string strip_variant_suffix(const std::string& word, bool* is_variant) {
  *is_variant = false;
  if (word.size() < 4 || word.back() != ')') return word;
  const std::size_t open = word.rfind('(');
  if (open == std::string::npos || open == 0 || open + 2 == word.size()) {
    return word;  // no "(", nothing before it, or empty "()"
  }
  for (std::size_t i = open + 1; i + 1 < word.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(word[i]))) return word;
  }
  *is_variant = true;
  return word.substr(0, open);
}

}  // namespace

PronouncingDict PronouncingDict::parse(std::istream& in) {
  PronouncingDict dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind(";;;", 0) == 0) continue;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;  // blank line
    Pronunciation phones;
    std::string phone;
    while (fields >> phone) phones.push_back(phone);
    if (phones.empty()) {
      std::cerr << "lexicon: line " << line_no
                << ": no phones after word, skipped\n";
      ++dict.warnings_;
      continue;
    }
    bool is_variant = false;
    const std::string key =
        to_upper_ascii(strip_variant_suffix(word, &is_variant));
    auto& prons = dict.entries_[key];
    if (!is_variant && !prons.empty()) continue;  // duplicate primary
    prons.push_back(std::move(phones));
  }
  return dict;
}

PronouncingDict PronouncingDict::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("lexicon: cannot open " + path);
  return parse(in);
}

const std::vector<Pronunciation>* PronouncingDict::lookup(
    std::string_view word) const {
  auto it = entries_.find(to_upper_ascii(word));
  if (it == entries_.end()) return nullptr;
  return &it->second;
}

PhonemeSequence phone_transform(const PronouncingDict& dict,
                                std::string_view text) {
  PhonemeSequence phones;
  for (const std::string& token : tokenize(text)) {
    const auto* prons = dict.lookup(token);
    if (prons == nullptr) {
      phones.emplace_back(kUnkPhone);
    } else {
      const Pronunciation& first = prons->front();
      phones.insert(phones.end(), first.begin(), first.end());
    }
  }
  return phones;
}

}  // namespace asrnoise
