// src/jsonl.cpp

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

#include "asrnoise/jsonl.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace asrnoise {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("jsonl: cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw std::runtime_error("jsonl: " + path + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const Json::exception& e) {
      throw std::runtime_error("jsonl: " + path + ":" +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("jsonl: cannot write " + path);
  return out;
}

}  // namespace

std::vector<CleanNoisyPair> read_pairs_jsonl(const std::string& path) {
  std::vector<CleanNoisyPair> pairs;
  for_each_line(path, [&](const Json& j) {
    pairs.push_back({j.at("clean").get<std::string>(),
                     j.at("noisy").get<std::string>()});
  });
  return pairs;
}

void write_pairs_jsonl(const std::string& path,
                       const std::vector<CleanNoisyPair>& pairs) {
  std::ofstream out = open_out(path);
  for (const CleanNoisyPair& p : pairs) {
    OrderedJson j;
    j["clean"] = p.clean;
    j["noisy"] = p.noisy;
    out << j.dump() << '\n';
  }
}

std::vector<KeyedText> read_keyed_jsonl(const std::string& path) {
  std::vector<KeyedText> items;
  for_each_line(path, [&](const Json& j) {
    items.push_back(
        {j.at("id").get<std::string>(), j.at("text").get<std::string>()});
  });
  return items;
}

std::vector<LabeledExample> read_examples_jsonl(const std::string& path) {
  std::vector<LabeledExample> examples;
  for_each_line(path, [&](const Json& j) {
    LabeledExample ex;
    ex.text = j.at("text").get<std::string>();
    if (j.contains("labels")) {
      ex.labels = j.at("labels").get<std::vector<std::string>>();
    }
    examples.push_back(std::move(ex));
  });
  return examples;
}

void write_examples_jsonl(const std::string& path,
                          const std::vector<LabeledExample>& examples) {
  std::ofstream out = open_out(path);
  for (const LabeledExample& ex : examples) {
    OrderedJson j;
    j["text"] = ex.text;
    if (!ex.labels.empty()) j["labels"] = ex.labels;
    out << j.dump() << '\n';
  }
}

void write_augmented_jsonl(const std::string& path,
                           const std::vector<AugmentOutputLine>& lines) {
  std::ofstream out = open_out(path);
  for (const AugmentOutputLine& line : lines) {
    OrderedJson j;
    j["text"] = line.example.text;
    if (!line.example.labels.empty()) j["labels"] = line.example.labels;
    if (line.augmented) {
      j["augmented"] = true;
      j["method"] = augment_method_name(line.method);
      j["per"] = line.per;
      j["source_index"] = line.source_index;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace asrnoise
