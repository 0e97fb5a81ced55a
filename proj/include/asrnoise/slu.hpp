// include/asrnoise/slu.hpp

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

#ifndef ASRNOISE_SLU_HPP_
#define ASRNOISE_SLU_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asrnoise/corpus.hpp"
#include "asrnoise/rng.hpp"

namespace asrnoise {

enum class ClassifierMode { kSoftmax, kOneVsAll };

struct ClassifierConfig {
  int dim = 20;             // word vector dimension
  int n_buckets = 1 << 18;  // feature hashing space for uni+bigrams
  int epochs = 20;
  double lr = 0.5;
  ClassifierMode mode = ClassifierMode::kSoftmax;
  double threshold = 0.5;   // one-vs-all acceptance probability
  int max_predictions = 3;  // one-vs-all cap

  void validate() const;
};

/// Linear bag-of-features intent classifier: averaged embeddings of hashed
/// unigram + bigram features into a linear output layer, trained by
/// per-example SGD with a linearly decaying rate. Softmax mode predicts one
/// intent; one-vs-all mode scores each intent independently.
class Classifier {
 public:
  /// When `epoch_losses` is given it receives the mean per-example training
  /// loss of each epoch (measured before the example's update).
  static Classifier train(const std::vector<LabeledExample>& data,
                          const ClassifierConfig& cfg, Rng& rng,
                          std::vector<double>* epoch_losses = nullptr);

  /// (label, score) for every intent, in label order. Softmax scores sum to
  /// one; one-vs-all scores are independent probabilities.
  std::vector<std::pair<std::string, double>> scores(
      std::string_view text) const;

  /// Softmax mode: the argmax intent. One-vs-all mode: intents above the
  /// threshold, best first, capped at max_predictions; when none clears the
  /// threshold, the single top-scoring intent.
  std::vector<std::string> predict(std::string_view text) const;

  const std::vector<std::string>& labels() const { return labels_; }
  ClassifierMode mode() const { return cfg_.mode; }
  const ClassifierConfig& config() const { return cfg_; }

  /// Hashed unigram + bigram bucket ids for a text (exposed for tests).
  static std::vector<std::uint32_t> features(std::string_view text,
                                             int n_buckets);

  void save(const std::string& path) const;
  static Classifier load(const std::string& path);

 private:
  std::vector<double> raw_scores(std::string_view text) const;

  ClassifierConfig cfg_;
  std::vector<std::string> labels_;       // sorted
  std::vector<double> embedding_;         // [n_buckets x dim]
  std::vector<double> output_;            // [dim x n_labels]
};

struct EvalMetrics {
  double accuracy = 0.0;  // exact match (softmax) or Sorower accuracy (ova)
  double f1 = 0.0;        // Sorower example-based F1
  std::size_t count = 0;
  bool multilabel = false;
};

/// Single-label: exact-match accuracy. Multi-label: per-sample Jaccard
/// accuracy |Y∩Z|/|Y∪Z| and example F1 2|Y∩Z|/(|Y|+|Z|), averaged.
EvalMetrics evaluate(const Classifier& model,
                     const std::vector<LabeledExample>& test);

}  // namespace asrnoise

#endif  // ASRNOISE_SLU_HPP_
