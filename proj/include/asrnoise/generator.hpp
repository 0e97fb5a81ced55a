// include/asrnoise/generator.hpp

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

#ifndef ASRNOISE_GENERATOR_HPP_
#define ASRNOISE_GENERATOR_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "asrnoise/corpus.hpp"
#include "asrnoise/rng.hpp"
#include "asrnoise/tensor.hpp"

namespace asrnoise {

/// Word-level vocabulary with four reserved ids. Surface tokens are unique
/// and ordered; unknown tokens map to kUnk.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumReserved = 4;

  Vocab();

  /// Frequency-capped vocabulary over the tokenized texts: tokens with
  /// count >= min_freq, most frequent first (ties alphabetical), truncated
  /// to max_size including the reserved ids.
  static Vocab build(const std::vector<std::string>& texts, int max_size,
                     int min_freq = 1);
  static Vocab from_tokens(std::vector<std::string> surface_tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_[id]; }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Tokenizes and maps to ids (OOV -> kUnk).
  std::vector<int> encode(std::string_view text) const;
  /// Joins the surface forms of ids with single spaces.
  std::string decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct NgmConfig {
  int n_layers = 2;
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 256;
  int context_window = 128;
  int vocab_size = 0;
  /// When set, the loss covers only tokens after [SEP]; the default scores
  /// the full sequence including the clean prefix.
  bool loss_on_noisy_only = false;

  int d_head() const { return d_model / n_heads; }
  void validate() const;  // throws std::invalid_argument on bad dimensions
};

/// Per-layer weights. Attention projections are stored per head, each
/// [d_model x d_head]; the head output projection is applied transposed.
struct LayerParams {
  std::vector<Matrix> wq, wk, wv, wo;
  Matrix w1;                // [d x d_ff]
  std::vector<double> b1;   // [d_ff]
  Matrix w2;                // [d_ff x d]
  std::vector<double> b2;   // [d]
  std::vector<double> ln1_gain, ln1_bias;  // [d]
  std::vector<double> ln2_gain, ln2_bias;  // [d]
};

struct TensorView {
  std::string name;
  double* data;
  std::size_t size;
};
struct ConstTensorView {
  std::string name;
  const double* data;
  std::size_t size;
};

/// All trainable tensors. The output projection is tied to the token
/// embedding (logits = h . wte^T), so wte receives gradient from both ends.
struct NgmParams {
  Matrix wte;  // [vocab_size x d]
  Matrix wpe;  // [context_window x d]
  std::vector<LayerParams> layers;

  void allocate(const NgmConfig& cfg);
  void init(const NgmConfig& cfg, Rng& rng, double stddev);
  void zero();

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

class NgmDecoder;

/// Desk-scale decoder-only transformer noise generator. Causal multi-head
/// attention with 1/sqrt(d_head) scaling, GeLU feed-forward, pre-norm
/// residual blocks, learned position embeddings, tied output projection.
class NgmModel {
 public:
  NgmModel() = default;
  NgmModel(NgmConfig cfg, Vocab vocab, Rng& rng, double init_stddev = 0.02);

  const NgmConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  NgmParams& params() { return params_; }
  const NgmParams& params() const { return params_; }

  /// Logits for every position, [n x vocab_size]. Row i is the score of the
  /// token following ids[0..i].
  Matrix logits(std::span<const int> ids) const;
  /// Softmax of logits(); every row sums to 1.
  Matrix predictive_distributions(std::span<const int> ids) const;

  /// Mean of -log p(x_i | x_<i) over the scored positions (all of them, or
  /// only those after [SEP] when loss_on_noisy_only). Requires
  /// 2 <= |ids| <= context_window.
  double nll_loss(std::span<const int> ids) const;
  /// Same loss; accumulates parameter gradients into `grads`.
  double nll_loss_and_grad(std::span<const int> ids, NgmParams& grads) const;

  /// Number of positions the loss averages over for this sequence.
  int scored_positions(std::span<const int> ids) const;

  // Spec-level building blocks on an explicit [n x d] input, exposed so the
  // equations can be checked directly against naive oracles.
  Matrix attention_head(const Matrix& x, int layer, int head) const;
  Matrix mha(const Matrix& x, int layer) const;
  Matrix ffn(const Matrix& x, int layer) const;
  Matrix transformer_block(const Matrix& x, int layer) const;

  void save(const std::string& path) const;
  static NgmModel load(const std::string& path);

 private:
  friend class NgmDecoder;
  struct ForwardCache;
  void forward(std::span<const int> ids, ForwardCache& cache) const;
  void check_sequence(std::span<const int> ids) const;
  int loss_row_start(std::span<const int> ids) const;

  NgmConfig cfg_;
  Vocab vocab_;
  NgmParams params_;
};

/// Incremental decoding state (cached keys/values per layer and head), for
/// token-by-token generation. Produces the same distributions as the full
/// forward pass.
class NgmDecoder {
 public:
  explicit NgmDecoder(const NgmModel& model);
  /// Feeds one token and returns the distribution over the next token after
  /// dividing logits by `temperature`.
  std::vector<double> step(int token_id, double temperature = 1.0);
  int size() const { return n_; }

 private:
  const NgmModel* model_;
  int n_ = 0;
  // [layer][head], packed rows of d_head values.
  std::vector<std::vector<std::vector<double>>> keys_, values_;
};

/// Indices of the smallest probability-sorted prefix whose mass reaches
/// top_p (ties toward lower index). Always contains the argmax.
std::vector<int> nucleus_set(std::span<const double> probs, double top_p);
/// Draws from the renormalized nucleus.
int sample_nucleus(std::span<const double> probs, double top_p, Rng& rng);

struct GenerationConfig {
  double top_p = 0.9;
  double temperature = 1.0;
  int max_new_tokens = 64;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  std::string text;
  std::vector<int> token_ids;  // sampled ids, [EOS] excluded
  bool truncated = false;      // [EOS] never sampled within the budget
};

/// Feeds `clean [SEP]` and samples token-by-token until [EOS],
/// max_new_tokens, or a full context window. The clean text must tokenize to
/// fewer than context_window - 2 tokens.
GenerationResult generate(const NgmModel& model, std::string_view clean,
                          const GenerationConfig& cfg, Rng& rng);
GenerationResult generate(const NgmModel& model, std::string_view clean,
                          const GenerationConfig& cfg);

/// Figure-style training sequence `clean [SEP] noisy [EOS]`, or nullopt when
/// it does not fit the context window.
std::optional<std::vector<int>> encode_training_sequence(
    const Vocab& vocab, const CleanNoisyPair& pair, int context_window);

struct TrainOptions {
  int steps = 2000;
  int batch_size = 16;
  double learning_rate = 0.3;
  double momentum = 0.9;
  double grad_clip = 1.0;  // global L2 norm; 0 disables
  int checkpoint_every = 100;
  double dev_fraction = 0.1;  // carved from the pairs when no dev set given
  int vocab_max_size = 8192;
  int vocab_min_freq = 1;
  double init_stddev = 0.02;
  bool verbose = false;
};

struct TrainStats {
  std::vector<std::pair<int, double>> train_loss;      // (step, batch loss)
  std::vector<std::pair<int, double>> dev_perplexity;  // (step, perplexity)
  double best_dev_perplexity = 0.0;
  int best_step = -1;
  std::size_t skipped_too_long = 0;
};

/// Mini-batch SGD with momentum and linear learning-rate decay over
/// `clean [SEP] noisy [EOS]` sequences. Evaluates held-out perplexity at
/// step 0, every checkpoint_every steps and at the end, and returns the
/// checkpoint with the smallest perplexity. Throws on divergence (NaN loss)
/// or when no pair fits the context window.
NgmModel train_ngm(const NgmConfig& cfg,
                   const std::vector<CleanNoisyPair>& pairs,
                   const TrainOptions& opts, Rng& rng,
                   const std::vector<CleanNoisyPair>* dev_pairs = nullptr,
                   TrainStats* stats = nullptr);

/// exp(total nll / total predicted tokens) over the sequences.
double corpus_perplexity(const NgmModel& model,
                         const std::vector<std::vector<int>>& sequences);

}  // namespace asrnoise

#endif  // ASRNOISE_GENERATOR_HPP_
