// src/generator.cpp

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

#include "asrnoise/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "asrnoise/parallel.hpp"
#include "asrnoise/text.hpp"

namespace asrnoise {

// ---------------------------------------------------------------------------
// Vocab

namespace {
const char* kReservedTokens[Vocab::kNumReserved] = {"[PAD]", "[UNK]", "[SEP]",
                                                    "[EOS]"};
}

Vocab::Vocab() {
  for (int i = 0; i < kNumReserved; ++i) {
    tokens_.emplace_back(kReservedTokens[i]);
    ids_.emplace(tokens_.back(), i);
  }
}

Vocab Vocab::build(const std::vector<std::string>& texts, int max_size,
                   int min_freq) {
  if (max_size < kNumReserved + 1) {
    throw std::invalid_argument("vocab: max_size too small");
  }
  std::unordered_map<std::string, long long> counts;
  for (const std::string& text : texts) {
    for (std::string& tok : tokenize(text)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, long long>> ranked(counts.begin(),
                                                        counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (const auto& [token, count] : ranked) {
    if (count < min_freq) break;
    if (vocab.size() >= max_size) break;
    vocab.ids_.emplace(token, vocab.size());
    vocab.tokens_.push_back(token);
  }
  return vocab;
}

Vocab Vocab::from_tokens(std::vector<std::string> surface_tokens) {
  if (surface_tokens.size() < kNumReserved) {
    throw std::invalid_argument("vocab: token list missing reserved ids");
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (surface_tokens[i] != kReservedTokens[i]) {
      throw std::invalid_argument("vocab: reserved ids out of order");
    }
  }
  Vocab vocab;
  vocab.tokens_ = std::move(surface_tokens);
  vocab.ids_.clear();
  for (int i = 0; i < static_cast<int>(vocab.tokens_.size()); ++i) {
    if (!vocab.ids_.emplace(vocab.tokens_[i], i).second) {
      throw std::invalid_argument("vocab: duplicate surface token");
    }
  }
  return vocab;
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> out;
  for (const std::string& tok : tokenize(text)) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(std::span<const int> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens_.at(ids[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config and parameters

void NgmConfig::validate() const {
  if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_ff < 1) {
    throw std::invalid_argument("ngm: all dimensions must be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("ngm: d_model must be divisible by n_heads");
  }
  if (context_window < 2) {
    throw std::invalid_argument("ngm: context_window must be >= 2");
  }
  if (vocab_size < Vocab::kNumReserved) {
    throw std::invalid_argument("ngm: vocab_size too small");
  }
}

// Zeroed storage; also the right starting point for gradient and momentum
// buffers (layer-norm gains included).
void NgmParams::allocate(const NgmConfig& cfg) {
  const int d = cfg.d_model, dh = cfg.d_head();
  wte = Matrix(cfg.vocab_size, d);
  wpe = Matrix(cfg.context_window, d);
  layers.assign(cfg.n_layers, LayerParams{});
  for (LayerParams& lp : layers) {
    lp.wq.assign(cfg.n_heads, Matrix(d, dh));
    lp.wk.assign(cfg.n_heads, Matrix(d, dh));
    lp.wv.assign(cfg.n_heads, Matrix(d, dh));
    lp.wo.assign(cfg.n_heads, Matrix(d, dh));
    lp.w1 = Matrix(d, cfg.d_ff);
    lp.b1.assign(cfg.d_ff, 0.0);
    lp.w2 = Matrix(cfg.d_ff, d);
    lp.b2.assign(d, 0.0);
    lp.ln1_gain.assign(d, 0.0);
    lp.ln1_bias.assign(d, 0.0);
    lp.ln2_gain.assign(d, 0.0);
    lp.ln2_bias.assign(d, 0.0);
  }
}

void NgmParams::init(const NgmConfig& cfg, Rng& rng, double stddev) {
  allocate(cfg);
  auto fill = [&](Matrix& m) {
    for (double& x : m.data) x = stddev * rng.normal();
  };
  fill(wte);
  fill(wpe);
  for (LayerParams& lp : layers) {
    for (int h = 0; h < cfg.n_heads; ++h) {
      fill(lp.wq[h]);
      fill(lp.wk[h]);
      fill(lp.wv[h]);
      fill(lp.wo[h]);
    }
    fill(lp.w1);
    fill(lp.w2);
    // biases start at zero, layer-norm gains at one
    std::fill(lp.ln1_gain.begin(), lp.ln1_gain.end(), 1.0);
    std::fill(lp.ln2_gain.begin(), lp.ln2_gain.end(), 1.0);
  }
}

void NgmParams::zero() {
  for (TensorView& t : tensors()) std::fill(t.data, t.data + t.size, 0.0);
}

std::vector<TensorView> NgmParams::tensors() {
  std::vector<TensorView> out;
  out.push_back({"wte", wte.data.data(), wte.size()});
  out.push_back({"wpe", wpe.data.data(), wpe.size()});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerParams& lp = layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < lp.wq.size(); ++h) {
      const std::string hs = std::to_string(h);
      out.push_back({prefix + "wq" + hs, lp.wq[h].data.data(), lp.wq[h].size()});
      out.push_back({prefix + "wk" + hs, lp.wk[h].data.data(), lp.wk[h].size()});
      out.push_back({prefix + "wv" + hs, lp.wv[h].data.data(), lp.wv[h].size()});
      out.push_back({prefix + "wo" + hs, lp.wo[h].data.data(), lp.wo[h].size()});
    }
    out.push_back({prefix + "w1", lp.w1.data.data(), lp.w1.size()});
    out.push_back({prefix + "b1", lp.b1.data(), lp.b1.size()});
    out.push_back({prefix + "w2", lp.w2.data.data(), lp.w2.size()});
    out.push_back({prefix + "b2", lp.b2.data(), lp.b2.size()});
    out.push_back({prefix + "ln1_gain", lp.ln1_gain.data(), lp.ln1_gain.size()});
    out.push_back({prefix + "ln1_bias", lp.ln1_bias.data(), lp.ln1_bias.size()});
    out.push_back({prefix + "ln2_gain", lp.ln2_gain.data(), lp.ln2_gain.size()});
    out.push_back({prefix + "ln2_bias", lp.ln2_bias.data(), lp.ln2_bias.size()});
  }
  return out;
}

std::vector<ConstTensorView> NgmParams::tensors() const {
  std::vector<ConstTensorView> out;
  for (const TensorView& t : const_cast<NgmParams*>(this)->tensors()) {
    out.push_back({t.name, t.data, t.size});
  }
  return out;
}

std::size_t NgmParams::parameter_count() const {
  std::size_t n = 0;
  for (const ConstTensorView& t : tensors()) n += t.size;
  return n;
}

bool NgmParams::all_finite() const {
  for (const ConstTensorView& t : tensors()) {
    for (std::size_t i = 0; i < t.size; ++i) {
      if (!std::isfinite(t.data[i])) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Math helpers

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void layernorm_forward(const Matrix& x, const std::vector<double>& gain,
                       const std::vector<double>& bias, Matrix& out,
                       std::vector<double>& mean, std::vector<double>& rstd) {
  const int n = x.rows, d = x.cols;
  out = Matrix(n, d);
  mean.assign(n, 0.0);
  rstd.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xi[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= d;
    const double r = 1.0 / std::sqrt(var + kLnEps);
    mean[i] = mu;
    rstd[i] = r;
    double* oi = out.row(i);
    for (int j = 0; j < d; ++j) oi[j] = gain[j] * (xi[j] - mu) * r + bias[j];
  }
}

// Accumulates dx into x_grad and parameter grads into gain/bias grads.
void layernorm_backward(const Matrix& x, const std::vector<double>& mean,
                        const std::vector<double>& rstd,
                        const std::vector<double>& gain, const Matrix& dout,
                        Matrix& x_grad, std::vector<double>& gain_grad,
                        std::vector<double>& bias_grad) {
  const int n = x.rows, d = x.cols;
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    const double* doi = dout.row(i);
    double* dxi = x_grad.row(i);
    const double mu = mean[i], r = rstd[i];
    double dxhat_mean = 0.0, dxhat_xhat_mean = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xi[j] - mu) * r;
      const double dxhat = doi[j] * gain[j];
      dxhat_mean += dxhat;
      dxhat_xhat_mean += dxhat * xhat;
      gain_grad[j] += doi[j] * xhat;
      bias_grad[j] += doi[j];
    }
    dxhat_mean /= d;
    dxhat_xhat_mean /= d;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xi[j] - mu) * r;
      const double dxhat = doi[j] * gain[j];
      dxi[j] += r * (dxhat - dxhat_mean - xhat * dxhat_xhat_mean);
    }
  }
}

// Row-wise softmax over the causal prefix j <= i; masked entries are exact
// zeros.
void causal_softmax(Matrix& scores) {
  const int n = scores.rows;
  for (int i = 0; i < n; ++i) {
    double* row = scores.row(i);
    double mx = row[0];
    for (int j = 1; j <= i; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (int j = 0; j <= i; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (int j = 0; j <= i; ++j) row[j] /= total;
    for (int j = i + 1; j < n; ++j) row[j] = 0.0;
  }
}

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.row(i);
    for (int j = 0; j < m.cols; ++j) row[j] += bias[j];
  }
}

void add_colsum(const Matrix& m, std::vector<double>& out) {
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    for (int j = 0; j < m.cols; ++j) out[j] += row[j];
  }
}

void add_inplace(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward pass

struct NgmModel::ForwardCache {
  struct Layer {
    Matrix input;
    Matrix ln1_out;
    std::vector<double> ln1_mean, ln1_rstd;
    std::vector<Matrix> q, k, v;  // per head [n x dh]
    std::vector<Matrix> probs;    // per head [n x n]
    std::vector<Matrix> ctx;      // per head [n x dh]
    Matrix after_attn;
    Matrix ln2_out;
    std::vector<double> ln2_mean, ln2_rstd;
    Matrix ffn_pre;  // Z
    Matrix ffn_act;  // GeLU(Z)
  };
  std::vector<Layer> layers;
  Matrix final_hidden;
  Matrix logits;
  Matrix probs;
};

NgmModel::NgmModel(NgmConfig cfg, Vocab vocab, Rng& rng, double init_stddev)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  if (cfg_.vocab_size == 0) cfg_.vocab_size = vocab_.size();
  if (cfg_.vocab_size != vocab_.size()) {
    throw std::invalid_argument("ngm: config vocab_size != vocab size");
  }
  cfg_.validate();
  params_.init(cfg_, rng, init_stddev);
}

void NgmModel::check_sequence(std::span<const int> ids) const {
  if (ids.empty()) throw std::invalid_argument("ngm: empty sequence");
  if (static_cast<int>(ids.size()) > cfg_.context_window) {
    throw std::invalid_argument("ngm: sequence exceeds the context window");
  }
  for (int id : ids) {
    if (id < 0 || id >= cfg_.vocab_size) {
      throw std::invalid_argument("ngm: token id out of range");
    }
  }
}

void NgmModel::forward(std::span<const int> ids, ForwardCache& cache) const {
  check_sequence(ids);
  const int n = static_cast<int>(ids.size());
  const int d = cfg_.d_model, dh = cfg_.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    const double* te = params_.wte.row(ids[i]);
    const double* pe = params_.wpe.row(i);
    double* xi = x.row(i);
    for (int j = 0; j < d; ++j) xi[j] = te[j] + pe[j];
  }

  cache.layers.assign(cfg_.n_layers, ForwardCache::Layer{});
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const LayerParams& lp = params_.layers[l];
    ForwardCache::Layer& lc = cache.layers[l];
    lc.input = x;

    layernorm_forward(lc.input, lp.ln1_gain, lp.ln1_bias, lc.ln1_out,
                      lc.ln1_mean, lc.ln1_rstd);

    Matrix mha_out(n, d);
    lc.q.assign(cfg_.n_heads, Matrix());
    lc.k.assign(cfg_.n_heads, Matrix());
    lc.v.assign(cfg_.n_heads, Matrix());
    lc.probs.assign(cfg_.n_heads, Matrix());
    lc.ctx.assign(cfg_.n_heads, Matrix());
    for (int h = 0; h < cfg_.n_heads; ++h) {
      lc.q[h] = Matrix(n, dh);
      lc.k[h] = Matrix(n, dh);
      lc.v[h] = Matrix(n, dh);
      matmul(lc.ln1_out, lp.wq[h], lc.q[h]);
      matmul(lc.ln1_out, lp.wk[h], lc.k[h]);
      matmul(lc.ln1_out, lp.wv[h], lc.v[h]);
      Matrix scores(n, n);
      matmul_nt(lc.q[h], lc.k[h], scores);
      for (double& s : scores.data) s *= scale;
      causal_softmax(scores);
      lc.probs[h] = std::move(scores);
      lc.ctx[h] = Matrix(n, dh);
      matmul(lc.probs[h], lc.v[h], lc.ctx[h]);
      matmul_nt_acc(lc.ctx[h], lp.wo[h], mha_out);
    }

    lc.after_attn = lc.input;
    add_inplace(lc.after_attn, mha_out);

    layernorm_forward(lc.after_attn, lp.ln2_gain, lp.ln2_bias, lc.ln2_out,
                      lc.ln2_mean, lc.ln2_rstd);

    lc.ffn_pre = Matrix(n, cfg_.d_ff);
    matmul(lc.ln2_out, lp.w1, lc.ffn_pre);
    add_bias_rows(lc.ffn_pre, lp.b1);
    lc.ffn_act = lc.ffn_pre;
    for (double& z : lc.ffn_act.data) z = gelu(z);
    Matrix ffn_out(n, d);
    matmul(lc.ffn_act, lp.w2, ffn_out);
    add_bias_rows(ffn_out, lp.b2);

    x = lc.after_attn;
    add_inplace(x, ffn_out);
  }

  cache.final_hidden = std::move(x);
  cache.logits = Matrix(n, cfg_.vocab_size);
  matmul_nt(cache.final_hidden, params_.wte, cache.logits);

  cache.probs = cache.logits;
  for (int i = 0; i < n; ++i) {
    double* row = cache.probs.row(i);
    double mx = row[0];
    for (int j = 1; j < cfg_.vocab_size; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (int j = 0; j < cfg_.vocab_size; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (int j = 0; j < cfg_.vocab_size; ++j) row[j] /= total;
  }
}

Matrix NgmModel::logits(std::span<const int> ids) const {
  ForwardCache cache;
  forward(ids, cache);
  return std::move(cache.logits);
}

Matrix NgmModel::predictive_distributions(std::span<const int> ids) const {
  ForwardCache cache;
  forward(ids, cache);
  return std::move(cache.probs);
}

int NgmModel::loss_row_start(std::span<const int> ids) const {
  if (!cfg_.loss_on_noisy_only) return 0;
  const int n = static_cast<int>(ids.size());
  for (int i = 0; i + 1 < n; ++i) {
    if (ids[i] == Vocab::kSep) return i;
  }
  return 0;  // no separator: score the whole sequence
}

int NgmModel::scored_positions(std::span<const int> ids) const {
  return static_cast<int>(ids.size()) - 1 - loss_row_start(ids);
}

double NgmModel::nll_loss(std::span<const int> ids) const {
  if (ids.size() < 2) throw std::invalid_argument("ngm: loss needs >= 2 tokens");
  ForwardCache cache;
  forward(ids, cache);
  const int n = static_cast<int>(ids.size());
  const int start = loss_row_start(ids);
  const int n_pred = n - 1 - start;
  double total = 0.0;
  for (int i = start; i < n - 1; ++i) {
    total -= std::log(cache.probs.at(i, ids[i + 1]));
  }
  return total / n_pred;
}

double NgmModel::nll_loss_and_grad(std::span<const int> ids,
                                   NgmParams& grads) const {
  if (ids.size() < 2) throw std::invalid_argument("ngm: loss needs >= 2 tokens");
  ForwardCache cache;
  forward(ids, cache);
  const int n = static_cast<int>(ids.size());
  const int d = cfg_.d_model, dh = cfg_.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int start = loss_row_start(ids);
  const int n_pred = n - 1 - start;

  double total = 0.0;
  Matrix dlogits(n, cfg_.vocab_size);
  for (int i = start; i < n - 1; ++i) {
    const double* p = cache.probs.row(i);
    total -= std::log(p[ids[i + 1]]);
    double* dl = dlogits.row(i);
    const double inv = 1.0 / n_pred;
    for (int j = 0; j < cfg_.vocab_size; ++j) dl[j] = p[j] * inv;
    dl[ids[i + 1]] -= inv;
  }

  // Tied output projection: wte picks up gradient here and from the
  // embedding rows below.
  matmul_tn_acc(dlogits, cache.final_hidden, grads.wte);
  Matrix dx(n, d);
  matmul(dlogits, params_.wte, dx);

  for (int l = cfg_.n_layers - 1; l >= 0; --l) {
    const LayerParams& lp = params_.layers[l];
    LayerParams& lg = grads.layers[l];
    const ForwardCache::Layer& lc = cache.layers[l];

    // FFN branch: out = after_attn + GeLU(LN2(after_attn) W1 + b1) W2 + b2
    const Matrix& dout = dx;
    matmul_tn_acc(lc.ffn_act, dout, lg.w2);
    add_colsum(dout, lg.b2);
    Matrix dg(n, cfg_.d_ff);
    matmul_nt(dout, lp.w2, dg);
    for (std::size_t i = 0; i < dg.data.size(); ++i) {
      dg.data[i] *= gelu_grad(lc.ffn_pre.data[i]);
    }
    matmul_tn_acc(lc.ln2_out, dg, lg.w1);
    add_colsum(dg, lg.b1);
    Matrix db(n, d);
    matmul_nt(dg, lp.w1, db);

    Matrix dafter = dx;  // residual path
    layernorm_backward(lc.after_attn, lc.ln2_mean, lc.ln2_rstd, lp.ln2_gain,
                       db, dafter, lg.ln2_gain, lg.ln2_bias);

    // Attention branch: after_attn = input + sum_h ctx_h wo_h^T
    Matrix da(n, d);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      Matrix dctx(n, dh);
      matmul(dafter, lp.wo[h], dctx);
      matmul_tn_acc(dafter, lc.ctx[h], lg.wo[h]);

      Matrix dprobs(n, n);
      matmul_nt(dctx, lc.v[h], dprobs);
      Matrix dv(n, dh);
      matmul_tn(lc.probs[h], dctx, dv);

      // Softmax backward on the causal prefix of each row.
      Matrix dscores(n, n);
      for (int i = 0; i < n; ++i) {
        const double* pr = lc.probs[h].row(i);
        const double* dpr = dprobs.row(i);
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) dot += dpr[j] * pr[j];
        double* ds = dscores.row(i);
        for (int j = 0; j <= i; ++j) ds[j] = pr[j] * (dpr[j] - dot);
      }

      Matrix dq(n, dh);
      matmul(dscores, lc.k[h], dq);
      Matrix dk(n, dh);
      matmul_tn(dscores, lc.q[h], dk);
      for (double& g : dq.data) g *= scale;
      for (double& g : dk.data) g *= scale;

      matmul_nt_acc(dq, lp.wq[h], da);
      matmul_nt_acc(dk, lp.wk[h], da);
      matmul_nt_acc(dv, lp.wv[h], da);
      matmul_tn_acc(lc.ln1_out, dq, lg.wq[h]);
      matmul_tn_acc(lc.ln1_out, dk, lg.wk[h]);
      matmul_tn_acc(lc.ln1_out, dv, lg.wv[h]);
    }

    Matrix dinput = dafter;  // residual path
    layernorm_backward(lc.input, lc.ln1_mean, lc.ln1_rstd, lp.ln1_gain, da,
                       dinput, lg.ln1_gain, lg.ln1_bias);
    dx = std::move(dinput);
  }

  for (int i = 0; i < n; ++i) {
    const double* dxi = dx.row(i);
    double* te = grads.wte.row(ids[i]);
    double* pe = grads.wpe.row(i);
    for (int j = 0; j < d; ++j) {
      te[j] += dxi[j];
      pe[j] += dxi[j];
    }
  }

  return total / n_pred;
}

// ---------------------------------------------------------------------------
// Spec-level building blocks

Matrix NgmModel::attention_head(const Matrix& x, int layer, int head) const {
  if (x.cols != cfg_.d_model) {
    throw std::invalid_argument("attention_head: input width != d_model");
  }
  if (x.rows < 1 || x.rows > cfg_.context_window) {
    throw std::invalid_argument(
        "attention_head: rows exceed the context window");
  }
  const LayerParams& lp = params_.layers.at(layer);
  const int n = x.rows, dh = cfg_.d_head();
  Matrix q(n, dh), k(n, dh), v(n, dh);
  matmul(x, lp.wq.at(head), q);
  matmul(x, lp.wk.at(head), k);
  matmul(x, lp.wv.at(head), v);
  Matrix scores(n, n);
  matmul_nt(q, k, scores);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (double& s : scores.data) s *= scale;
  causal_softmax(scores);
  Matrix ctx(n, dh);
  matmul(scores, v, ctx);
  Matrix out(n, cfg_.d_model);
  matmul_nt(ctx, lp.wo.at(head), out);
  return out;
}

Matrix NgmModel::mha(const Matrix& x, int layer) const {
  Matrix out = attention_head(x, layer, 0);
  for (int h = 1; h < cfg_.n_heads; ++h) {
    add_inplace(out, attention_head(x, layer, h));
  }
  return out;
}

Matrix NgmModel::ffn(const Matrix& x, int layer) const {
  if (x.cols != cfg_.d_model) {
    throw std::invalid_argument("ffn: input width != d_model");
  }
  const LayerParams& lp = params_.layers.at(layer);
  Matrix z(x.rows, cfg_.d_ff);
  matmul(x, lp.w1, z);
  add_bias_rows(z, lp.b1);
  for (double& v : z.data) v = gelu(v);
  Matrix out(x.rows, cfg_.d_model);
  matmul(z, lp.w2, out);
  add_bias_rows(out, lp.b2);
  return out;
}

Matrix NgmModel::transformer_block(const Matrix& x, int layer) const {
  const LayerParams& lp = params_.layers.at(layer);
  Matrix ln1, ln2;
  std::vector<double> mean, rstd;
  layernorm_forward(x, lp.ln1_gain, lp.ln1_bias, ln1, mean, rstd);
  Matrix mid = x;
  add_inplace(mid, mha(ln1, layer));
  layernorm_forward(mid, lp.ln2_gain, lp.ln2_bias, ln2, mean, rstd);
  Matrix out = mid;
  add_inplace(out, ffn(ln2, layer));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'N', 'G', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::int32_t read_i32(std::istream& in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

}  // namespace

void NgmModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ngm: cannot write " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_i32(out, cfg_.n_layers);
  write_i32(out, cfg_.d_model);
  write_i32(out, cfg_.n_heads);
  write_i32(out, cfg_.d_ff);
  write_i32(out, cfg_.context_window);
  write_i32(out, cfg_.vocab_size);
  write_u32(out, cfg_.loss_on_noisy_only ? 1 : 0);
  write_u32(out, static_cast<std::uint32_t>(vocab_.size()));
  for (const std::string& token : vocab_.tokens()) write_string(out, token);
  const auto views = params_.tensors();
  write_u64(out, views.size());
  for (const ConstTensorView& t : views) {
    write_string(out, t.name);
    write_u64(out, t.size);
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.size * sizeof(double)));
  }
  if (!out) throw std::runtime_error("ngm: short write to " + path);
}

NgmModel NgmModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ngm: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("ngm: not a model checkpoint: " + path);
  }
  if (read_u32(in) != kVersion) {
    throw std::runtime_error("ngm: unsupported checkpoint version");
  }
  NgmModel model;
  model.cfg_.n_layers = read_i32(in);
  model.cfg_.d_model = read_i32(in);
  model.cfg_.n_heads = read_i32(in);
  model.cfg_.d_ff = read_i32(in);
  model.cfg_.context_window = read_i32(in);
  model.cfg_.vocab_size = read_i32(in);
  model.cfg_.loss_on_noisy_only = read_u32(in) != 0;
  model.cfg_.validate();
  const std::uint32_t n_tokens = read_u32(in);
  std::vector<std::string> tokens;
  tokens.reserve(n_tokens);
  for (std::uint32_t i = 0; i < n_tokens; ++i) tokens.push_back(read_string(in));
  model.vocab_ = Vocab::from_tokens(std::move(tokens));
  if (model.vocab_.size() != model.cfg_.vocab_size) {
    throw std::runtime_error("ngm: checkpoint vocab size mismatch");
  }
  model.params_.allocate(model.cfg_);
  const auto views = model.params_.tensors();
  if (read_u64(in) != views.size()) {
    throw std::runtime_error("ngm: checkpoint tensor count mismatch");
  }
  for (const TensorView& t : views) {
    if (read_string(in) != t.name || read_u64(in) != t.size) {
      throw std::runtime_error("ngm: checkpoint tensor layout mismatch");
    }
    in.read(reinterpret_cast<char*>(t.data),
            static_cast<std::streamsize>(t.size * sizeof(double)));
  }
  if (!in) throw std::runtime_error("ngm: truncated checkpoint: " + path);
  return model;
}

// ---------------------------------------------------------------------------
// Incremental decoding

NgmDecoder::NgmDecoder(const NgmModel& model) : model_(&model) {
  const NgmConfig& cfg = model.config();
  keys_.assign(cfg.n_layers,
               std::vector<std::vector<double>>(cfg.n_heads));
  values_.assign(cfg.n_layers,
                 std::vector<std::vector<double>>(cfg.n_heads));
}

std::vector<double> NgmDecoder::step(int token_id, double temperature) {
  const NgmConfig& cfg = model_->config();
  const NgmParams& p = model_->params();
  if (n_ >= cfg.context_window) {
    throw std::runtime_error("ngm: decoder context window exhausted");
  }
  if (token_id < 0 || token_id >= cfg.vocab_size) {
    throw std::invalid_argument("ngm: token id out of range");
  }
  const int d = cfg.d_model, dh = cfg.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<double> x(d);
  {
    const double* te = p.wte.row(token_id);
    const double* pe = p.wpe.row(n_);
    for (int j = 0; j < d; ++j) x[j] = te[j] + pe[j];
  }

  std::vector<double> a(d), scores, probs, ctx(dh), z(cfg.d_ff);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerParams& lp = p.layers[l];
    // LN1
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= d;
    double r = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < d; ++j) {
      a[j] = lp.ln1_gain[j] * (x[j] - mu) * r + lp.ln1_bias[j];
    }

    for (int h = 0; h < cfg.n_heads; ++h) {
      std::vector<double>& kc = keys_[l][h];
      std::vector<double>& vc = values_[l][h];
      const std::size_t base = kc.size();
      kc.resize(base + dh);
      vc.resize(base + dh);
      std::vector<double> q(dh, 0.0);
      for (int jj = 0; jj < dh; ++jj) {
        double qs = 0.0, ks = 0.0, vs = 0.0;
        for (int j = 0; j < d; ++j) {
          qs += a[j] * lp.wq[h].at(j, jj);
          ks += a[j] * lp.wk[h].at(j, jj);
          vs += a[j] * lp.wv[h].at(j, jj);
        }
        q[jj] = qs;
        kc[base + jj] = ks;
        vc[base + jj] = vs;
      }
      const int t_count = n_ + 1;
      scores.assign(t_count, 0.0);
      for (int t = 0; t < t_count; ++t) {
        double s = 0.0;
        const double* kt = kc.data() + static_cast<std::size_t>(t) * dh;
        for (int jj = 0; jj < dh; ++jj) s += q[jj] * kt[jj];
        scores[t] = s * scale;
      }
      double mx = scores[0];
      for (int t = 1; t < t_count; ++t) mx = std::max(mx, scores[t]);
      double total = 0.0;
      for (int t = 0; t < t_count; ++t) {
        scores[t] = std::exp(scores[t] - mx);
        total += scores[t];
      }
      std::fill(ctx.begin(), ctx.end(), 0.0);
      for (int t = 0; t < t_count; ++t) {
        const double w = scores[t] / total;
        const double* vt = vc.data() + static_cast<std::size_t>(t) * dh;
        for (int jj = 0; jj < dh; ++jj) ctx[jj] += w * vt[jj];
      }
      for (int j = 0; j < d; ++j) {
        double o = 0.0;
        const double* wo_row = lp.wo[h].row(j);
        for (int jj = 0; jj < dh; ++jj) o += ctx[jj] * wo_row[jj];
        x[j] += o;
      }
    }

    // LN2 + FFN
    mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    var = 0.0;
    for (int j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= d;
    r = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < d; ++j) {
      a[j] = lp.ln2_gain[j] * (x[j] - mu) * r + lp.ln2_bias[j];
    }
    for (int jj = 0; jj < cfg.d_ff; ++jj) {
      double s = lp.b1[jj];
      for (int j = 0; j < d; ++j) s += a[j] * lp.w1.at(j, jj);
      z[jj] = gelu(s);
    }
    for (int j = 0; j < d; ++j) {
      double s = lp.b2[j];
      for (int jj = 0; jj < cfg.d_ff; ++jj) s += z[jj] * lp.w2.at(jj, j);
      x[j] += s;
    }
  }
  ++n_;

  std::vector<double> dist(cfg.vocab_size);
  for (int t = 0; t < cfg.vocab_size; ++t) {
    double s = 0.0;
    const double* te = p.wte.row(t);
    for (int j = 0; j < d; ++j) s += x[j] * te[j];
    dist[t] = s / temperature;
  }
  double mx = dist[0];
  for (int t = 1; t < cfg.vocab_size; ++t) mx = std::max(mx, dist[t]);
  double total = 0.0;
  for (int t = 0; t < cfg.vocab_size; ++t) {
    dist[t] = std::exp(dist[t] - mx);
    total += dist[t];
  }
  for (int t = 0; t < cfg.vocab_size; ++t) dist[t] /= total;
  return dist;
}

// ---------------------------------------------------------------------------
// Nucleus sampling

std::vector<int> nucleus_set(std::span<const double> probs, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument("nucleus: top_p must be in (0, 1]");
  }
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  std::vector<int> kept;
  double cum = 0.0;
  for (int idx : order) {
    kept.push_back(idx);
    cum += probs[idx];
    if (cum >= top_p) break;
  }
  return kept;
}

int sample_nucleus(std::span<const double> probs, double top_p, Rng& rng) {
  const std::vector<int> kept = nucleus_set(probs, top_p);
  double total = 0.0;
  for (int idx : kept) total += probs[idx];
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (int idx : kept) {
    cum += probs[idx];
    if (u < cum) return idx;
  }
  return kept.back();
}

// ---------------------------------------------------------------------------
// Generation

GenerationResult generate(const NgmModel& model, std::string_view clean,
                          const GenerationConfig& cfg, Rng& rng) {
  if (!(cfg.top_p > 0.0 && cfg.top_p <= 1.0)) {
    throw std::invalid_argument("generate: top_p must be in (0, 1]");
  }
  if (!(cfg.temperature > 0.0)) {
    throw std::invalid_argument("generate: temperature must be positive");
  }
  const NgmConfig& mc = model.config();
  const std::vector<int> prompt = model.vocab().encode(clean);
  if (static_cast<int>(prompt.size()) >= mc.context_window - 2) {
    throw std::runtime_error("generate: prompt too long for context window");
  }

  GenerationResult result;
  if (cfg.max_new_tokens <= 0) {
    result.truncated = true;
    return result;
  }

  NgmDecoder decoder(model);
  std::vector<double> dist;
  for (int id : prompt) dist = decoder.step(id, cfg.temperature);
  dist = decoder.step(Vocab::kSep, cfg.temperature);

  while (true) {
    const int id = sample_nucleus(dist, cfg.top_p, rng);
    if (id == Vocab::kEos) break;
    result.token_ids.push_back(id);
    if (static_cast<int>(result.token_ids.size()) >= cfg.max_new_tokens ||
        decoder.size() >= mc.context_window) {
      result.truncated = true;
      break;
    }
    dist = decoder.step(id, cfg.temperature);
  }
  result.text = model.vocab().decode(result.token_ids);
  return result;
}

GenerationResult generate(const NgmModel& model, std::string_view clean,
                          const GenerationConfig& cfg) {
  Rng rng(cfg.seed);
  return generate(model, clean, cfg, rng);
}

// ---------------------------------------------------------------------------
// Training

std::optional<std::vector<int>> encode_training_sequence(
    const Vocab& vocab, const CleanNoisyPair& pair, int context_window) {
  std::vector<int> ids = vocab.encode(pair.clean);
  ids.push_back(Vocab::kSep);
  for (int id : vocab.encode(pair.noisy)) ids.push_back(id);
  ids.push_back(Vocab::kEos);
  if (static_cast<int>(ids.size()) > context_window) return std::nullopt;
  return ids;
}

double corpus_perplexity(const NgmModel& model,
                         const std::vector<std::vector<int>>& sequences) {
  double total_nll = 0.0;
  long long total_pred = 0;
  std::vector<double> nll(sequences.size(), 0.0);
  std::vector<int> pred(sequences.size(), 0);
  parallel::parallel_for(sequences.size(), [&](std::size_t i) {
    nll[i] = model.nll_loss(sequences[i]);
    pred[i] = model.scored_positions(sequences[i]);
  });
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    total_nll += nll[i] * pred[i];
    total_pred += pred[i];
  }
  return std::exp(total_nll / static_cast<double>(total_pred));
}

namespace {

void add_scaled(NgmParams& dst, const NgmParams& src, double s) {
  auto d = dst.tensors();
  auto sv = src.tensors();
  for (std::size_t t = 0; t < d.size(); ++t) {
    for (std::size_t i = 0; i < d[t].size; ++i) d[t].data[i] += s * sv[t].data[i];
  }
}

double global_norm(const NgmParams& p) {
  double sq = 0.0;
  for (const ConstTensorView& t : p.tensors()) {
    for (std::size_t i = 0; i < t.size; ++i) sq += t.data[i] * t.data[i];
  }
  return std::sqrt(sq);
}

void scale_params(NgmParams& p, double s) {
  for (TensorView& t : p.tensors()) {
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= s;
  }
}

}  // namespace

NgmModel train_ngm(const NgmConfig& cfg,
                   const std::vector<CleanNoisyPair>& pairs,
                   const TrainOptions& opts, Rng& rng,
                   const std::vector<CleanNoisyPair>* dev_pairs,
                   TrainStats* stats) {
  if (pairs.empty()) throw std::invalid_argument("train_ngm: no pairs");

  std::vector<std::string> texts;
  texts.reserve(pairs.size() * 2);
  for (const CleanNoisyPair& p : pairs) {
    texts.push_back(p.clean);
    texts.push_back(p.noisy);
  }
  Vocab vocab = Vocab::build(texts, opts.vocab_max_size, opts.vocab_min_freq);

  NgmConfig model_cfg = cfg;
  model_cfg.vocab_size = vocab.size();

  TrainStats local;
  std::vector<std::vector<int>> sequences;
  for (const CleanNoisyPair& p : pairs) {
    if (auto ids = encode_training_sequence(vocab, p, model_cfg.context_window)) {
      sequences.push_back(std::move(*ids));
    } else {
      ++local.skipped_too_long;
    }
  }
  if (sequences.empty()) {
    throw std::runtime_error("train_ngm: every pair exceeds the context window");
  }

  std::vector<std::vector<int>> dev;
  std::vector<std::vector<int>> train;
  if (dev_pairs != nullptr) {
    train = std::move(sequences);
    for (const CleanNoisyPair& p : *dev_pairs) {
      if (auto ids =
              encode_training_sequence(vocab, p, model_cfg.context_window)) {
        dev.push_back(std::move(*ids));
      }
    }
    if (dev.empty()) dev = train;
  } else if (opts.dev_fraction > 0.0 && sequences.size() >= 2) {
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t n_dev = static_cast<std::size_t>(
        opts.dev_fraction * static_cast<double>(sequences.size()) + 0.5);
    n_dev = std::clamp<std::size_t>(n_dev, 1, sequences.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_dev ? dev : train).push_back(std::move(sequences[order[i]]));
    }
  } else {
    train = std::move(sequences);
    dev = train;
  }

  NgmModel model(model_cfg, std::move(vocab), rng, opts.init_stddev);

  const int batch = std::max(1, std::min<int>(opts.batch_size,
                                              static_cast<int>(train.size())));
  NgmParams velocity, grad_total;
  velocity.allocate(model_cfg);
  grad_total.allocate(model_cfg);
  std::vector<NgmParams> grad_buf(batch);
  for (NgmParams& g : grad_buf) g.allocate(model_cfg);
  std::vector<double> batch_losses(batch, 0.0);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // trigger a shuffle on first use

  double best_ppl = corpus_perplexity(model, dev);
  int best_step = 0;
  NgmParams best = model.params();
  local.dev_perplexity.emplace_back(0, best_ppl);

  for (int step = 1; step <= opts.steps; ++step) {
    std::vector<std::size_t> batch_idx(batch);
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch_idx[b] = order[cursor++];
    }

    parallel::parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
      grad_buf[b].zero();
      batch_losses[b] =
          model.nll_loss_and_grad(train[batch_idx[b]], grad_buf[b]);
    });

    double loss = 0.0;
    for (int b = 0; b < batch; ++b) loss += batch_losses[b];
    loss /= batch;
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_ngm: diverged (non-finite loss) at step " +
                               std::to_string(step));
    }
    local.train_loss.emplace_back(step, loss);

    grad_total.zero();
    for (int b = 0; b < batch; ++b) {
      add_scaled(grad_total, grad_buf[b], 1.0 / batch);
    }
    if (opts.grad_clip > 0.0) {
      const double norm = global_norm(grad_total);
      if (norm > opts.grad_clip) {
        scale_params(grad_total, opts.grad_clip / norm);
      }
    }

    const double lr = opts.learning_rate *
                      (1.0 - static_cast<double>(step - 1) / opts.steps);
    {
      auto vel = velocity.tensors();
      auto grd = grad_total.tensors();
      auto par = model.params().tensors();
      for (std::size_t t = 0; t < vel.size(); ++t) {
        for (std::size_t i = 0; i < vel[t].size; ++i) {
          vel[t].data[i] = opts.momentum * vel[t].data[i] + grd[t].data[i];
          par[t].data[i] -= lr * vel[t].data[i];
        }
      }
    }

    const bool checkpoint =
        (opts.checkpoint_every > 0 && step % opts.checkpoint_every == 0) ||
        step == opts.steps;
    if (checkpoint) {
      if (!model.params().all_finite()) {
        throw std::runtime_error(
            "train_ngm: diverged (non-finite parameters) at step " +
            std::to_string(step));
      }
      const double ppl = corpus_perplexity(model, dev);
      local.dev_perplexity.emplace_back(step, ppl);
      if (ppl < best_ppl) {
        best_ppl = ppl;
        best_step = step;
        best = model.params();
      }
      if (opts.verbose) {
        std::cerr << "train_ngm: step " << step << " loss " << loss
                  << " dev ppl " << ppl << "\n";
      }
    }
  }

  model.params() = std::move(best);
  local.best_dev_perplexity = best_ppl;
  local.best_step = best_step;
  if (stats != nullptr) *stats = std::move(local);
  return model;
}

}  // namespace asrnoise
