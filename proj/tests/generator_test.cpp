// tests/generator_test.cpp

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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"

using namespace asrnoise;

namespace {

Vocab toy_vocab(int n_surface) {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[SEP]", "[EOS]"};
  for (int i = 0; i < n_surface; ++i) {
    tokens.push_back("w" + std::to_string(i));
  }
  return Vocab::from_tokens(std::move(tokens));
}

NgmModel toy_model(int n_layers, int d_model, int n_heads, int d_ff,
                   int vocab_surface, std::uint64_t seed, int ctx = 32) {
  NgmConfig cfg;
  cfg.n_layers = n_layers;
  cfg.d_model = d_model;
  cfg.n_heads = n_heads;
  cfg.d_ff = d_ff;
  cfg.context_window = ctx;
  Rng rng(seed);
  return NgmModel(cfg, toy_vocab(vocab_surface), rng, 0.05);
}

Matrix random_input(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (double& v : x.data) v = rng.normal();
  return x;
}

// Plain matrix arithmetic oracle for one causal attention head, written
// without any of the library's kernels.
Matrix naive_attention_head(const Matrix& x, const Matrix& wq,
                            const Matrix& wk, const Matrix& wv,
                            const Matrix& wo) {
  const int n = x.rows, d = x.cols, dh = wq.cols;
  auto mul = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
      for (int j = 0; j < b.cols; ++j) {
        double s = 0.0;
        for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
        out.at(i, j) = s;
      }
    }
    return out;
  };
  const Matrix q = mul(x, wq), k = mul(x, wk), v = mul(x, wv);
  Matrix probs(n, n);
  for (int i = 0; i < n; ++i) {
    double mx = -1e300;
    std::vector<double> s(n, 0.0);
    for (int j = 0; j <= i; ++j) {
      double dot = 0.0;
      for (int t = 0; t < dh; ++t) dot += q.at(i, t) * k.at(j, t);
      s[j] = dot / std::sqrt(static_cast<double>(dh));
      mx = std::max(mx, s[j]);
    }
    double total = 0.0;
    for (int j = 0; j <= i; ++j) {
      s[j] = std::exp(s[j] - mx);
      total += s[j];
    }
    for (int j = 0; j <= i; ++j) probs.at(i, j) = s[j] / total;
  }
  const Matrix ctx = mul(probs, v);
  Matrix wot(dh, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < dh; ++j) wot.at(j, i) = wo.at(i, j);
  }
  return mul(ctx, wot);
}

}  // namespace

TEST_CASE("vocab: reserved ids, build order, unknown mapping") {
  const Vocab v = Vocab::build({"the cat sat", "the cat ran", "the dog"}, 64);
  CHECK(v.id("[PAD]") == Vocab::kPad);
  CHECK(v.id("[SEP]") == Vocab::kSep);
  CHECK(v.token(Vocab::kEos) == "[EOS]");
  CHECK(v.id("the") == Vocab::kNumReserved);  // most frequent first
  CHECK(v.id("zzz") == Vocab::kUnk);
  CHECK(v.decode(v.encode("the cat")) == "the cat");
}

TEST_CASE("vocab: frequency cap and min_freq") {
  const Vocab capped = Vocab::build({"a a a b b c"}, 6);
  CHECK(capped.size() == 6);  // 4 reserved + a + b
  CHECK(capped.id("c") == Vocab::kUnk);
  const Vocab filtered = Vocab::build({"a a a b b c"}, 64, 2);
  CHECK(filtered.id("c") == Vocab::kUnk);
  CHECK(filtered.id("b") != Vocab::kUnk);
}

TEST_CASE("attention_head: single position reduces to a projection") {
  const NgmModel model = toy_model(1, 8, 1, 16, 12, 21);
  const Matrix x = random_input(1, 8, 5);
  const Matrix out = model.attention_head(x, 0, 0);
  const LayerParams& lp = model.params().layers[0];
  const Matrix expect =
      naive_attention_head(x, lp.wq[0], lp.wk[0], lp.wv[0], lp.wo[0]);
  REQUIRE(out.rows == 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("attention_head: zero input gives zero output") {
  const NgmModel model = toy_model(1, 8, 2, 16, 12, 22);
  const Matrix x(3, 8);
  const Matrix out = model.attention_head(x, 0, 1);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("attention_head: matches the dense oracle on random input") {
  const NgmModel model = toy_model(2, 12, 3, 24, 12, 23);
  const Matrix x = random_input(3, 12, 77);
  for (int h = 0; h < 3; ++h) {
    const Matrix out = model.attention_head(x, 1, h);
    const LayerParams& lp = model.params().layers[1];
    const Matrix expect =
        naive_attention_head(x, lp.wq[h], lp.wk[h], lp.wv[h], lp.wo[h]);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      CHECK(out.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("attention_head: dimension errors") {
  const NgmModel model = toy_model(1, 8, 1, 16, 12, 24, /*ctx=*/4);
  CHECK_THROWS(model.attention_head(Matrix(5, 8), 0, 0));   // n > ctx
  CHECK_THROWS(model.attention_head(Matrix(2, 16), 0, 0));  // wrong width
}

TEST_CASE("mha: one head is exactly attention_head") {
  const NgmModel model = toy_model(1, 8, 1, 16, 12, 25);
  const Matrix x = random_input(4, 8, 9);
  const Matrix a = model.mha(x, 0);
  const Matrix b = model.attention_head(x, 0, 0);
  CHECK(a.data == b.data);
}

TEST_CASE("mha: sum over heads") {
  const NgmModel model = toy_model(1, 8, 2, 16, 12, 26);
  const Matrix x = random_input(4, 8, 10);
  const Matrix total = model.mha(x, 0);
  const Matrix h0 = model.attention_head(x, 0, 0);
  const Matrix h1 = model.attention_head(x, 0, 1);
  for (std::size_t i = 0; i < total.data.size(); ++i) {
    CHECK(total.data[i] ==
          doctest::Approx(h0.data[i] + h1.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("ffn: zero input with zero biases stays zero") {
  NgmModel model = toy_model(1, 8, 1, 16, 12, 27);
  for (double& b : model.params().layers[0].b1) b = 0.0;
  for (double& b : model.params().layers[0].b2) b = 0.0;
  const Matrix out = model.ffn(Matrix(3, 8), 0);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("transformer_block: output shape equals input shape") {
  const NgmModel model = toy_model(2, 8, 2, 16, 12, 28);
  for (int n = 1; n <= 8; ++n) {
    const Matrix x = random_input(n, 8, 100 + n);
    const Matrix out = model.transformer_block(x, 1);
    CHECK(out.rows == n);
    CHECK(out.cols == 8);
    for (double v : out.data) CHECK(std::isfinite(v));
  }
}

TEST_CASE("predictive distributions are softmax rows") {
  const NgmModel model = toy_model(2, 16, 4, 32, 20, 29);
  const std::vector<int> ids = {4, 5, 6, 2, 7, 3};
  const Matrix probs = model.predictive_distributions(ids);
  for (int i = 0; i < probs.rows; ++i) {
    double total = 0.0;
    for (int j = 0; j < probs.cols; ++j) {
      total += probs.at(i, j);
      CHECK(probs.at(i, j) >= 0.0);
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("nll_loss: uniform logits give ln(vocab_size)") {
  NgmModel model = toy_model(1, 8, 1, 16, 8, 30);
  // Zeroing the token embedding makes every logit h . 0 = 0, i.e. uniform.
  model.params().wte.zero();
  const std::vector<int> ids = {4, 5, 6, 7};
  CHECK(model.nll_loss(ids) ==
        doctest::Approx(std::log(model.vocab().size())).epsilon(1e-12));
}

TEST_CASE("nll_loss: near ln(vocab) at small-scale init, and non-negative") {
  const NgmModel model = toy_model(2, 16, 4, 32, 28, 31);
  Rng rng(6);
  const double expected = std::log(model.vocab().size());
  for (int it = 0; it < 10; ++it) {
    std::vector<int> ids;
    for (int i = 0; i < 12; ++i) {
      ids.push_back(static_cast<int>(rng.uniform_index(model.vocab().size())));
    }
    const double loss = model.nll_loss(ids);
    CHECK(loss >= 0.0);
    CHECK(std::abs(loss - expected) / expected < 0.05);
  }
}

TEST_CASE("nll_loss: sequence length limits") {
  const NgmModel model = toy_model(1, 8, 1, 16, 8, 32, /*ctx=*/6);
  CHECK_THROWS(model.nll_loss(std::vector<int>{4}));
  CHECK_THROWS(model.nll_loss(std::vector<int>{4, 5, 6, 7, 4, 5, 6}));
}

TEST_CASE("gradient check: analytic matches central finite differences") {
  // d=8, 1 layer, 1 head, vocab 12, double precision throughout.
  NgmModel model = toy_model(1, 8, 1, 16, 8, 33, /*ctx=*/12);
  REQUIRE(model.vocab().size() == 12);
  const std::vector<int> ids = {4, 7, 2, 9, 11, 3};

  NgmParams grads;
  grads.allocate(model.config());
  model.nll_loss_and_grad(ids, grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto views = model.params().tensors();
  auto gviews = grads.tensors();
  for (std::size_t t = 0; t < views.size(); ++t) {
    for (std::size_t i = 0; i < views[t].size; ++i) {
      const double saved = views[t].data[i];
      views[t].data[i] = saved + h;
      const double up = model.nll_loss(ids);
      views[t].data[i] = saved - h;
      const double down = model.nll_loss(ids);
      views[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = gviews[t].data[i];
      const double mag = std::max(std::abs(numeric), std::abs(analytic));
      // Central differences at h=1e-5 resolve ~1e-10 absolute; gradients
      // below 1e-5 are compared absolutely against a floor well above that
      // noise, everything else relatively.
      if (mag > 1e-5) {
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / mag);
      } else {
        CHECK(std::abs(numeric - analytic) < 1e-9);
      }
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("causality: perturbing a token leaves earlier rows untouched") {
  const NgmModel model = toy_model(2, 16, 4, 32, 24, 34);
  std::vector<int> ids = {4, 5, 6, 7, 8, 9, 10};
  const Matrix base = model.predictive_distributions(ids);
  for (std::size_t j = 1; j < ids.size(); ++j) {
    std::vector<int> perturbed = ids;
    perturbed[j] = perturbed[j] == 4 ? 5 : 4;
    const Matrix out = model.predictive_distributions(perturbed);
    for (std::size_t r = 0; r < j; ++r) {
      for (int c = 0; c < out.cols; ++c) {
        CHECK(out.at(r, c) == base.at(r, c));
      }
    }
    // The row that first sees the change must differ somewhere.
    bool changed = false;
    for (int c = 0; c < out.cols; ++c) {
      changed = changed || out.at(j, c) != base.at(j, c);
    }
    CHECK(changed);
  }
}

TEST_CASE("nucleus: minimal prefix, argmax membership, edge settings") {
  Rng rng(35);
  for (int it = 0; it < 200; ++it) {
    const int n = 2 + static_cast<int>(rng.uniform_index(30));
    std::vector<double> probs(n, 0.0);
    double total = 0.0;
    for (double& p : probs) {
      p = -std::log(1.0 - rng.uniform());
      total += p;
    }
    for (double& p : probs) p /= total;
    const double top_p = 0.05 + 0.95 * rng.uniform();
    const std::vector<int> kept = nucleus_set(probs, top_p);
    REQUIRE(!kept.empty());

    int argmax = 0;
    for (int i = 1; i < n; ++i) {
      if (probs[i] > probs[argmax]) argmax = i;
    }
    CHECK(std::find(kept.begin(), kept.end(), argmax) != kept.end());

    double mass = 0.0;
    for (int idx : kept) mass += probs[idx];
    CHECK(mass >= top_p - 1e-12);
    if (kept.size() > 1) {
      CHECK(mass - probs[kept.back()] < top_p);  // prefix is minimal
    }
  }
  // top_p = 1 keeps the whole distribution.
  const std::vector<double> probs = {0.5, 0.3, 0.2};
  CHECK(nucleus_set(probs, 1.0).size() == 3);
  // top_p -> 0 keeps only the argmax.
  CHECK(nucleus_set(probs, 1e-12) == std::vector<int>{0});
}

TEST_CASE("sample_nucleus: tiny top_p is greedy argmax") {
  const NgmModel model = toy_model(2, 16, 4, 32, 24, 36);
  Rng rng(1);
  for (int it = 0; it < 50; ++it) {
    NgmDecoder decoder(model);
    std::vector<double> dist;
    const int len = 1 + static_cast<int>(rng.uniform_index(6));
    for (int i = 0; i < len; ++i) {
      dist = decoder.step(
          static_cast<int>(rng.uniform_index(model.vocab().size())));
    }
    int argmax = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
      if (dist[i] > dist[argmax]) argmax = static_cast<int>(i);
    }
    CHECK(sample_nucleus(dist, 1e-12, rng) == argmax);
  }
}

TEST_CASE("decoder: incremental distributions match the full forward pass") {
  const NgmModel model = toy_model(2, 16, 4, 32, 24, 37);
  Rng rng(4);
  std::vector<int> ids;
  NgmDecoder decoder(model);
  for (int i = 0; i < 10; ++i) {
    ids.push_back(static_cast<int>(rng.uniform_index(model.vocab().size())));
    const std::vector<double> inc = decoder.step(ids.back());
    const Matrix full = model.predictive_distributions(ids);
    for (int c = 0; c < full.cols; ++c) {
      CHECK(inc[c] == doctest::Approx(full.at(ids.size() - 1, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("generate: fixed seed gives identical output") {
  const NgmModel model = toy_model(2, 16, 4, 32, 24, 38);
  GenerationConfig cfg;
  cfg.max_new_tokens = 12;
  cfg.seed = 909;
  const GenerationResult a = generate(model, "w0 w1 w2", cfg);
  const GenerationResult b = generate(model, "w0 w1 w2", cfg);
  CHECK(a.text == b.text);
  CHECK(a.token_ids == b.token_ids);
  CHECK(a.truncated == b.truncated);
}

TEST_CASE("generate: prompt length guard and truncation flag") {
  const NgmModel model = toy_model(1, 8, 1, 16, 12, 39, /*ctx=*/8);
  GenerationConfig cfg;
  cfg.max_new_tokens = 3;
  CHECK_THROWS(generate(model, "w0 w1 w2 w3 w4 w5 w6 w7", cfg));
  Rng rng(5);
  const GenerationResult out = generate(model, "w0 w1", cfg, rng);
  CHECK(static_cast<int>(out.token_ids.size()) <= cfg.max_new_tokens);
  if (static_cast<int>(out.token_ids.size()) == cfg.max_new_tokens) {
    CHECK(out.truncated);
  }
}

TEST_CASE("encode_training_sequence: clean [SEP] noisy [EOS]") {
  const Vocab v = toy_vocab(8);
  const auto ids = encode_training_sequence(v, {"w0 w1", "w2"}, 32);
  REQUIRE(ids.has_value());
  CHECK(*ids == std::vector<int>{4, 5, Vocab::kSep, 6, Vocab::kEos});
  CHECK(!encode_training_sequence(v, {"w0 w1", "w2"}, 4).has_value());
}

TEST_CASE("checkpoint: save and load reproduce the model exactly") {
  const NgmModel model = toy_model(2, 16, 4, 32, 24, 40);
  const std::string path = "ngm_roundtrip_test.bin";
  model.save(path);
  const NgmModel loaded = NgmModel::load(path);
  std::filesystem::remove(path);

  CHECK(loaded.config().n_layers == model.config().n_layers);
  CHECK(loaded.vocab().tokens() == model.vocab().tokens());
  const std::vector<int> ids = {4, 9, 2, 13, 3};
  const Matrix a = model.predictive_distributions(ids);
  const Matrix b = loaded.predictive_distributions(ids);
  CHECK(a.data == b.data);
}

TEST_CASE("train: copy task improves and selection never loses to step 0") {
  std::vector<CleanNoisyPair> pairs;
  for (int i = 0; i < 8; ++i) {
    const std::string text =
        "w" + std::to_string(i % 4) + " w" + std::to_string((i + 1) % 4);
    pairs.push_back({text, text});
  }
  NgmConfig cfg;
  cfg.n_layers = 1;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.context_window = 16;
  TrainOptions opts;
  opts.steps = 60;
  opts.batch_size = 4;
  opts.learning_rate = 0.5;
  opts.checkpoint_every = 20;
  opts.dev_fraction = 0.0;  // select on the training pairs themselves
  Rng rng(41);
  TrainStats stats;
  const NgmModel model = train_ngm(cfg, pairs, opts, rng, nullptr, &stats);
  REQUIRE(!stats.dev_perplexity.empty());
  const double initial = stats.dev_perplexity.front().second;
  CHECK(stats.best_dev_perplexity <= initial);
  CHECK(stats.train_loss.back().second < stats.train_loss.front().second);
  CHECK(model.params().all_finite());
}
