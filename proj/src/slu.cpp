// src/slu.cpp

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

#include "asrnoise/slu.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "asrnoise/text.hpp"

namespace asrnoise {

void ClassifierConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("classifier: dim must be >= 1");
  if (n_buckets < 1) {
    throw std::invalid_argument("classifier: n_buckets must be >= 1");
  }
  if (epochs < 1) throw std::invalid_argument("classifier: epochs must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("classifier: lr must be > 0");
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("classifier: threshold in (0,1)");
  }
  if (max_predictions < 1) {
    throw std::invalid_argument("classifier: max_predictions must be >= 1");
  }
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<std::uint32_t> Classifier::features(std::string_view text,
                                                int n_buckets) {
  const std::vector<std::string> tokens = tokenize(text);
  std::vector<std::uint32_t> out;
  out.reserve(tokens.size() * 2);
  for (const std::string& tok : tokens) {
    out.push_back(static_cast<std::uint32_t>(fnv1a(tok) % n_buckets));
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string bigram = tokens[i] + ' ' + tokens[i + 1];
    out.push_back(static_cast<std::uint32_t>(fnv1a(bigram) % n_buckets));
  }
  return out;
}

Classifier Classifier::train(const std::vector<LabeledExample>& data,
                             const ClassifierConfig& cfg, Rng& rng,
                             std::vector<double>* epoch_losses) {
  cfg.validate();
  std::set<std::string> label_set;
  for (const LabeledExample& ex : data) {
    if (ex.labels.empty()) {
      throw std::invalid_argument("classifier: every example needs a label");
    }
    if (cfg.mode == ClassifierMode::kSoftmax && ex.labels.size() != 1) {
      throw std::invalid_argument(
          "classifier: softmax mode requires exactly one label per example");
    }
    for (const std::string& l : ex.labels) label_set.insert(l);
  }
  if (label_set.size() < 2) {
    throw std::invalid_argument("classifier: need at least 2 distinct labels");
  }

  Classifier model;
  model.cfg_ = cfg;
  model.labels_.assign(label_set.begin(), label_set.end());
  const int n_labels = static_cast<int>(model.labels_.size());
  const int dim = cfg.dim;

  std::unordered_map<std::string, int> label_id;
  for (int i = 0; i < n_labels; ++i) label_id.emplace(model.labels_[i], i);

  model.embedding_.resize(static_cast<std::size_t>(cfg.n_buckets) * dim);
  const double bound = 1.0 / dim;
  for (double& w : model.embedding_) w = (rng.uniform() * 2.0 - 1.0) * bound;
  model.output_.assign(static_cast<std::size_t>(dim) * n_labels, 0.0);

  // Feature ids are fixed per example; hash once up front.
  std::vector<std::vector<std::uint32_t>> feats(data.size());
  std::vector<std::vector<int>> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    feats[i] = features(data[i].text, cfg.n_buckets);
    for (const std::string& l : data[i].labels) {
      targets[i].push_back(label_id.at(l));
    }
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> hidden(dim), grad_s(n_labels), grad_h(dim);
  const long long total_updates =
      static_cast<long long>(cfg.epochs) * static_cast<long long>(data.size());
  long long done = 0;
  if (epoch_losses != nullptr) epoch_losses->clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t scored = 0;
    for (std::size_t idx : order) {
      const auto& fs = feats[idx];
      const double lr =
          cfg.lr * (1.0 - static_cast<double>(done) / total_updates);
      ++done;
      if (fs.empty()) continue;

      std::fill(hidden.begin(), hidden.end(), 0.0);
      for (std::uint32_t f : fs) {
        const double* e =
            model.embedding_.data() + static_cast<std::size_t>(f) * dim;
        for (int j = 0; j < dim; ++j) hidden[j] += e[j];
      }
      const double inv = 1.0 / static_cast<double>(fs.size());
      for (int j = 0; j < dim; ++j) hidden[j] *= inv;

      for (int l = 0; l < n_labels; ++l) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) {
          s += hidden[j] * model.output_[static_cast<std::size_t>(j) * n_labels + l];
        }
        grad_s[l] = s;
      }

      if (cfg.mode == ClassifierMode::kSoftmax) {
        double mx = grad_s[0];
        for (int l = 1; l < n_labels; ++l) mx = std::max(mx, grad_s[l]);
        double total = 0.0;
        for (int l = 0; l < n_labels; ++l) {
          grad_s[l] = std::exp(grad_s[l] - mx);
          total += grad_s[l];
        }
        for (int l = 0; l < n_labels; ++l) grad_s[l] /= total;
        epoch_loss -= std::log(std::max(grad_s[targets[idx][0]], 1e-300));
        ++scored;
        grad_s[targets[idx][0]] -= 1.0;  // d(cross-entropy)/d(score)
      } else {
        std::vector<char> is_target(n_labels, 0);
        for (int t : targets[idx]) is_target[t] = 1;
        for (int l = 0; l < n_labels; ++l) {
          grad_s[l] = sigmoid(grad_s[l]);
          const double p = is_target[l] ? grad_s[l] : 1.0 - grad_s[l];
          epoch_loss -= std::log(std::max(p, 1e-300));
        }
        ++scored;
        for (int t : targets[idx]) grad_s[t] -= 1.0;  // per-label BCE
      }

      std::fill(grad_h.begin(), grad_h.end(), 0.0);
      for (int j = 0; j < dim; ++j) {
        double* w =
            model.output_.data() + static_cast<std::size_t>(j) * n_labels;
        const double hj = hidden[j];
        double g = 0.0;
        for (int l = 0; l < n_labels; ++l) {
          g += w[l] * grad_s[l];
          w[l] -= lr * hj * grad_s[l];
        }
        grad_h[j] = g;
      }
      const double scale = lr * inv;
      for (std::uint32_t f : fs) {
        double* e = model.embedding_.data() + static_cast<std::size_t>(f) * dim;
        for (int j = 0; j < dim; ++j) e[j] -= scale * grad_h[j];
      }
    }
    if (epoch_losses != nullptr) {
      epoch_losses->push_back(scored == 0 ? 0.0 : epoch_loss / scored);
    }
  }
  return model;
}

std::vector<double> Classifier::raw_scores(std::string_view text) const {
  const int dim = cfg_.dim;
  const int n_labels = static_cast<int>(labels_.size());
  const std::vector<std::uint32_t> fs = features(text, cfg_.n_buckets);
  std::vector<double> hidden(dim, 0.0);
  if (!fs.empty()) {
    for (std::uint32_t f : fs) {
      const double* e = embedding_.data() + static_cast<std::size_t>(f) * dim;
      for (int j = 0; j < dim; ++j) hidden[j] += e[j];
    }
    const double inv = 1.0 / static_cast<double>(fs.size());
    for (int j = 0; j < dim; ++j) hidden[j] *= inv;
  }
  std::vector<double> scores(n_labels, 0.0);
  for (int l = 0; l < n_labels; ++l) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
      s += hidden[j] * output_[static_cast<std::size_t>(j) * n_labels + l];
    }
    scores[l] = s;
  }
  return scores;
}

std::vector<std::pair<std::string, double>> Classifier::scores(
    std::string_view text) const {
  std::vector<double> raw = raw_scores(text);
  const int n_labels = static_cast<int>(labels_.size());
  if (cfg_.mode == ClassifierMode::kSoftmax) {
    double mx = raw[0];
    for (double s : raw) mx = std::max(mx, s);
    double total = 0.0;
    for (double& s : raw) {
      s = std::exp(s - mx);
      total += s;
    }
    for (double& s : raw) s /= total;
  } else {
    for (double& s : raw) s = sigmoid(s);
  }
  std::vector<std::pair<std::string, double>> out;
  out.reserve(n_labels);
  for (int l = 0; l < n_labels; ++l) out.emplace_back(labels_[l], raw[l]);
  return out;
}

std::vector<std::string> Classifier::predict(std::string_view text) const {
  const auto scored = scores(text);
  if (cfg_.mode == ClassifierMode::kSoftmax) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < scored.size(); ++l) {
      if (scored[l].second > scored[best].second) best = l;
    }
    return {scored[best].first};
  }
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].second != scored[b].second) {
      return scored[a].second > scored[b].second;
    }
    return a < b;
  });
  std::vector<std::string> out;
  for (std::size_t l : order) {
    if (scored[l].second > cfg_.threshold &&
        static_cast<int>(out.size()) < cfg_.max_predictions) {
      out.push_back(scored[l].first);
    }
  }
  if (out.empty()) out.push_back(scored[order[0]].first);  // top-1 fallback
  return out;
}

EvalMetrics evaluate(const Classifier& model,
                     const std::vector<LabeledExample>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  EvalMetrics m;
  m.count = test.size();
  m.multilabel = model.mode() == ClassifierMode::kOneVsAll;
  double acc = 0.0, f1 = 0.0;
  for (const LabeledExample& ex : test) {
    const std::vector<std::string> pred = model.predict(ex.text);
    const std::set<std::string> y(ex.labels.begin(), ex.labels.end());
    const std::set<std::string> z(pred.begin(), pred.end());
    std::size_t inter = 0;
    for (const std::string& p : z) inter += y.count(p);
    const std::size_t uni = y.size() + z.size() - inter;
    if (m.multilabel) {
      acc += uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
    } else {
      acc += (y == z) ? 1.0 : 0.0;
    }
    f1 += 2.0 * inter / static_cast<double>(y.size() + z.size());
  }
  m.accuracy = acc / test.size();
  m.f1 = f1 / test.size();
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr char kSluMagic[4] = {'S', 'L', 'U', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_str(std::istream& in) {
  std::string s(get_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}
}  // namespace

void Classifier::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("classifier: cannot write " + path);
  out.write(kSluMagic, 4);
  put_u32(out, cfg_.mode == ClassifierMode::kSoftmax ? 0 : 1);
  put_u32(out, static_cast<std::uint32_t>(cfg_.dim));
  put_u32(out, static_cast<std::uint32_t>(cfg_.n_buckets));
  put_f64(out, cfg_.threshold);
  put_u32(out, static_cast<std::uint32_t>(cfg_.max_predictions));
  put_u32(out, static_cast<std::uint32_t>(labels_.size()));
  for (const std::string& l : labels_) put_str(out, l);
  out.write(reinterpret_cast<const char*>(embedding_.data()),
            static_cast<std::streamsize>(embedding_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(output_.data()),
            static_cast<std::streamsize>(output_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("classifier: short write to " + path);
}

Classifier Classifier::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("classifier: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kSluMagic, 4) != 0) {
    throw std::runtime_error("classifier: not a classifier model: " + path);
  }
  Classifier model;
  model.cfg_.mode =
      get_u32(in) == 0 ? ClassifierMode::kSoftmax : ClassifierMode::kOneVsAll;
  model.cfg_.dim = static_cast<int>(get_u32(in));
  model.cfg_.n_buckets = static_cast<int>(get_u32(in));
  model.cfg_.threshold = get_f64(in);
  model.cfg_.max_predictions = static_cast<int>(get_u32(in));
  const std::uint32_t n_labels = get_u32(in);
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    model.labels_.push_back(get_str(in));
  }
  model.embedding_.resize(static_cast<std::size_t>(model.cfg_.n_buckets) *
                          model.cfg_.dim);
  model.output_.resize(static_cast<std::size_t>(model.cfg_.dim) * n_labels);
  in.read(
      reinterpret_cast<char*>(model.embedding_.data()),
      static_cast<std::streamsize>(model.embedding_.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(model.output_.data()),
          static_cast<std::streamsize>(model.output_.size() * sizeof(double)));
  if (!in) throw std::runtime_error("classifier: truncated model: " + path);
  return model;
}

}  // namespace asrnoise
