#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/gnn.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/matrix.hpp"
#include "wlgnn/mlp.hpp"
#include "wlgnn/random.hpp"

namespace wlgnn {

inline constexpr double kProbabilityClamp = 1e-12;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp_probability(double p) {
  return std::min(std::max(p, kProbabilityClamp), 1.0 - kProbabilityClamp);
}

/// Shared encoder applied to both nodes of a pair, and the scoring row W
/// over [e_p : e_q : e_p - e_q : e_p (*) e_q : 1].
struct SiameseParams {
  MlpParams encoder;
  Matrix score_row;  // 1 x (4 * enc_out + 1)

  std::size_t encoded_dim() const { return encoder.out_dim(); }

  void validate() const {
    encoder.validate("encoder");
    if (score_row.rows() != 1 || score_row.cols() != 4 * encoded_dim() + 1) {
      throw ShapeError("score row " + score_row.shape_string() + " for encoder width " +
                       std::to_string(encoded_dim()));
    }
  }
};

inline std::vector<double> pair_feature(std::span<const double> ep, std::span<const double> eq) {
  if (ep.size() != eq.size()) throw ShapeError("pair_feature: width mismatch");
  const std::size_t e = ep.size();
  std::vector<double> z(4 * e + 1);
  for (std::size_t i = 0; i < e; ++i) {
    z[i] = ep[i];
    z[e + i] = eq[i];
    z[2 * e + i] = ep[i] - eq[i];
    z[3 * e + i] = ep[i] * eq[i];
  }
  z[4 * e] = 1.0;
  return z;
}

inline double pair_logit(std::span<const double> ep, std::span<const double> eq,
                         const Matrix& score_row) {
  const auto z = pair_feature(ep, eq);
  if (score_row.cols() != z.size()) throw ShapeError("score row width mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += score_row(0, i) * z[i];
  return s;
}

/// P(p -> q), clamped to [1e-12, 1 - 1e-12].
inline double link_probability(std::span<const double> f_p, std::span<const double> f_q,
                               const SiameseParams& params) {
  if (f_p.size() != params.encoder.in_dim() || f_q.size() != params.encoder.in_dim()) {
    throw ShapeError("link_probability: representation width " + std::to_string(f_p.size()) +
                     ", encoder expects " + std::to_string(params.encoder.in_dim()));
  }
  Matrix both(2, f_p.size());
  std::copy(f_p.begin(), f_p.end(), both.row(0).begin());
  std::copy(f_q.begin(), f_q.end(), both.row(1).begin());
  const Matrix e = mlp_forward(params.encoder, both);
  return clamp_probability(sigmoid(pair_logit(e.row(0), e.row(1), params.score_row)));
}

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
inline double bce_loss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.empty()) throw ConfigError("bce_loss: empty input");
  if (probs.size() != labels.size()) throw ShapeError("bce_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_probability(probs[i]);
    total -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

struct ModelConfig {
  GnnConfig gnn;
  std::size_t encoder_layers = 1;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All learnables: the tuple GNN and the Siamese head.
struct Model {
  ModelConfig config;
  GnnParams gnn;
  SiameseParams head;

  void validate() const {
    gnn.validate();
    head.validate();
    if (head.encoder.in_dim() != gnn.config.output_dim) {
      throw ShapeError("encoder input width does not match node representation width");
    }
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }

  std::vector<std::pair<std::string, Matrix*>> tensors() {
    std::vector<std::pair<std::string, Matrix*>> out;
    for_each_tensor([&](const std::string& name, Matrix& m) { out.emplace_back(name, &m); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
  }

  std::vector<std::pair<std::string, const Matrix*>> tensors() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    for_each_tensor([&](const std::string& name, const Matrix& m) { out.emplace_back(name, &m); });
    return out;
  }

  friend bool operator==(const Model& a, const Model& b) {
    if (!(a.config == b.config)) return false;
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
      if (ta[i].first != tb[i].first || !(*ta[i].second == *tb[i].second)) return false;
    }
    return true;
  }

 private:
  // Visits tensors in a fixed order with stable names.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    for (std::size_t t = 0; t < self.gnn.gcn.size(); ++t) {
      for (std::size_t j = 0; j < self.gnn.gcn[t].size(); ++j) {
        const auto base = "gcn." + std::to_string(t) + "." + std::to_string(j);
        fn(base + ".weight", self.gnn.gcn[t][j].weight);
        fn(base + ".bias", self.gnn.gcn[t][j].bias);
      }
      visit_mlp("fusion." + std::to_string(t), self.gnn.fusion[t], fn);
    }
    visit_mlp("node_mlp", self.gnn.node_mlp, fn);
    visit_mlp("encoder", self.head.encoder, fn);
    fn(std::string("score_row"), self.head.score_row);
  }

  template <typename Mlp, typename Fn>
  static void visit_mlp(const std::string& prefix, Mlp& mlp, Fn& fn) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      const auto base = prefix + "." + std::to_string(l);
      fn(base + ".weight", mlp.layers[l].weight);
      fn(base + ".bias", mlp.layers[l].bias);
    }
  }
};

inline Model init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.encoder_layers < 1) throw ConfigError("encoder needs at least one layer");
  Rng rng(seed);
  Model m;
  m.config = config;
  m.gnn = init_gnn(config.gnn, rng);
  const std::size_t r = config.gnn.output_dim;
  std::vector<std::size_t> widths(config.encoder_layers + 1, r);
  m.head.encoder = init_mlp(widths, true, rng);
  auto row = init_dense(4 * r + 1, 1, rng);
  m.head.score_row = Matrix(1, 4 * r + 1, std::move(row.weight.values()));
  return m;
}

inline Model zeros_like(const Model& m) {
  Model z = m;
  z.for_each_tensor([](const std::string&, Matrix& t) { t.fill(0.0); });
  return z;
}

/// Node representations f_v for every node.
inline Matrix node_representations(const Model& model, const GraphBundle& bundle,
                                   const FeatureMatrix& features, std::size_t threads = 1) {
  return gnn_forward(bundle, features, model.gnn, nullptr, threads);
}

struct ScoredPair {
  NodeIndex source = 0;
  NodeIndex target = 0;
};

/// Probabilities for each (source, target) under the full pipeline.
inline std::vector<double> predict(const Model& model, const GraphBundle& bundle,
                                   const FeatureMatrix& features,
                                   std::span<const ScoredPair> pairs, std::size_t threads = 1) {
  const Matrix f = node_representations(model, bundle, features, threads);
  const Matrix e = mlp_forward(model.head.encoder, f);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.source >= e.rows() || p.target >= e.rows()) throw ShapeError("pair node out of range");
    out.push_back(clamp_probability(
        sigmoid(pair_logit(e.row(p.source), e.row(p.target), model.head.score_row))));
  }
  return out;
}

struct LossAndGradients {
  double loss = 0.0;
  Model grads;
  Matrix feature_grads;  // d loss / d node features
};

/// Mean cross-entropy of the batch and its exact gradient with respect to
/// every model tensor and the node features.
inline LossAndGradients loss_and_gradients(const Model& model, const GraphBundle& bundle,
                                           const FeatureMatrix& features,
                                           std::span<const ScoredPair> pairs,
                                           std::span<const int> labels,
                                           std::size_t threads = 1) {
  if (pairs.empty()) throw ConfigError("empty batch");
  if (pairs.size() != labels.size()) throw ShapeError("pairs/labels length mismatch");
  GnnCache gnn_cache;
  const Matrix f = gnn_forward(bundle, features, model.gnn, &gnn_cache, threads);
  MlpCache enc_cache;
  const Matrix e = mlp_forward(model.head.encoder, f, &enc_cache);
  const std::size_t width = e.cols();

  LossAndGradients out{0.0, zeros_like(model), {}};
  Matrix d_e(e.rows(), width);
  std::vector<double> probs(pairs.size());
  const double inv_batch = 1.0 / static_cast<double>(pairs.size());
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    const auto ep = e.row(pairs[b].source);
    const auto eq = e.row(pairs[b].target);
    const auto z = pair_feature(ep, eq);
    double logit = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) logit += model.head.score_row(0, i) * z[i];
    const double p = sigmoid(logit);
    probs[b] = p;
    const double d_logit = (p - labels[b]) * inv_batch;
    for (std::size_t i = 0; i < z.size(); ++i) out.grads.head.score_row(0, i) += d_logit * z[i];
    const auto& w = model.head.score_row;
    auto dp = d_e.row(pairs[b].source);
    for (std::size_t i = 0; i < width; ++i) {
      dp[i] += d_logit * (w(0, i) + w(0, 2 * width + i) + w(0, 3 * width + i) * eq[i]);
    }
    auto dq = d_e.row(pairs[b].target);
    for (std::size_t i = 0; i < width; ++i) {
      dq[i] += d_logit * (w(0, width + i) - w(0, 2 * width + i) + w(0, 3 * width + i) * ep[i]);
    }
  }
  std::vector<int> label_vec(labels.begin(), labels.end());
  out.loss = bce_loss(probs, label_vec);

  Matrix d_f = mlp_backward(model.head.encoder, enc_cache, std::move(d_e), out.grads.head.encoder);
  auto gnn_grads = gnn_backward(bundle, model.gnn, gnn_cache, d_f, threads);
  out.grads.gnn = std::move(gnn_grads.params);
  out.feature_grads = std::move(gnn_grads.node_features);
  return out;
}

}  // namespace wlgnn
