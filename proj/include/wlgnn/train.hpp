#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlgnn/adam.hpp"
#include "wlgnn/error.hpp"
#include "wlgnn/gnn.hpp"
#include "wlgnn/metrics.hpp"
#include "wlgnn/model.hpp"
#include "wlgnn/pairs.hpp"
#include "wlgnn/random.hpp"

namespace wlgnn {

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t epochs = 4000;
  std::size_t batch_size = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  double negative_ratio = 1.0;
  double reverse_share = 0.5;
  bool resample_negatives = false;  // redraw train negatives every epoch
  std::size_t threads = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in (0,1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
    if (!(negative_ratio >= 0.0)) throw ConfigError("negative ratio must be >= 0");
    if (threads == 0) throw ConfigError("threads must be >= 1");
  }
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;  // mean loss over the epoch's examples
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

namespace detail {

inline void split_batch(std::span<const LabeledPair> pairs, std::vector<ScoredPair>& scored,
                        std::vector<int>& labels) {
  scored.clear();
  labels.clear();
  for (const auto& p : pairs) {
    scored.push_back({p.source, p.target});
    labels.push_back(p.label);
  }
}

}  // namespace detail

/// Mini-batch Adam over the train split. Each step runs the GNN over the
/// whole graph and scores only the batch's pairs.
inline TrainResult train(const GraphBundle& bundle, const FeatureMatrix& features,
                         const LabeledPairSet& pairs, Model model, const TrainConfig& config,
                         const EpochCallback& on_epoch = {}) {
  config.validate();
  model.validate();
  std::vector<LabeledPair> train_pairs = pairs.select(Split::train);
  if (train_pairs.empty()) throw ConfigError("train split is empty");

  std::set<Edge> positives;
  std::set<Edge> excluded;
  std::size_t train_negatives = 0;
  for (const auto& p : pairs.pairs) {
    if (p.label == 1) positives.insert({p.source, p.target});
    if (p.label == 1 || p.split == Split::test) excluded.insert({p.source, p.target});
    if (p.label == 0 && p.split == Split::train) ++train_negatives;
  }

  Adam adam({config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps});
  Rng order_rng(config.seed ^ 0x5851f42d4c957f2dull);
  Rng negative_rng(config.seed ^ 0x14057b7ef767814full);

  std::vector<Matrix*> params;
  for (auto& [name, m] : model.tensors()) params.push_back(m);

  TrainResult result;
  std::vector<ScoredPair> scored;
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.resample_negatives && epoch > 0 && train_negatives > 0) {
      std::erase_if(train_pairs, [](const LabeledPair& p) { return p.label == 0; });
      for (const auto& [u, v] : draw_negatives(*bundle.graph, positives, excluded,
                                               train_negatives, negative_rng,
                                               config.reverse_share)) {
        train_pairs.push_back({u, v, 0, Split::train});
      }
    }
    order_rng.shuffle(train_pairs);
    double total = 0.0;
    for (std::size_t start = 0; start < train_pairs.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, train_pairs.size() - start);
      detail::split_batch(std::span(train_pairs).subspan(start, len), scored, labels);
      auto lg = loss_and_gradients(model, bundle, features, scored, labels, config.threads);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      total += lg.loss * static_cast<double>(len);
      std::vector<const Matrix*> grads;
      for (const auto& [name, g] : std::as_const(lg.grads).tensors()) {
        if (!g->all_finite()) {
          throw DivergenceError("non-finite gradient in '" + name + "' at epoch " +
                                std::to_string(epoch + 1));
        }
        grads.push_back(g);
      }
      adam.step(params, grads);
    }
    const double mean = total / static_cast<double>(train_pairs.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const GraphBundle& bundle, const FeatureMatrix& features,
                         const LabeledPairSet& pairs, const ModelConfig& model_config,
                         const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  return train(bundle, features, pairs, init_model(model_config, config.seed), config, on_epoch);
}

inline std::vector<double> pair_probabilities(const Model& model, const GraphBundle& bundle,
                                              const FeatureMatrix& features,
                                              std::span<const LabeledPair> pairs,
                                              std::size_t threads = 1) {
  std::vector<ScoredPair> scored;
  scored.reserve(pairs.size());
  for (const auto& p : pairs) scored.push_back({p.source, p.target});
  return predict(model, bundle, features, scored, threads);
}

/// Metrics at each threshold, from a single forward pass.
inline std::vector<Metrics> evaluate_sweep(const Model& model, const GraphBundle& bundle,
                                           const FeatureMatrix& features,
                                           std::span<const LabeledPair> pairs,
                                           std::span<const double> thresholds,
                                           std::size_t threads = 1) {
  if (pairs.empty()) throw ConfigError("evaluate: no pairs");
  const auto probs = pair_probabilities(model, bundle, features, pairs, threads);
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label);
  std::vector<Metrics> out;
  for (double t : thresholds) out.push_back(score_predictions(probs, labels, t));
  return out;
}

inline Metrics evaluate(const Model& model, const GraphBundle& bundle,
                        const FeatureMatrix& features, std::span<const LabeledPair> pairs,
                        double threshold = 0.5, std::size_t threads = 1) {
  const double t[] = {threshold};
  return evaluate_sweep(model, bundle, features, pairs, t, threads).front();
}

inline void write_loss_history(std::ostream& out, std::span<const double> losses) {
  out << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < losses.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", e + 1, losses[e]);
    out << buf;
  }
}

}  // namespace wlgnn
