#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/matrix.hpp"
#include "wlgnn/random.hpp"

namespace wlgnn {

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
inline DenseLayer init_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer{Matrix(in, out), Matrix(1, out)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
  return layer;
}

/// Dense layers with a rectifier between consecutive layers, and optionally
/// after the last one.
struct MlpParams {
  std::vector<DenseLayer> layers;
  bool activate_output = false;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }

  void validate(const std::string& name) const {
    if (layers.empty()) throw ShapeError(name + ": no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      if (layer.bias.rows() != 1 || layer.bias.cols() != layer.out_dim()) {
        throw ShapeError(name + ": bias shape " + layer.bias.shape_string());
      }
      if (l > 0 && layers[l - 1].out_dim() != layer.in_dim()) {
        throw ShapeError(name + ": layer " + std::to_string(l) + " expects " +
                         std::to_string(layer.in_dim()) + " inputs, previous emits " +
                         std::to_string(layers[l - 1].out_dim()));
      }
    }
  }
};

/// widths = {in, hidden..., out}.
inline MlpParams init_mlp(const std::vector<std::size_t>& widths, bool activate_output,
                          Rng& rng) {
  MlpParams mlp;
  mlp.activate_output = activate_output;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.layers.push_back(init_dense(widths[i], widths[i + 1], rng));
  }
  return mlp;
}

/// Single identity layer of width n, no output activation.
inline MlpParams identity_mlp(std::size_t n) {
  return MlpParams{{DenseLayer{Matrix::identity(n), Matrix(1, n)}}, false};
}

struct MlpCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

inline bool activated(const MlpParams& mlp, std::size_t layer) {
  return layer + 1 < mlp.layers.size() || mlp.activate_output;
}

inline Matrix mlp_forward(const MlpParams& mlp, const Matrix& x, MlpCache* cache = nullptr) {
  if (mlp.layers.empty()) throw ShapeError("mlp: no layers");
  if (x.cols() != mlp.in_dim()) {
    throw ShapeError("mlp: input width " + std::to_string(x.cols()) + ", expected " +
                     std::to_string(mlp.in_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Matrix z = matmul(h, mlp.layers[l].weight);
    add_row_bias(z, mlp.layers[l].bias);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(z);
    }
    h = activated(mlp, l) ? relu(std::move(z)) : std::move(z);
  }
  return h;
}

/// Accumulates parameter gradients into `grads` and returns d(loss)/d(input).
inline Matrix mlp_backward(const MlpParams& mlp, const MlpCache& cache, Matrix upstream,
                           MlpParams& grads) {
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    if (activated(mlp, l)) relu_backward_inplace(upstream, cache.pre[l]);
    grads.layers[l].weight += matmul_at_b(cache.inputs[l], upstream);
    grads.layers[l].bias += column_sums(upstream);
    upstream = matmul_a_bt(upstream, mlp.layers[l].weight);
  }
  return upstream;
}

inline MlpParams zeros_like(const MlpParams& mlp) {
  MlpParams out = mlp;
  for (auto& layer : out.layers) {
    layer.weight.fill(0.0);
    layer.bias.fill(0.0);
  }
  return out;
}

}  // namespace wlgnn
