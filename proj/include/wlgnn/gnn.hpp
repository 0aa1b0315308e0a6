#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/matrix.hpp"
#include "wlgnn/mlp.hpp"
#include "wlgnn/parallel.hpp"
#include "wlgnn/random.hpp"
#include "wlgnn/tuples.hpp"

namespace wlgnn {

/// D^-1/2 (A_sym + I) D^-1/2 over tuple indices, stored as CSR with sorted
/// column indices. A_sym contains u-v whenever either arc direction exists.
struct NormalizedAdjacency {
  std::vector<std::size_t> offsets;
  std::vector<TupleIndex> columns;
  std::vector<double> values;

  std::size_t rows() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

inline NormalizedAdjacency normalize_adjacency(const PositionGraph& pg) {
  const std::size_t n = pg.tuple_count;
  std::vector<std::pair<TupleIndex, TupleIndex>> entries;
  entries.reserve(2 * pg.arcs.size() + n);
  for (const auto& [s, t] : pg.arcs) {
    if (s >= n || t >= n) throw ShapeError("position graph arc out of range");
    entries.emplace_back(s, t);
    entries.emplace_back(t, s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    entries.emplace_back(static_cast<TupleIndex>(i), static_cast<TupleIndex>(i));
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  NormalizedAdjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (const auto& e : entries) ++adj.offsets[e.first + 1];
  for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt_degree[i] = 1.0 / std::sqrt(static_cast<double>(adj.offsets[i + 1] - adj.offsets[i]));
  }
  adj.columns.reserve(entries.size());
  adj.values.reserve(entries.size());
  for (const auto& [i, j] : entries) {
    adj.columns.push_back(j);
    adj.values.push_back(inv_sqrt_degree[i] * inv_sqrt_degree[j]);
  }
  return adj;
}

/// adj * x. The operator is symmetric, so this also serves the backward pass.
inline Matrix propagate(const NormalizedAdjacency& adj, const Matrix& x) {
  if (adj.rows() != x.rows()) {
    throw ShapeError("propagate: " + std::to_string(adj.rows()) + " tuples, features " +
                     x.shape_string());
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < adj.rows(); ++i) {
    auto dst = out.row(i);
    for (auto p = adj.offsets[i]; p < adj.offsets[i + 1]; ++p) {
      const double a = adj.values[p];
      const auto src = x.row(adj.columns[p]);
      for (std::size_t c = 0; c < x.cols(); ++c) dst[c] += a * src[c];
    }
  }
  return out;
}

struct GcnLayerParams {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct GcnCache {
  Matrix propagated;  // adj * x
  Matrix pre;         // propagated * W + b
};

/// relu(adj * x * W + b).
inline Matrix gcn_forward(const NormalizedAdjacency& adj, const Matrix& feats,
                          const GcnLayerParams& params, GcnCache* cache = nullptr) {
  if (feats.cols() != params.weight.rows()) {
    throw ShapeError("gcn: features " + feats.shape_string() + " vs weight " +
                     params.weight.shape_string());
  }
  Matrix propagated = propagate(adj, feats);
  Matrix pre = matmul(propagated, params.weight);
  add_row_bias(pre, params.bias);
  Matrix out = relu(pre);
  if (cache) {
    cache->propagated = std::move(propagated);
    cache->pre = std::move(pre);
  }
  return out;
}

inline Matrix gcn_forward(const PositionGraph& pg, const Matrix& feats,
                          const GcnLayerParams& params) {
  if (feats.rows() != pg.tuple_count) {
    throw ShapeError("gcn: " + std::to_string(feats.rows()) + " feature rows for " +
                     std::to_string(pg.tuple_count) + " tuples");
  }
  return gcn_forward(normalize_adjacency(pg), feats, params);
}

inline Matrix gcn_backward(const NormalizedAdjacency& adj, const GcnLayerParams& params,
                           const GcnCache& cache, Matrix upstream, GcnLayerParams& grads) {
  relu_backward_inplace(upstream, cache.pre);
  grads.weight += matmul_at_b(cache.propagated, upstream);
  grads.bias += column_sums(upstream);
  return propagate(adj, matmul_a_bt(upstream, params.weight));
}

/// Concatenates the k per-position tuple features and applies the fusion MLP.
inline Matrix fuse(std::span<const Matrix> per_position, const MlpParams& fusion,
                   MlpCache* cache = nullptr) {
  if (per_position.empty()) throw ShapeError("fuse: no inputs");
  for (const auto& m : per_position) {
    if (!m.same_shape(per_position.front())) {
      throw ShapeError("fuse: inconsistent inputs " + m.shape_string() + " vs " +
                       per_position.front().shape_string());
    }
  }
  return mlp_forward(fusion, hconcat(per_position), cache);
}

/// Mean of tuple features over tuples whose position i holds node v, for
/// each position; zero for nodes that never occupy a position. Sums run in
/// ascending tuple index.
inline std::vector<Matrix> pool_to_nodes(const Matrix& tuple_feats, const TupleSet& tuples) {
  if (tuple_feats.rows() != tuples.size()) {
    throw ShapeError("pool: " + std::to_string(tuple_feats.rows()) + " rows for " +
                     std::to_string(tuples.size()) + " tuples");
  }
  const std::size_t k = tuples.order();
  const std::size_t n = tuples.node_count();
  std::vector<Matrix> out(k, Matrix(n, tuple_feats.cols()));
  std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(n, 0));
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const auto tuple = tuples[t];
    const auto src = tuple_feats.row(t);
    for (std::size_t i = 0; i < k; ++i) {
      auto dst = out[i].row(tuple[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      ++counts[i][tuple[i]];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t v = 0; v < n; ++v) {
      if (counts[i][v] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[i][v]);
      for (double& x : out[i].row(v)) x *= inv;
    }
  }
  return out;
}

inline Matrix pool_backward(std::span<const Matrix> pooled_grad, const TupleSet& tuples) {
  const std::size_t k = tuples.order();
  const std::size_t n = tuples.node_count();
  const std::size_t width = pooled_grad.front().cols();
  std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(n, 0));
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    for (std::size_t i = 0; i < k; ++i) ++counts[i][tuples[t][i]];
  }
  Matrix out(tuples.size(), width);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    auto dst = out.row(t);
    for (std::size_t i = 0; i < k; ++i) {
      const auto v = tuples[t][i];
      const double inv = 1.0 / static_cast<double>(counts[i][v]);
      const auto src = pooled_grad[i].row(v);
      for (std::size_t c = 0; c < width; ++c) dst[c] += inv * src[c];
    }
  }
  return out;
}

/// f_v = node_mlp([x_v^(1) : ... : x_v^(k)]).
inline Matrix node_readout(std::span<const Matrix> pooled, const MlpParams& node_mlp,
                           MlpCache* cache = nullptr) {
  if (pooled.empty()) throw ShapeError("node_readout: no inputs");
  return mlp_forward(node_mlp, hconcat(pooled), cache);
}

struct GnnConfig {
  std::size_t k = 2;
  std::size_t layers = 2;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 64;

  friend bool operator==(const GnnConfig&, const GnnConfig&) = default;
};

/// Every learnable tensor of the tuple GNN.
struct GnnParams {
  GnnConfig config;
  std::vector<std::vector<GcnLayerParams>> gcn;  // [layer][position]
  std::vector<MlpParams> fusion;                 // [layer]
  MlpParams node_mlp;

  void validate() const {
    const auto& c = config;
    check_tuple_order(c.k);
    if (c.layers < 1) throw ConfigError("layer count must be >= 1");
    if (gcn.size() != c.layers || fusion.size() != c.layers) {
      throw ShapeError("gnn: expected " + std::to_string(c.layers) + " layers");
    }
    for (std::size_t t = 0; t < c.layers; ++t) {
      const std::size_t in = t == 0 ? c.k * c.input_dim : c.hidden_dim;
      if (gcn[t].size() != c.k) throw ShapeError("gnn: layer needs one GCN per position");
      for (const auto& p : gcn[t]) {
        if (p.weight.rows() != in || p.weight.cols() != c.hidden_dim ||
            p.bias.rows() != 1 || p.bias.cols() != c.hidden_dim) {
          throw ShapeError("gnn: GCN layer " + std::to_string(t) + " weight " +
                           p.weight.shape_string() + ", expected " + std::to_string(in) +
                           "x" + std::to_string(c.hidden_dim));
        }
      }
      fusion[t].validate("fusion");
      if (fusion[t].in_dim() != c.k * c.hidden_dim || fusion[t].out_dim() != c.hidden_dim) {
        throw ShapeError("gnn: fusion MLP dimensions");
      }
    }
    node_mlp.validate("node_mlp");
    if (node_mlp.in_dim() != c.k * c.hidden_dim || node_mlp.out_dim() != c.output_dim) {
      throw ShapeError("gnn: node MLP dimensions");
    }
  }
};

inline GnnParams init_gnn(const GnnConfig& c, Rng& rng) {
  check_tuple_order(c.k);
  if (c.layers < 1 || c.input_dim < 1 || c.hidden_dim < 1 || c.output_dim < 1) {
    throw ConfigError("gnn dimensions must be positive");
  }
  GnnParams p;
  p.config = c;
  for (std::size_t t = 0; t < c.layers; ++t) {
    const std::size_t in = t == 0 ? c.k * c.input_dim : c.hidden_dim;
    auto& layer = p.gcn.emplace_back();
    for (std::size_t j = 0; j < c.k; ++j) {
      auto dense = init_dense(in, c.hidden_dim, rng);
      layer.push_back({std::move(dense.weight), std::move(dense.bias)});
    }
    p.fusion.push_back(init_mlp({c.k * c.hidden_dim, c.hidden_dim, c.hidden_dim}, false, rng));
  }
  p.node_mlp = init_mlp({c.k * c.hidden_dim, c.hidden_dim, c.output_dim}, false, rng);
  return p;
}

inline GnnParams zeros_like(const GnnParams& p) {
  GnnParams z = p;
  for (auto& layer : z.gcn) {
    for (auto& g : layer) {
      g.weight.fill(0.0);
      g.bias.fill(0.0);
    }
  }
  for (auto& f : z.fusion) f = zeros_like(f);
  z.node_mlp = zeros_like(z.node_mlp);
  return z;
}

/// Graph-side structures derived once per graph and order k.
struct GraphBundle {
  const DirectedGraph* graph = nullptr;
  TupleSet tuples;
  std::vector<PositionGraph> position_graphs;
  std::vector<NormalizedAdjacency> adjacency;

  std::size_t node_count() const { return graph->node_count(); }
};

inline GraphBundle make_bundle(const DirectedGraph& graph, std::size_t k) {
  GraphBundle b;
  b.graph = &graph;
  b.tuples = enumerate_tuples(graph, k);
  b.position_graphs = build_position_graphs(graph, b.tuples);
  for (const auto& pg : b.position_graphs) b.adjacency.push_back(normalize_adjacency(pg));
  return b;
}

struct GnnCache {
  std::vector<std::vector<GcnCache>> gcn;  // [layer][position]
  std::vector<MlpCache> fusion;
  MlpCache node;
};

/// Tuple features -> layers of (k GCNs, fusion) -> average allocation ->
/// node MLP. Returns one row per node.
inline Matrix gnn_forward(const GraphBundle& bundle, const FeatureMatrix& node_features,
                          const GnnParams& params, GnnCache* cache = nullptr,
                          std::size_t threads = 1) {
  const auto& c = params.config;
  if (bundle.tuples.order() != c.k) {
    throw ShapeError("bundle built for k=" + std::to_string(bundle.tuples.order()) +
                     ", model has k=" + std::to_string(c.k));
  }
  if (node_features.rows() != bundle.node_count() || node_features.cols() != c.input_dim) {
    throw ShapeError("node features " + node_features.shape_string() + ", model expects " +
                     std::to_string(bundle.node_count()) + "x" + std::to_string(c.input_dim));
  }
  if (cache) {
    cache->gcn.assign(c.layers, std::vector<GcnCache>(c.k));
    cache->fusion.assign(c.layers, {});
  }
  Matrix h = initial_tuple_features(bundle.tuples, node_features);
  for (std::size_t t = 0; t < c.layers; ++t) {
    std::vector<Matrix> per_position(c.k);
    parallel_for(c.k, threads, [&](std::size_t j) {
      per_position[j] = gcn_forward(bundle.adjacency[j], h, params.gcn[t][j],
                                    cache ? &cache->gcn[t][j] : nullptr);
    });
    h = fuse(per_position, params.fusion[t], cache ? &cache->fusion[t] : nullptr);
  }
  const auto pooled = pool_to_nodes(h, bundle.tuples);
  return node_readout(pooled, params.node_mlp, cache ? &cache->node : nullptr);
}

struct GnnGradients {
  GnnParams params;
  Matrix node_features;
};

/// Reverse pass of gnn_forward for loss gradient `upstream` (nodes x output).
inline GnnGradients gnn_backward(const GraphBundle& bundle, const GnnParams& params,
                                 const GnnCache& cache, const Matrix& upstream,
                                 std::size_t threads = 1) {
  const auto& c = params.config;
  if (upstream.rows() != bundle.node_count() || upstream.cols() != c.output_dim) {
    throw ShapeError("upstream gradient " + upstream.shape_string() + ", expected " +
                     std::to_string(bundle.node_count()) + "x" + std::to_string(c.output_dim));
  }
  GnnGradients g{zeros_like(params), Matrix(bundle.node_count(), c.input_dim)};
  Matrix d = mlp_backward(params.node_mlp, cache.node, upstream, g.params.node_mlp);
  const auto d_pooled = hsplit(d, c.k);
  Matrix d_h = pool_backward(d_pooled, bundle.tuples);
  for (std::size_t t = c.layers; t-- > 0;) {
    const Matrix d_cat = mlp_backward(params.fusion[t], cache.fusion[t], std::move(d_h),
                                      g.params.fusion[t]);
    const auto d_pos = hsplit(d_cat, c.k);
    std::vector<Matrix> d_in(c.k);
    parallel_for(c.k, threads, [&](std::size_t j) {
      d_in[j] = gcn_backward(bundle.adjacency[j], params.gcn[t][j], cache.gcn[t][j],
                             d_pos[j], g.params.gcn[t][j]);
    });
    d_h = std::move(d_in[0]);
    for (std::size_t j = 1; j < c.k; ++j) d_h += d_in[j];
  }
  // Scatter the concatenated tuple-input gradient back onto node rows.
  const std::size_t dim = c.input_dim;
  for (std::size_t t = 0; t < bundle.tuples.size(); ++t) {
    const auto tuple = bundle.tuples[t];
    const auto src = d_h.row(t);
    for (std::size_t i = 0; i < c.k; ++i) {
      auto dst = g.node_features.row(tuple[i]);
      for (std::size_t q = 0; q < dim; ++q) dst[q] += src[i * dim + q];
    }
  }
  return g;
}

}  // namespace wlgnn
