#pragma once

// Brute-force reference implementations used only by tests. They share no
// code paths with the library beyond the graph container and parameter
// structs.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wlgnn/wlgnn.hpp"

namespace oracle {

using wlgnn::DirectedGraph;
using wlgnn::Matrix;
using wlgnn::NodeIndex;
using Tuple = std::vector<NodeIndex>;

inline bool edge(const DirectedGraph& g, NodeIndex u, NodeIndex v) {
  for (const auto& [a, b] : g.edges()) {
    if (a == u && b == v) return true;
  }
  return false;
}

/// Every tuple of V^k in lexicographic order.
inline std::vector<Tuple> all_tuples(std::size_t n, std::size_t k) {
  std::vector<Tuple> out;
  Tuple t(k, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= n;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t i = k; i-- > 0;) {
      t[i] = static_cast<NodeIndex>(rest % n);
      rest /= n;
    }
    out.push_back(t);
  }
  return out;
}

/// For i >= 2 there is j < i with s_i == s_j or s_j -> s_i.
inline bool admitted(const DirectedGraph& g, const Tuple& s) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    bool ok = false;
    for (std::size_t j = 0; j < i && !ok; ++j) ok = s[i] == s[j] || edge(g, s[j], s[i]);
    if (!ok) return false;
  }
  return true;
}

inline std::vector<Tuple> restricted_tuples(const DirectedGraph& g, std::size_t k) {
  std::vector<Tuple> out;
  for (auto& t : all_tuples(g.node_count(), k)) {
    if (admitted(g, t)) out.push_back(t);
  }
  return out;
}

/// Arcs (as tuple pairs) of the position graph at 1-based `position`.
inline std::set<std::pair<Tuple, Tuple>> position_arcs(const DirectedGraph& g,
                                                       const std::vector<Tuple>& tuples,
                                                       std::size_t position) {
  const std::set<Tuple> members(tuples.begin(), tuples.end());
  std::set<std::pair<Tuple, Tuple>> arcs;
  const std::size_t j = position - 1;
  for (const auto& s : tuples) {
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      if (!edge(g, s[j], v)) continue;
      Tuple t = s;
      t[j] = v;
      if (members.count(t)) arcs.insert({s, t});
    }
  }
  return arcs;
}

// ---------------------------------------------------------------------------
// WL refinement with string signatures.

inline std::string atomic(const DirectedGraph& g, const Tuple& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i < j) out += s[i] == s[j] ? '=' : '.';
      if (i != j) out += edge(g, s[i], s[j]) ? '>' : '_';
    }
  }
  return out;
}

struct Refinement {
  // Per graph, per round: color counts (color label -> count).
  std::vector<std::vector<std::map<std::string, std::size_t>>> histograms;
  bool distinguished = false;
};

/// Refines all graphs jointly. `full` uses V^k and the joint multiset over v
/// of substituted-tuple colors (k >= 2); otherwise restricted tuples and
/// per-position sorted neighbor colors along out-neighbor substitutions.
inline Refinement refine(const std::vector<DirectedGraph>& graphs, std::size_t k,
                         std::size_t rounds, bool full) {
  const bool use_full = full && k >= 2;
  std::vector<std::vector<Tuple>> tuples;
  std::vector<std::map<Tuple, std::size_t>> where;
  for (const auto& g : graphs) {
    tuples.push_back(use_full ? all_tuples(g.node_count(), k) : restricted_tuples(g, k));
    std::map<Tuple, std::size_t> idx;
    for (std::size_t i = 0; i < tuples.back().size(); ++i) idx[tuples.back()[i]] = i;
    where.push_back(std::move(idx));
  }
  std::vector<std::vector<std::string>> color(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    for (const auto& t : tuples[gi]) color[gi].push_back(atomic(graphs[gi], t));
  }

  Refinement result;
  result.histograms.resize(graphs.size());
  auto record = [&] {
    // Compress the labels jointly: sorted distinct strings -> "c<i>".
    std::set<std::string> distinct;
    for (const auto& cs : color) distinct.insert(cs.begin(), cs.end());
    std::map<std::string, std::string> rename;
    std::size_t next = 0;
    for (const auto& s : distinct) rename[s] = "c" + std::to_string(next++);
    for (auto& cs : color) {
      for (auto& c : cs) c = rename[c];
    }
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      std::map<std::string, std::size_t> h;
      for (const auto& c : color[gi]) ++h[c];
      result.histograms[gi].push_back(h);
    }
    for (std::size_t gi = 1; gi < graphs.size(); ++gi) {
      if (result.histograms[gi].back() != result.histograms[0].back()) {
        result.distinguished = true;
      }
    }
  };
  record();

  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<std::vector<std::string>> next(graphs.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const auto& g = graphs[gi];
      for (std::size_t t = 0; t < tuples[gi].size(); ++t) {
        const auto& s = tuples[gi][t];
        std::string sig = color[gi][t] + "|";
        if (use_full) {
          std::vector<std::string> per_vertex;
          for (NodeIndex v = 0; v < g.node_count(); ++v) {
            std::string vec = "(";
            for (std::size_t j = 0; j < k; ++j) {
              Tuple u = s;
              u[j] = v;
              vec += color[gi][where[gi].at(u)] + ",";
            }
            per_vertex.push_back(vec + ")");
          }
          std::sort(per_vertex.begin(), per_vertex.end());
          for (const auto& p : per_vertex) sig += p;
        } else {
          for (std::size_t j = 0; j < k; ++j) {
            std::vector<std::string> nb;
            for (NodeIndex v = 0; v < g.node_count(); ++v) {
              if (!edge(g, s[j], v)) continue;
              Tuple u = s;
              u[j] = v;
              auto it = where[gi].find(u);
              if (it != where[gi].end()) nb.push_back(color[gi][it->second]);
            }
            std::sort(nb.begin(), nb.end());
            sig += "[";
            for (const auto& c : nb) sig += c + ",";
            sig += "]";
          }
        }
        next[gi].push_back(sig);
      }
    }
    color = std::move(next);
    record();
  }
  return result;
}

/// Number of color classes of a single graph after `rounds` rounds.
inline std::size_t class_count(const DirectedGraph& g, std::size_t k, std::size_t rounds,
                               bool full) {
  return refine({g}, k, rounds, full).histograms[0].back().size();
}

// ---------------------------------------------------------------------------
// Dense forward pass of the tuple GNN.

inline Matrix dense_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < a.cols(); ++q) s += a(i, q) * b(q, j);
      out(i, j) = s;
    }
  return out;
}

inline Matrix dense_layer(const Matrix& x, const Matrix& w, const Matrix& b, bool act) {
  Matrix out = dense_mul(x, w);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(i, j) += b(0, j);
      if (act && out(i, j) < 0.0) out(i, j) = 0.0;
    }
  return out;
}

inline Matrix dense_mlp(const Matrix& x, const wlgnn::MlpParams& mlp) {
  Matrix h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const bool act = l + 1 < mlp.layers.size() || mlp.activate_output;
    h = dense_layer(h, mlp.layers[l].weight, mlp.layers[l].bias, act);
  }
  return h;
}

inline Matrix concat_cols(const std::vector<Matrix>& parts) {
  std::size_t cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix out(parts[0].rows(), cols);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t c = 0;
    for (const auto& p : parts)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, c++) = p(i, j);
  }
  return out;
}

/// Normalized adjacency with self-loops of position graph `position` as a
/// dense matrix over `tuples`.
inline Matrix dense_adjacency(const DirectedGraph& g, const std::vector<Tuple>& tuples,
                              std::size_t position) {
  const std::size_t n = tuples.size();
  Matrix a(n, n);
  std::map<Tuple, std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) idx[tuples[i]] = i;
  for (const auto& [s, t] : position_arcs(g, tuples, position)) {
    a(idx[s], idx[t]) = 1.0;
    a(idx[t], idx[s]) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

inline Matrix dense_gnn_forward(const DirectedGraph& g, const Matrix& features,
                                const wlgnn::GnnParams& p) {
  const std::size_t k = p.config.k;
  const auto tuples = restricted_tuples(g, k);
  const std::size_t d = features.cols();
  Matrix h(tuples.size(), k * d);
  for (std::size_t t = 0; t < tuples.size(); ++t)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < d; ++c) h(t, i * d + c) = features(tuples[t][i], c);

  std::vector<Matrix> adj;
  for (std::size_t j = 1; j <= k; ++j) adj.push_back(dense_adjacency(g, tuples, j));
  for (std::size_t layer = 0; layer < p.config.layers; ++layer) {
    std::vector<Matrix> per_position;
    for (std::size_t j = 0; j < k; ++j) {
      per_position.push_back(dense_layer(dense_mul(adj[j], h), p.gcn[layer][j].weight,
                                         p.gcn[layer][j].bias, true));
    }
    h = dense_mlp(concat_cols(per_position), p.fusion[layer]);
  }
  std::vector<Matrix> pooled;
  for (std::size_t i = 0; i < k; ++i) {
    Matrix x(g.node_count(), h.cols());
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      std::size_t count = 0;
      for (std::size_t t = 0; t < tuples.size(); ++t) {
        if (tuples[t][i] != v) continue;
        ++count;
        for (std::size_t c = 0; c < h.cols(); ++c) x(v, c) += h(t, c);
      }
      if (count)
        for (std::size_t c = 0; c < h.cols(); ++c) x(v, c) /= static_cast<double>(count);
    }
    pooled.push_back(x);
  }
  return dense_mlp(concat_cols(pooled), p.node_mlp);
}

// ---------------------------------------------------------------------------
// Finite differences.

/// (f(x + eps) - f(x - eps)) / (2 eps), restoring x afterwards.
template <typename F>
double central_difference(F&& f, double& x, double eps = 1e-5) {
  const double saved = x;
  x = saved + eps;
  const double up = f();
  x = saved - eps;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * eps);
}

/// Relative agreement with an absolute floor for gradients that vanish.
inline bool gradients_agree(double analytic, double numeric, double rel = 1e-5,
                            double abs_floor = 1e-9) {
  const double diff = std::fabs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::fabs(analytic), std::fabs(numeric));
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::fabs(analytic), std::fabs(numeric));
  return scale == 0.0 ? 0.0 : std::fabs(analytic - numeric) / scale;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a.values()[i] - b.values()[i]));
  }
  return m;
}

}  // namespace oracle
