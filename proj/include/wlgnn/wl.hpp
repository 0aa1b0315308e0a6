#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/tuples.hpp"

namespace wlgnn {

/// Which tuple space and neighborhood the refinement runs on.
///
/// `full`: every tuple of V^k; a round collects, for each vertex v, the
/// k-vector of colors of the tuples obtained by writing v into position
/// 1..k, and takes the multiset of those vectors over v. At k = 1 this
/// aggregation carries no adjacency, so k = 1 falls back to out-neighbor
/// refinement (identical to `restricted`).
///
/// `restricted`: only the restricted tuples, refined along the arcs of the
/// k position graphs, one sorted multiset per position, combined in position
/// order. This is the structure the GNN passes messages over.
enum class WlMode { full, restricted };

using Color = std::uint32_t;

struct ColorMap {
  std::vector<Color> colors;  // per tuple, dense 0..class_count-1
  std::size_t class_count = 0;
  std::size_t iteration = 0;  // refinement rounds performed
  bool stable = false;
};

struct WlVerdict {
  bool distinguished = false;
  std::size_t rounds = 0;  // rounds performed before the verdict
};

namespace detail {

struct VecHash {
  std::size_t operator()(const std::vector<Color>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto x : v) {
      h ^= x;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Injective signature -> dense color table, filled in first-occurrence order.
class ColorTable {
 public:
  Color intern(const std::vector<Color>& signature) {
    auto [it, inserted] = table_.try_emplace(signature, static_cast<Color>(table_.size()));
    return it->second;
  }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::unordered_map<std::vector<Color>, Color, VecHash> table_;
};

/// Equalities S[i] = S[j] (i < j) and directed edges S[i] -> S[j] (i != j),
/// packed as bits.
inline Color atomic_type(const DirectedGraph& g, std::span<const NodeIndex> s) {
  Color bits = 0;
  unsigned b = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j, ++b) {
      if (s[i] == s[j]) bits |= 1u << b;
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i == j) continue;
      if (g.has_edge(s[i], s[j])) bits |= 1u << b;
      ++b;
    }
  }
  return bits;
}

/// Tuple space of one graph plus the neighbor structure used in a round.
class TupleSpace {
 public:
  TupleSpace(const DirectedGraph& g, std::size_t k, WlMode mode)
      : graph_(&g), k_(k), mode_(k == 1 ? WlMode::restricted : mode) {
    if (mode_ == WlMode::restricted) {
      restricted_ = enumerate_tuples(g, k);
      const auto pgs = build_position_graphs(g, restricted_);
      const auto n = restricted_.size();
      offsets_.assign(k, std::vector<std::size_t>(n + 1, 0));
      targets_.assign(k, {});
      for (std::size_t j = 0; j < k; ++j) {
        for (const auto& [s, t] : pgs[j].arcs) ++offsets_[j][s + 1];
        for (std::size_t s = 0; s < n; ++s) offsets_[j][s + 1] += offsets_[j][s];
        targets_[j].reserve(pgs[j].arcs.size());
        for (const auto& [s, t] : pgs[j].arcs) targets_[j].push_back(t);
      }
      size_ = n;
    } else {
      size_ = 1;
      for (std::size_t i = 0; i < k; ++i) size_ *= g.node_count();
    }
  }

  std::size_t size() const noexcept { return size_; }

  std::vector<NodeIndex> tuple(std::size_t t) const {
    if (mode_ == WlMode::restricted) {
      const auto s = restricted_[t];
      return {s.begin(), s.end()};
    }
    std::vector<NodeIndex> out(k_);
    const std::size_t n = graph_->node_count();
    for (std::size_t i = k_; i-- > 0;) {
      out[i] = static_cast<NodeIndex>(t % n);
      t /= n;
    }
    return out;
  }

  Color initial_signature(std::size_t t) const { return atomic_type(*graph_, tuple(t)); }

  /// Appends the neighborhood part of tuple t's signature under `colors`.
  void neighborhood(std::size_t t, const std::vector<Color>& colors,
                    std::vector<Color>& sig) const {
    if (mode_ == WlMode::restricted) {
      std::vector<Color> bucket;
      for (std::size_t j = 0; j < k_; ++j) {
        bucket.clear();
        for (auto p = offsets_[j][t]; p < offsets_[j][t + 1]; ++p) {
          bucket.push_back(colors[targets_[j][p]]);
        }
        std::sort(bucket.begin(), bucket.end());
        sig.push_back(static_cast<Color>(bucket.size()));
        sig.insert(sig.end(), bucket.begin(), bucket.end());
      }
      return;
    }
    const std::size_t n = graph_->node_count();
    // Place value of each position in the base-n tuple index.
    std::vector<std::size_t> stride(k_, 1);
    for (std::size_t i = k_ - 1; i-- > 0;) stride[i] = stride[i + 1] * n;
    const auto s = tuple(t);
    std::vector<std::vector<Color>> per_vertex(n, std::vector<Color>(k_));
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t j = 0; j < k_; ++j) {
        const std::size_t sub = t - s[j] * stride[j] + v * stride[j];
        per_vertex[v][j] = colors[sub];
      }
    }
    std::sort(per_vertex.begin(), per_vertex.end());
    for (const auto& vec : per_vertex) sig.insert(sig.end(), vec.begin(), vec.end());
  }

 private:
  const DirectedGraph* graph_;
  std::size_t k_;
  WlMode mode_;
  std::size_t size_ = 0;
  TupleSet restricted_;
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<std::vector<TupleIndex>> targets_;
};

/// Refines several graphs' tuple spaces with one shared color table per
/// round. `on_round(colorings, round)` is called after the initial coloring
/// (round 0) and after each round; returning true stops early.
template <typename OnRound>
std::vector<ColorMap> refine_jointly(std::span<const DirectedGraph> graphs, std::size_t k,
                                     std::size_t max_iters, WlMode mode, OnRound&& on_round) {
  check_tuple_order(k);
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  std::vector<TupleSpace> spaces;
  spaces.reserve(graphs.size());
  for (const auto& g : graphs) spaces.emplace_back(g, k, mode);

  std::vector<ColorMap> maps(graphs.size());
  {
    ColorTable table;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      maps[gi].colors.resize(spaces[gi].size());
      for (std::size_t t = 0; t < spaces[gi].size(); ++t) {
        maps[gi].colors[t] = table.intern({spaces[gi].initial_signature(t)});
      }
    }
    for (auto& m : maps) m.class_count = table.size();
  }
  if (on_round(maps, std::size_t{0})) return maps;

  std::vector<Color> sig;
  for (std::size_t round = 1; round <= max_iters; ++round) {
    const std::size_t before = maps.front().class_count;
    ColorTable table;
    std::vector<std::vector<Color>> next(graphs.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      next[gi].resize(spaces[gi].size());
      for (std::size_t t = 0; t < spaces[gi].size(); ++t) {
        sig.clear();
        sig.push_back(maps[gi].colors[t]);
        spaces[gi].neighborhood(t, maps[gi].colors, sig);
        next[gi][t] = table.intern(sig);
      }
    }
    // The old color leads every signature, so the new partition refines the
    // old one and equal class counts mean equal partitions.
    const bool stable = table.size() == before;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      maps[gi].colors = std::move(next[gi]);
      maps[gi].class_count = table.size();
      maps[gi].iteration = round;
      maps[gi].stable = stable;
    }
    if (on_round(maps, round) || stable) break;
  }
  return maps;
}

}  // namespace detail

/// Colors the tuples of `graph` until the partition stops changing or
/// `max_iters` rounds have run. Tuples are indexed lexicographically: for
/// `full`, tuple (s_1..s_k) has index sum s_i * N^(k-i); for `restricted`,
/// indices match enumerate_tuples.
inline ColorMap wl_refine(const DirectedGraph& graph, std::size_t k, std::size_t max_iters,
                          WlMode mode = WlMode::full) {
  auto maps = detail::refine_jointly(std::span(&graph, 1), k, max_iters, mode,
                                     [](const auto&, std::size_t) { return false; });
  return std::move(maps.front());
}

/// Class sizes indexed by color.
inline std::vector<std::size_t> color_histogram(const ColorMap& map) {
  std::vector<std::size_t> hist(map.class_count, 0);
  for (auto c : map.colors) ++hist[c];
  return hist;
}

/// Refines both graphs with a shared color table and reports whether the
/// color histograms ever differ. `distinguished == false` is not a proof of
/// isomorphism.
inline WlVerdict compare_graphs(const DirectedGraph& g1, const DirectedGraph& g2,
                                std::size_t k, std::size_t max_iters,
                                WlMode mode = WlMode::full) {
  const DirectedGraph pair[2] = {g1, g2};
  WlVerdict verdict;
  detail::refine_jointly(std::span<const DirectedGraph>(pair, 2), k, max_iters, mode,
                         [&](const std::vector<ColorMap>& maps, std::size_t round) {
                           verdict.rounds = round;
                           if (color_histogram(maps[0]) != color_histogram(maps[1])) {
                             verdict.distinguished = true;
                             return true;
                           }
                           return false;
                         });
  return verdict;
}

inline bool distinguish(const DirectedGraph& g1, const DirectedGraph& g2, std::size_t k,
                        std::size_t max_iters, WlMode mode = WlMode::full) {
  return compare_graphs(g1, g2, k, max_iters, mode).distinguished;
}

/// `tuple_idx<TAB>color` lines followed by `# histogram c:n c:n ...`.
inline void write_color_dump(std::ostream& out, const ColorMap& map) {
  for (std::size_t t = 0; t < map.colors.size(); ++t) out << t << '\t' << map.colors[t] << '\n';
  out << "# histogram";
  const auto hist = color_histogram(map);
  for (std::size_t c = 0; c < hist.size(); ++c) {
    if (hist[c]) out << ' ' << c << ':' << hist[c];
  }
  out << '\n';
}

}  // namespace wlgnn
