#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/matrix.hpp"

namespace wlgnn {

inline constexpr std::size_t kMaxTupleOrder = 3;

using TupleIndex = std::uint32_t;

/// Restricted directed k-tuples: s_1 is free, and every later s_i is equal to
/// or an out-neighbor of some earlier s_j. Stored flat, lexicographically
/// sorted, with an exact inverse index.
class TupleSet {
 public:
  TupleSet() = default;

  TupleSet(std::size_t k, std::size_t node_count, std::vector<NodeIndex> flat)
      : k_(k), node_count_(node_count), flat_(std::move(flat)) {
    index_.reserve(size());
    for (std::size_t t = 0; t < size(); ++t) {
      index_.emplace(key((*this)[t]), static_cast<TupleIndex>(t));
    }
  }

  std::size_t order() const noexcept { return k_; }
  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t size() const noexcept { return k_ == 0 ? 0 : flat_.size() / k_; }

  std::span<const NodeIndex> operator[](std::size_t t) const {
    return {flat_.data() + t * k_, k_};
  }

  std::optional<TupleIndex> find(std::span<const NodeIndex> tuple) const {
    auto it = index_.find(key(tuple));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<NodeIndex>& flat() const noexcept { return flat_; }

 private:
  std::uint64_t key(std::span<const NodeIndex> tuple) const {
    std::uint64_t h = 0;
    for (auto v : tuple) h = h * node_count_ + v;
    return h;
  }

  std::size_t k_ = 0;
  std::size_t node_count_ = 0;
  std::vector<NodeIndex> flat_;
  std::unordered_map<std::uint64_t, TupleIndex> index_;
};

/// Arcs S -> T where T replaces position `position` (1-based) of S by one of
/// that vertex's out-neighbors. Sorted by (source, target).
struct PositionGraph {
  std::size_t position = 1;
  std::size_t tuple_count = 0;
  std::vector<std::pair<TupleIndex, TupleIndex>> arcs;
};

inline void check_tuple_order(std::size_t k) {
  if (k < 1 || k > kMaxTupleOrder) {
    throw ConfigError("tuple order k must be in 1.." + std::to_string(kMaxTupleOrder) +
                      ", got " + std::to_string(k));
  }
}

inline TupleSet enumerate_tuples(const DirectedGraph& graph, std::size_t k) {
  check_tuple_order(k);
  if (graph.node_count() == 0) throw ConfigError("enumerate_tuples: empty graph");
  std::vector<NodeIndex> flat;
  std::vector<NodeIndex> current(k);

  // Depth-first in ascending candidate order yields lexicographic output.
  auto extend = [&](auto&& self, std::size_t depth) -> void {
    if (depth == k) {
      flat.insert(flat.end(), current.begin(), current.end());
      return;
    }
    std::vector<NodeIndex> candidates;
    for (std::size_t j = 0; j < depth; ++j) {
      candidates.push_back(current[j]);
      const auto& out = graph.out_neighbors(current[j]);
      candidates.insert(candidates.end(), out.begin(), out.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (auto v : candidates) {
      current[depth] = v;
      self(self, depth + 1);
    }
  };

  for (NodeIndex s1 = 0; s1 < graph.node_count(); ++s1) {
    current[0] = s1;
    extend(extend, 1);
  }
  return TupleSet(k, graph.node_count(), std::move(flat));
}

inline PositionGraph build_position_graph(const DirectedGraph& graph, const TupleSet& tuples,
                                          std::size_t position) {
  const std::size_t k = tuples.order();
  if (position < 1 || position > k) {
    throw ConfigError("position must be in 1.." + std::to_string(k) + ", got " +
                      std::to_string(position));
  }
  const std::size_t j = position - 1;
  PositionGraph pg;
  pg.position = position;
  pg.tuple_count = tuples.size();
  std::vector<NodeIndex> scratch(k);
  for (std::size_t s = 0; s < tuples.size(); ++s) {
    const auto src = tuples[s];
    std::copy(src.begin(), src.end(), scratch.begin());
    const auto first = pg.arcs.size();
    for (auto v : graph.out_neighbors(src[j])) {
      scratch[j] = v;
      if (auto t = tuples.find(scratch)) {
        pg.arcs.emplace_back(static_cast<TupleIndex>(s), *t);
      }
    }
    std::sort(pg.arcs.begin() + static_cast<std::ptrdiff_t>(first), pg.arcs.end());
  }
  return pg;
}

inline std::vector<PositionGraph> build_position_graphs(const DirectedGraph& graph,
                                                        const TupleSet& tuples) {
  std::vector<PositionGraph> out;
  out.reserve(tuples.order());
  for (std::size_t j = 1; j <= tuples.order(); ++j) {
    out.push_back(build_position_graph(graph, tuples, j));
  }
  return out;
}

/// Row for tuple S is [n_{s_1} : ... : n_{s_k}].
inline FeatureMatrix initial_tuple_features(const TupleSet& tuples,
                                            const FeatureMatrix& node_features) {
  if (node_features.rows() != tuples.node_count()) {
    throw ShapeError("node features have " + std::to_string(node_features.rows()) +
                     " rows for " + std::to_string(tuples.node_count()) + " nodes");
  }
  const std::size_t k = tuples.order();
  const std::size_t d = node_features.cols();
  FeatureMatrix out(tuples.size(), k * d);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    auto dst = out.row(t);
    const auto tuple = tuples[t];
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = node_features.row(tuple[i]);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  }
  return out;
}

/// `idx<TAB>s1,s2,...,sk` with external node ids.
inline void write_tuple_dump(std::ostream& out, const TupleSet& tuples,
                             const DirectedGraph& graph) {
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    out << t << '\t';
    const auto tuple = tuples[t];
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (i) out << ',';
      out << graph.node_ids()[tuple[i]];
    }
    out << '\n';
  }
}

/// `source_idx<TAB>target_idx` per arc.
inline void write_position_graph_dump(std::ostream& out, const PositionGraph& pg) {
  for (const auto& [s, t] : pg.arcs) out << s << '\t' << t << '\n';
}

}  // namespace wlgnn
