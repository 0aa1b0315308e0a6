#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/matrix.hpp"

namespace wlgnn {

using NodeIndex = std::uint32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

/// Immutable directed graph over internal indices 0..N-1.
///
/// Edges are kept sorted and duplicate-free; out/in adjacency lists are
/// sorted ascending. Self-loops are rejected.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  DirectedGraph(std::vector<std::string> node_ids, std::vector<Edge> edges)
      : node_ids_(std::move(node_ids)), edges_(std::move(edges)) {
    const auto n = node_ids_.size();
    index_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!index_.emplace(node_ids_[i], static_cast<NodeIndex>(i)).second) {
        throw ValidationError(ValidationKind::duplicate_node,
                              "duplicate node id '" + node_ids_[i] + "'");
      }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    out_adj_.assign(n, {});
    in_adj_.assign(n, {});
    for (const auto& [u, v] : edges_) {
      if (u >= n || v >= n) {
        throw ValidationError(ValidationKind::unknown_node,
                              "edge endpoint out of range");
      }
      if (u == v) {
        throw ValidationError(ValidationKind::self_loop,
                              "self-loop on '" + node_ids_[u] + "'");
      }
      out_adj_[u].push_back(v);
      in_adj_[v].push_back(u);
    }
    for (auto& l : in_adj_) std::sort(l.begin(), l.end());
  }

  /// Graph with anonymous ids "0", "1", ... .
  static DirectedGraph from_edges(std::size_t node_count, std::vector<Edge> edges) {
    std::vector<std::string> ids(node_count);
    for (std::size_t i = 0; i < node_count; ++i) ids[i] = std::to_string(i);
    return DirectedGraph(std::move(ids), std::move(edges));
  }

  std::size_t node_count() const noexcept { return node_ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<NodeIndex>& out_neighbors(NodeIndex v) const { return out_adj_[v]; }
  const std::vector<NodeIndex>& in_neighbors(NodeIndex v) const { return in_adj_[v]; }

  bool has_edge(NodeIndex u, NodeIndex v) const {
    const auto& l = out_adj_[u];
    return std::binary_search(l.begin(), l.end(), v);
  }

  std::optional<NodeIndex> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Relabels vertex v as perm[v]; ids travel with their vertices.
  DirectedGraph permuted(const std::vector<NodeIndex>& perm) const {
    if (perm.size() != node_count()) throw ShapeError("permutation size mismatch");
    std::vector<std::string> ids(node_count());
    for (std::size_t v = 0; v < node_count(); ++v) ids[perm[v]] = node_ids_[v];
    std::vector<Edge> edges;
    edges.reserve(edges_.size());
    for (const auto& [u, v] : edges_) edges.emplace_back(perm[u], perm[v]);
    return DirectedGraph(std::move(ids), std::move(edges));
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.node_ids_ == b.node_ids_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::string> node_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeIndex>> out_adj_;
  std::vector<std::vector<NodeIndex>> in_adj_;
  std::unordered_map<std::string, NodeIndex> index_;
};

namespace detail {

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool is_blank_or_comment(std::string_view s) {
  const auto pos = s.find_first_not_of(" \t");
  return pos == std::string_view::npos || s[pos] == '#';
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i == s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Full-token decimal parse. "nan"/"inf" parse successfully (as non-finite).
inline std::optional<double> parse_double(std::string_view tok) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view tok) {
  Int v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads `source<TAB>target` lines. Blank lines and lines starting with '#'
/// are skipped. Node indices follow first appearance.
inline DirectedGraph load_edge_list(std::istream& in) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, NodeIndex> index;
  std::vector<Edge> edges;
  auto intern = [&](std::string_view id) {
    auto [it, inserted] = index.emplace(std::string(id), static_cast<NodeIndex>(ids.size()));
    if (inserted) ids.emplace_back(id);
    return it->second;
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank_or_comment(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(line_no, "expected 'source<TAB>target', got " +
                                    std::to_string(fields.size()) + " field(s)");
    }
    if (fields[0] == fields[1]) {
      throw ValidationError(ValidationKind::self_loop,
                            "line " + std::to_string(line_no) + ": self-loop on '" +
                                std::string(fields[0]) + "'");
    }
    const auto u = intern(fields[0]);
    const auto v = intern(fields[1]);
    edges.emplace_back(u, v);
  }
  return DirectedGraph(std::move(ids), std::move(edges));
}

inline DirectedGraph load_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_edge_list(in);
}

/// Writes `source<TAB>target` lines ordered so that reloading reproduces the
/// node indexing, which holds for any graph whose indices follow first
/// appearance (every graph produced by load_edge_list). Isolated nodes have
/// no line and are lost.
inline void write_edge_list(std::ostream& out, const DirectedGraph& g) {
  const auto& edges = g.edges();
  std::vector<bool> used(edges.size(), false);
  std::vector<Edge> order;
  order.reserve(edges.size());
  NodeIndex seen = 0;  // nodes [0, seen) already introduced
  auto take = [&](std::size_t e) {
    order.push_back(edges[e]);
    used[e] = true;
    seen = std::max({seen, static_cast<NodeIndex>(edges[e].first + 1),
                     static_cast<NodeIndex>(edges[e].second + 1)});
  };
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (v < seen) continue;
    std::optional<std::size_t> pick;
    for (std::size_t e = 0; e < edges.size() && !pick; ++e) {
      const auto [a, b] = edges[e];
      if ((a == v && (b < v || b == v + 1)) || (b == v && a < v)) pick = e;
    }
    for (std::size_t e = 0; e < edges.size() && !pick; ++e) {
      if (!used[e] && (edges[e].first == v || edges[e].second == v)) pick = e;
    }
    if (pick) take(*pick);
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!used[e]) order.push_back(edges[e]);
  }
  for (const auto& [u, v] : order) {
    out << g.node_ids()[u] << '\t' << g.node_ids()[v] << '\n';
  }
}

/// Reads an embedding file (`N d` header, then `node_id v1 ... vd`) and
/// reorders its rows to the graph's internal indices.
inline FeatureMatrix load_embeddings(std::istream& in, const DirectedGraph& g) {
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      out = detail::strip_cr(raw);
      if (!detail::is_blank_or_comment(out)) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(line_no, "missing 'N d' header");
  const auto header = detail::split_ws(line);
  if (header.size() != 2) throw ParseError(line_no, "header must be 'N d'");
  const auto rows = detail::parse_int<std::size_t>(header[0]);
  const auto dim = detail::parse_int<std::size_t>(header[1]);
  if (!rows || !dim || *dim == 0) throw ParseError(line_no, "header must be 'N d'");

  FeatureMatrix out(g.node_count(), *dim);
  std::vector<bool> filled(g.node_count(), false);
  std::size_t count = 0;
  while (next_line(line)) {
    const auto fields = detail::split_ws(line);
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != *dim + 1) {
      throw ValidationError(ValidationKind::dimension_mismatch,
                            where + "expected " + std::to_string(*dim) +
                                " values, got " + std::to_string(fields.size() - 1));
    }
    const auto node = g.find(fields[0]);
    if (!node) {
      throw ValidationError(ValidationKind::unknown_node,
                            where + "unknown node '" + std::string(fields[0]) + "'");
    }
    if (filled[*node]) {
      throw ValidationError(ValidationKind::duplicate_node,
                            where + "duplicate row for '" + std::string(fields[0]) + "'");
    }
    auto dst = out.row(*node);
    for (std::size_t j = 0; j < *dim; ++j) {
      const auto v = detail::parse_double(fields[j + 1]);
      if (!v) throw ParseError(line_no, "bad number '" + std::string(fields[j + 1]) + "'");
      if (!std::isfinite(*v)) {
        throw ValidationError(ValidationKind::non_finite,
                              where + "non-finite value for '" + std::string(fields[0]) + "'");
      }
      dst[j] = *v;
    }
    filled[*node] = true;
    ++count;
  }
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    if (!filled[v]) {
      throw ValidationError(ValidationKind::missing_node,
                            "no embedding for node '" + g.node_ids()[v] + "'");
    }
  }
  if (count != *rows) {
    throw ValidationError(ValidationKind::row_count,
                          "header declares " + std::to_string(*rows) + " rows, file has " +
                              std::to_string(count));
  }
  return out;
}

inline FeatureMatrix load_embeddings(std::string_view text, const DirectedGraph& g) {
  std::istringstream in{std::string(text)};
  return load_embeddings(in, g);
}

}  // namespace wlgnn
