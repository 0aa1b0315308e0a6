#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wlgnn/error.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/random.hpp"

namespace wlgnn {

enum class Split { train, test };

struct LabeledPair {
  NodeIndex source = 0;
  NodeIndex target = 0;
  int label = 0;  // 1 = prerequisite relation, 0 = none
  Split split = Split::train;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// Directed labelled examples with a train/test tag on each.
struct LabeledPairSet {
  std::vector<LabeledPair> pairs;

  std::vector<LabeledPair> select(Split s) const {
    std::vector<LabeledPair> out;
    std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
                 [s](const LabeledPair& p) { return p.split == s; });
    return out;
  }

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(std::count_if(
        pairs.begin(), pairs.end(), [s](const LabeledPair& p) { return p.split == s; }));
  }
};

namespace detail {

inline std::size_t floor_fraction(double ratio, std::size_t n) {
  // Guard against 0.29 * 100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

}  // namespace detail

/// Shuffles `items` with `seed` and tags the first floor(ratio * n) as train,
/// the rest as test. All pairs get `label`.
inline LabeledPairSet split_pairs(const std::vector<Edge>& items, double ratio,
                                  std::uint64_t seed, int label = 1) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0,1), got " + std::to_string(ratio));
  }
  if (items.empty()) throw ConfigError("split_pairs: nothing to split");
  std::vector<Edge> order = items;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = detail::floor_fraction(ratio, order.size());
  LabeledPairSet out;
  out.pairs.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.pairs.push_back({order[i].first, order[i].second, label,
                         i < n_train ? Split::train : Split::test});
  }
  return out;
}

/// Draws `count` negatives: a `reverse_share` fraction are reversed
/// positives (q,p) that are not themselves positive, the rest are uniform
/// ordered pairs (u != v) outside `excluded` and the already-drawn
/// negatives. When the reverse quota is fractional a coin decides whether it
/// rounds up; a shortfall in the reverse bucket is filled uniformly.
/// `excluded` must contain every positive.
inline std::vector<Edge> draw_negatives(const DirectedGraph& graph,
                                        const std::set<Edge>& positives,
                                        const std::set<Edge>& excluded, std::size_t count,
                                        Rng& rng, double reverse_share = 0.5) {
  if (!(reverse_share >= 0.0 && reverse_share <= 1.0)) {
    throw ConfigError("reverse share must lie in [0,1]");
  }
  if (count == 0) return {};
  const std::uint64_t n = graph.node_count();
  const std::uint64_t all_pairs = n * (n > 0 ? n - 1 : 0);

  const double reverse_exact = reverse_share * static_cast<double>(count);
  auto reverse_target = static_cast<std::size_t>(std::floor(reverse_exact));
  if (reverse_exact > static_cast<double>(reverse_target) && rng.coin()) ++reverse_target;

  std::vector<Edge> reversed;
  for (const auto& [p, q] : positives) {
    if (!excluded.contains({q, p})) reversed.emplace_back(q, p);
  }
  rng.shuffle(reversed);
  if (reversed.size() > reverse_target) reversed.resize(reverse_target);

  std::set<Edge> taken(reversed.begin(), reversed.end());
  std::vector<Edge> out = reversed;
  const std::size_t random_needed = count - out.size();

  std::uint64_t blocked = taken.size();
  for (const auto& e : excluded) {
    if (e.first != e.second && e.first < n && e.second < n) ++blocked;
  }
  const std::uint64_t available = all_pairs - blocked;
  if (random_needed > available) {
    throw SamplingExhausted("requested " + std::to_string(count) + " negatives but only " +
                            std::to_string(available + taken.size()) +
                            " non-positive ordered pairs exist");
  }

  auto admissible = [&](const Edge& e) {
    return e.first != e.second && !excluded.contains(e) && !taken.contains(e);
  };
  if (available * 4 >= all_pairs) {
    // Dense enough for rejection sampling.
    while (out.size() < count) {
      const Edge e{static_cast<NodeIndex>(rng.index(n)), static_cast<NodeIndex>(rng.index(n))};
      if (!admissible(e)) continue;
      taken.insert(e);
      out.push_back(e);
    }
  } else {
    std::vector<Edge> pool;
    pool.reserve(available);
    for (NodeIndex u = 0; u < n; ++u) {
      for (NodeIndex v = 0; v < n; ++v) {
        if (admissible({u, v})) pool.emplace_back(u, v);
      }
    }
    for (std::size_t i = 0; i < random_needed; ++i) {
      const auto j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  }
  return out;
}

/// ceil(ratio * |positives|) negatives, deterministic in `seed`; see
/// draw_negatives for the composition.
inline std::vector<Edge> sample_negatives(const DirectedGraph& graph,
                                          const std::vector<Edge>& positives,
                                          std::uint64_t seed, double ratio = 1.0,
                                          double reverse_share = 0.5) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw ConfigError("negative ratio must be >= 0");
  }
  const auto wanted = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(positives.size()) - 1e-9));
  const std::set<Edge> positive_set(positives.begin(), positives.end());
  Rng rng(seed);
  return draw_negatives(graph, positive_set, positive_set, wanted, rng, reverse_share);
}

/// Splits positives by `ratio`, samples negatives against all positives and
/// splits those by the same ratio.
inline LabeledPairSet build_pair_set(const DirectedGraph& graph,
                                     const std::vector<Edge>& positives, double ratio,
                                     double negative_ratio, std::uint64_t seed,
                                     double reverse_share = 0.5) {
  LabeledPairSet set = split_pairs(positives, ratio, seed, 1);
  const auto negatives =
      sample_negatives(graph, positives, seed + 0x9e3779b97f4a7c15ull, negative_ratio,
                       reverse_share);
  if (!negatives.empty()) {
    auto neg = split_pairs(negatives, ratio, seed + 0x3c6ef372fe94f82aull, 0);
    set.pairs.insert(set.pairs.end(), neg.pairs.begin(), neg.pairs.end());
  }
  return set;
}

/// One row of a pair file.
struct PairRecord {
  NodeIndex source = 0;
  NodeIndex target = 0;
  std::optional<int> label;
};

/// Reads `source<TAB>target[<TAB>label]`; ids are resolved against `graph`.
inline std::vector<PairRecord> load_pairs(std::istream& in, const DirectedGraph& graph) {
  std::vector<PairRecord> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::strip_cr(raw);
    if (detail::is_blank_or_comment(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(line_no, "expected 'source<TAB>target[<TAB>label]'");
    }
    PairRecord rec;
    for (int i = 0; i < 2; ++i) {
      const auto idx = graph.find(fields[i]);
      if (!idx) {
        throw ValidationError(ValidationKind::unknown_node,
                              "line " + std::to_string(line_no) + ": unknown node '" +
                                  std::string(fields[i]) + "'");
      }
      (i == 0 ? rec.source : rec.target) = *idx;
    }
    if (fields.size() == 3) {
      if (fields[2] == "0") {
        rec.label = 0;
      } else if (fields[2] == "1") {
        rec.label = 1;
      } else {
        throw ParseError(line_no, "label must be 0 or 1");
      }
    }
    out.push_back(rec);
  }
  return out;
}

inline std::vector<PairRecord> load_pairs(std::string_view text, const DirectedGraph& graph) {
  std::istringstream in{std::string(text)};
  return load_pairs(in, graph);
}

}  // namespace wlgnn
