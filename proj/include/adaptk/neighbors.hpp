#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "adaptk/core.hpp"
#include "json.hpp"

namespace adaptk {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ascending distance, ties by ascending index.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

// How many neighbors each point gets: one global K, or a K per point.
class KPolicy {
 public:
  static KPolicy fixed(std::size_t k) { return KPolicy(k, {}); }
  static KPolicy per_point(std::vector<std::size_t> ks) { return KPolicy(0, std::move(ks)); }

  bool is_fixed() const noexcept { return per_point_.empty(); }
  std::size_t k(std::size_t i) const { return is_fixed() ? fixed_ : per_point_.at(i); }
  const std::vector<std::size_t>& per_point_values() const noexcept { return per_point_; }

  // "fixed(8)" or "adaptive".
  std::string tag() const { return is_fixed() ? "fixed(" + std::to_string(fixed_) + ")" : "adaptive"; }

 private:
  KPolicy(std::size_t k, std::vector<std::size_t> ks) : fixed_(k), per_point_(std::move(ks)) {}

  std::size_t fixed_;
  std::vector<std::size_t> per_point_;
};

// Per-point neighbor lists sorted by neighbor_less; no list contains its own point.
struct NeighborGraph {
  std::vector<std::vector<Neighbor>> lists;
  KPolicy policy = KPolicy::fixed(0);

  std::size_t size() const noexcept { return lists.size(); }
  const std::vector<Neighbor>& neighbors(std::size_t i) const { return lists.at(i); }
};

// The k nearest points to point i, excluding i itself.
inline std::vector<Neighbor> nearest_neighbors(const PointCloud& cloud, std::size_t i, std::size_t k) {
  const std::size_t n = cloud.size();
  if (i >= n) throw InvalidArgument("point index " + std::to_string(i) + " out of range");
  if (k < 1 || k >= n) {
    throw InvalidArgument("point " + std::to_string(i) + ": k = " + std::to_string(k) +
                          " outside [1, n-1] with n = " + std::to_string(n));
  }
  const Matrix& x = cloud.points();
  const auto row = x.row(static_cast<Eigen::Index>(i));
  std::vector<Neighbor> candidates;
  candidates.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    candidates.push_back({j, (x.row(static_cast<Eigen::Index>(j)) - row).norm()});
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(),
                    neighbor_less);
  candidates.resize(k);
  return candidates;
}

// Exact brute-force kNN under the deterministic tie rule.
inline NeighborGraph knn(const PointCloud& cloud, const KPolicy& policy) {
  const std::size_t n = cloud.size();
  if (!policy.is_fixed() && policy.per_point_values().size() != n) {
    throw InvalidArgument("per-point K has " + std::to_string(policy.per_point_values().size()) +
                          " entries for " + std::to_string(n) + " points");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = policy.k(i);
    if (k < 1 || k >= n) {
      throw InvalidArgument("point " + std::to_string(i) + ": k = " + std::to_string(k) +
                            " outside [1, n-1] with n = " + std::to_string(n));
    }
    if (policy.is_fixed()) break;
  }

  NeighborGraph graph{std::vector<std::vector<Neighbor>>(n), policy};
  parallel_for(n, [&](std::size_t i) { graph.lists[i] = nearest_neighbors(cloud, i, policy.k(i)); });
  return graph;
}

// Undirected weighted graph; adjacency lists sorted by neighbor index.
struct UndirectedGraph {
  std::vector<std::vector<Neighbor>> adjacency;

  std::size_t size() const noexcept { return adjacency.size(); }
  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& adj : adjacency) twice += adj.size();
    return twice / 2;
  }
};

// Edge {i,j} exists iff j is a neighbor of i or i a neighbor of j.
inline UndirectedGraph symmetrize(const NeighborGraph& graph) {
  const std::size_t n = graph.size();
  UndirectedGraph out{std::vector<std::vector<Neighbor>>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (const Neighbor& nb : graph.lists[i]) {
      out.adjacency[i].push_back(nb);
      out.adjacency[nb.index].push_back({i, nb.distance});
    }
  }
  for (auto& adj : out.adjacency) {
    std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    adj.erase(std::unique(adj.begin(), adj.end(),
                          [](const Neighbor& a, const Neighbor& b) { return a.index == b.index; }),
              adj.end());
  }
  return out;
}

struct Components {
  std::vector<std::size_t> labels;  // labels numbered by lowest member index
  std::size_t count = 0;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(count, 0);
    for (std::size_t l : labels) ++s[l];
    return s;
  }
};

inline Components connected_components(const UndirectedGraph& graph) {
  const std::size_t n = graph.size();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  Components c{std::vector<std::size_t>(n, unset), 0};
  std::queue<std::size_t> frontier;
  for (std::size_t start = 0; start < n; ++start) {
    if (c.labels[start] != unset) continue;
    c.labels[start] = c.count;
    frontier.push(start);
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      for (const Neighbor& nb : graph.adjacency[u]) {
        if (c.labels[nb.index] == unset) {
          c.labels[nb.index] = c.count;
          frontier.push(nb.index);
        }
      }
    }
    ++c.count;
  }
  return c;
}

// JSON form: [[{"index": j, "distance": d}, ...], ...]
inline nlohmann::json to_json(const NeighborGraph& graph) {
  nlohmann::json lists = nlohmann::json::array();
  for (const auto& list : graph.lists) {
    nlohmann::json row = nlohmann::json::array();
    for (const Neighbor& nb : list) row.push_back({{"index", nb.index}, {"distance", nb.distance}});
    lists.push_back(std::move(row));
  }
  return lists;
}

inline NeighborGraph neighbor_graph_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("neighbor graph JSON must be an array of arrays", 0);
  const std::size_t n = j.size();
  NeighborGraph graph;
  graph.lists.resize(n);
  std::vector<std::size_t> ks(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array()) throw ParseError("neighbor list " + std::to_string(i) + " is not an array", 0);
    for (const auto& e : j[i]) {
      const Neighbor nb{e.at("index").get<std::size_t>(), e.at("distance").get<double>()};
      if (nb.index >= n || nb.index == i) {
        throw ParseError("neighbor list " + std::to_string(i) + " has invalid index", 0);
      }
      graph.lists[i].push_back(nb);
    }
    ks[i] = graph.lists[i].size();
  }
  const bool uniform = n > 0 && std::all_of(ks.begin(), ks.end(), [&](std::size_t k) { return k == ks[0]; });
  graph.policy = uniform ? KPolicy::fixed(ks[0]) : KPolicy::per_point(std::move(ks));
  return graph;
}

}  // namespace adaptk
