#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "adaptk/curvature.hpp"
#include "adaptk/embedding.hpp"
#include "adaptk/neighbors.hpp"

namespace adaptk {

// What to do when the symmetrized neighbor graph has several components.
enum class DisconnectedPolicy { error, largest_component };

struct GeodesicMatrix {
  DistanceMatrix distances;
  std::vector<std::size_t> kept_indices;  // source point of each row; identity when connected
};

// Single-source shortest paths with a binary heap. Unreachable vertices stay at +inf.
inline std::vector<double> dijkstra(const UndirectedGraph& graph, std::size_t source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.size(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Neighbor& e : graph.adjacency[u]) {
      const double candidate = d + e.distance;
      if (candidate < dist[e.index]) {
        dist[e.index] = candidate;
        heap.emplace(candidate, e.index);
      }
    }
  }
  return dist;
}

namespace detail {
inline UndirectedGraph induced_subgraph(const UndirectedGraph& graph, const std::vector<std::size_t>& keep) {
  constexpr std::size_t dropped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(graph.size(), dropped);
  for (std::size_t r = 0; r < keep.size(); ++r) remap[keep[r]] = r;
  UndirectedGraph sub{std::vector<std::vector<Neighbor>>(keep.size())};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (const Neighbor& e : graph.adjacency[keep[r]]) {
      if (remap[e.index] != dropped) sub.adjacency[r].push_back({remap[e.index], e.distance});
    }
  }
  return sub;
}
}  // namespace detail

// All-pairs shortest paths over the symmetrized neighbor graph, one Dijkstra per source.
inline GeodesicMatrix geodesic_distances(const UndirectedGraph& full,
                                         DisconnectedPolicy policy = DisconnectedPolicy::error) {
  const Components comps = connected_components(full);
  std::vector<std::size_t> keep;
  if (comps.count > 1) {
    if (policy == DisconnectedPolicy::error) throw DisconnectedGraphError(comps.count);
    const auto sizes = comps.sizes();
    const std::size_t biggest =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < full.size(); ++i) {
      if (comps.labels[i] == biggest) keep.push_back(i);
    }
  } else {
    keep.resize(full.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
  }
  const UndirectedGraph graph = comps.count > 1 ? detail::induced_subgraph(full, keep) : full;

  const std::size_t n = graph.size();
  const auto en = static_cast<Eigen::Index>(n);
  Matrix g(en, en);
  parallel_for(n, [&](std::size_t s) {
    const auto dist = dijkstra(graph, s);
    for (std::size_t t = 0; t < n; ++t) g(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = dist[t];
  });
  // Path sums can differ in the last bit between the two directions; keep the row of the lower index.
  for (Eigen::Index i = 0; i < en; ++i) {
    for (Eigen::Index j = i + 1; j < en; ++j) g(j, i) = g(i, j);
  }
  return {DistanceMatrix(std::move(g), MetricTag::geodesic), std::move(keep)};
}

inline GeodesicMatrix geodesic_distances(const PointCloud& cloud, const NeighborGraph& graph,
                                         DisconnectedPolicy policy = DisconnectedPolicy::error) {
  if (graph.size() != cloud.size()) throw InvalidArgument("neighbor graph does not match point cloud");
  return geodesic_distances(symmetrize(graph), policy);
}

// B = -1/2 J D^2 J; Y = top-d eigenvectors scaled by sqrt(eigenvalue). Negative
// or missing eigenvalues among the top d give zero columns and a warning.
inline Embedding classical_mds(const DistanceMatrix& distances, std::size_t target_dim) {
  const std::size_t n = distances.size();
  if (target_dim < 1 || target_dim >= n) throw InvalidArgument("MDS needs 1 <= d < n");
  const auto en = static_cast<Eigen::Index>(n);

  Matrix b = distances.values().array().square().matrix();
  const Vector row_mean = b.rowwise().mean();
  const double grand_mean = row_mean.mean();
  b.colwise() -= row_mean;
  b.rowwise() -= row_mean.transpose();
  b.array() += grand_mean;
  b *= -0.5;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("MDS eigen-solver did not converge (n = " + std::to_string(n) + ")");
  }

  Embedding out;
  out.algorithm = Algorithm::isomap;
  out.coords = Matrix::Zero(en, static_cast<Eigen::Index>(target_dim));
  std::size_t non_positive = 0;
  for (std::size_t c = 0; c < target_dim; ++c) {
    const Eigen::Index src = en - 1 - static_cast<Eigen::Index>(c);
    const double lambda = eig.eigenvalues()(src);
    if (!(lambda > 0.0)) {
      ++non_positive;
      continue;
    }
    out.coords.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(src) * std::sqrt(lambda);
  }
  if (non_positive > 0) {
    out.warnings.push_back("only " + std::to_string(target_dim - non_positive) + " of " +
                           std::to_string(target_dim) +
                           " leading MDS eigenvalues are positive; remaining dimensions zero-filled");
  }
  out.coords.rowwise() -= out.coords.colwise().mean();
  detail::fix_column_signs(out.coords);
  return out;
}

inline Embedding isomap_embed(const PointCloud& cloud, const NeighborGraph& graph, std::size_t target_dim,
                              DisconnectedPolicy policy = DisconnectedPolicy::error) {
  GeodesicMatrix geo = geodesic_distances(cloud, graph, policy);
  Embedding e = classical_mds(geo.distances, target_dim);
  e.k_policy = graph.policy.tag();
  if (geo.kept_indices.size() != cloud.size()) {
    e.warnings.push_back("embedded largest component only: " + std::to_string(geo.kept_indices.size()) + " of " +
                         std::to_string(cloud.size()) + " points");
    e.kept_indices = std::move(geo.kept_indices);
  }
  return e;
}

}  // namespace adaptk
