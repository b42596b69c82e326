#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "adaptk/core.hpp"

namespace adaptk {

enum class Algorithm { lle, isomap };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::lle ? "lle" : "isomap"; }

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "lle") return Algorithm::lle;
  if (name == "isomap") return Algorithm::isomap;
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "' (expected lle or isomap)");
}

// Low-dimensional output Y (n x d) with its provenance.
struct Embedding {
  Matrix coords;
  Algorithm algorithm = Algorithm::lle;
  std::string k_policy;               // KPolicy::tag()
  std::vector<std::string> warnings;  // e.g. clamped MDS eigenvalues
  std::vector<std::size_t> kept_indices;  // source rows, when only a component was embedded

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(coords.cols()); }
};

inline DistanceMatrix pairwise_euclidean(const Embedding& e) { return pairwise_euclidean(PointCloud(e.coords)); }

}  // namespace adaptk
