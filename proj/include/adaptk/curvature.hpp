#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptk/core.hpp"
#include "adaptk/neighbors.hpp"

namespace adaptk {

// Neighborhood size used to estimate the local Jacobian bound:
// 8 when D < d, otherwise 4d. Kept literal even though D < d is an ill-posed regime.
inline std::size_t estimation_neighborhood_size(std::size_t ambient_dim, std::size_t target_dim) {
  if (ambient_dim < 1 || target_dim < 1) throw InvalidArgument("dimensions must be >= 1");
  return ambient_dim < target_dim ? 8 : 4 * target_dim;
}

// How the per-neighbor quotients q_j are reduced to one value per point.
enum class Aggregation { max, mean };

inline std::string_view to_string(Aggregation a) { return a == Aggregation::max ? "max" : "mean"; }

struct CurvatureConfig {
  std::size_t estimation_size = 8;  // N
  std::size_t rank = 2;             // r, retained tangent directions
  std::size_t target_dim = 2;       // d
  Aggregation aggregation = Aggregation::max;

  // N from estimation_neighborhood_size, r = d.
  static CurvatureConfig for_dimensions(std::size_t ambient_dim, std::size_t target_dim) {
    return {estimation_neighborhood_size(ambient_dim, target_dim), target_dim, target_dim, Aggregation::max};
  }

  void validate(const PointCloud& cloud) const {
    if (rank < 1) throw InvalidArgument("curvature rank must be >= 1");
    if (estimation_size < rank) throw InvalidArgument("estimation size N must be >= rank r");
    if (estimation_size >= cloud.size()) {
      throw InvalidArgument("estimation size N = " + std::to_string(estimation_size) +
                            " must be < n = " + std::to_string(cloud.size()));
    }
    if (rank > cloud.dimension()) throw InvalidArgument("rank r exceeds ambient dimension");
  }
};

// Local PCA of a neighborhood N_i: centroid, r leading left singular vectors of
// the centered D x N neighbor matrix, and each neighbor's coordinates in that basis.
struct LocalFrame {
  Vector center;           // D
  Matrix basis;            // D x r, orthonormal columns
  Matrix coords;           // r x N, column j = basis^T (x_ij - center)
  Vector singular_values;  // min(D, N), descending
  double diameter = 0.0;   // largest distance between two neighbors

  std::size_t rank() const noexcept { return static_cast<std::size_t>(basis.cols()); }
  std::size_t neighbor_count() const noexcept { return static_cast<std::size_t>(coords.cols()); }
};

namespace detail {
// Flip each column so its largest-magnitude entry is positive.
inline void fix_column_signs(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index arg = 0;
    m.col(c).cwiseAbs().maxCoeff(&arg);
    if (m(arg, c) < 0.0) m.col(c) *= -1.0;
  }
}
}  // namespace detail

inline LocalFrame local_frame(const PointCloud& cloud, std::span<const Neighbor> neighborhood, std::size_t rank) {
  const auto dim = static_cast<Eigen::Index>(cloud.dimension());
  const auto count = static_cast<Eigen::Index>(neighborhood.size());
  if (count < 1) throw InvalidArgument("local frame needs at least one neighbor");
  if (rank < 1 || static_cast<Eigen::Index>(rank) > std::min(dim, count)) {
    throw InvalidArgument("rank r must satisfy 1 <= r <= min(D, N)");
  }

  Matrix centered(dim, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    centered.col(j) = cloud.point(neighborhood[static_cast<std::size_t>(j)].index).transpose();
  }
  LocalFrame frame;
  frame.center = centered.rowwise().mean();
  for (Eigen::Index a = 0; a < count; ++a) {
    for (Eigen::Index b = a + 1; b < count; ++b) {
      frame.diameter = std::max(frame.diameter, (centered.col(a) - centered.col(b)).norm());
    }
  }
  centered.colwise() -= frame.center;

  // Full U so the basis keeps r orthonormal columns even when the spread has lower rank.
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullU);
  frame.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(rank));
  detail::fix_column_signs(frame.basis);
  frame.singular_values = svd.singularValues();
  frame.coords = frame.basis.transpose() * centered;
  return frame;
}

inline LocalFrame local_frame(const PointCloud& cloud, std::size_t i, std::size_t estimation_size,
                              std::size_t rank) {
  const auto neighborhood = nearest_neighbors(cloud, i, estimation_size);
  return local_frame(cloud, neighborhood, rank);
}

// Per-neighbor quotients q_j = (|center - x_i| + |basis * coords_j|) / |coords_j|
// for neighbors whose tangent coordinates are not negligible (> 1e-12 * diameter).
inline std::vector<double> jacobian_quotients(const LocalFrame& frame, const Eigen::Ref<const Vector>& x_i) {
  const double offset = (frame.center - x_i).norm();
  const double floor = 1e-12 * frame.diameter;
  std::vector<double> q;
  q.reserve(frame.neighbor_count());
  for (Eigen::Index j = 0; j < frame.coords.cols(); ++j) {
    const double theta = frame.coords.col(j).norm();
    if (!(theta > floor) || theta == 0.0) continue;
    q.push_back((offset + (frame.basis * frame.coords.col(j)).norm()) / theta);
  }
  return q;
}

namespace detail {
inline std::optional<double> aggregate(const std::vector<double>& q, Aggregation how) {
  if (q.empty()) return std::nullopt;
  if (how == Aggregation::max) return *std::max_element(q.begin(), q.end());
  double sum = 0.0;
  for (double v : q) sum += v;
  return sum / static_cast<double>(q.size());
}
}  // namespace detail

// Lower bound on the local Jacobian norm. A neighborhood with no usable probe
// direction returns 1, the identity-map bound.
inline double jacobian_lower_bound(const LocalFrame& frame, const Eigen::Ref<const Vector>& x_i,
                                   Aggregation how = Aggregation::max) {
  return detail::aggregate(jacobian_quotients(frame, x_i), how).value_or(1.0);
}

struct CurvatureField {
  std::vector<double> j_inf;
  std::vector<bool> degenerate;  // true where the sentinel value 1 was used
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  NeighborGraph neighborhoods;  // the N_i used for estimation
  CurvatureConfig config;

  std::size_t size() const noexcept { return j_inf.size(); }
  double min() const { return *std::min_element(j_inf.begin(), j_inf.end()); }
  double max() const { return *std::max_element(j_inf.begin(), j_inf.end()); }
  std::size_t degenerate_count() const {
    return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
  }
};

namespace detail {
inline void fill_statistics(CurvatureField& field) {
  const auto [lo, hi] = std::minmax_element(field.j_inf.begin(), field.j_inf.end());
  if (*lo == *hi) {  // summation rounding would otherwise leave an ulp-sized spread
    field.mean = *lo;
    field.std_dev = 0.0;
    return;
  }
  const auto n = static_cast<double>(field.j_inf.size());
  double sum = 0.0;
  for (double v : field.j_inf) sum += v;
  field.mean = sum / n;
  double ss = 0.0;
  for (double v : field.j_inf) ss += (v - field.mean) * (v - field.mean);
  field.std_dev = std::sqrt(ss / n);
}
}  // namespace detail

// Builds a field from explicit per-point values (e.g. a reloaded export); the
// estimation neighborhoods are left empty.
inline CurvatureField curvature_field_from_values(std::vector<double> j_inf) {
  if (j_inf.empty()) throw InvalidArgument("curvature field needs at least one value");
  for (double v : j_inf) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("curvature values must be finite and >= 0");
  }
  CurvatureField field;
  field.degenerate.assign(j_inf.size(), false);
  field.j_inf = std::move(j_inf);
  detail::fill_statistics(field);
  return field;
}

inline CurvatureField curvature_field(const PointCloud& cloud, const CurvatureConfig& config) {
  config.validate(cloud);
  const std::size_t n = cloud.size();
  CurvatureField field;
  field.config = config;
  field.neighborhoods = knn(cloud, KPolicy::fixed(config.estimation_size));
  field.j_inf.assign(n, 1.0);
  std::vector<char> degenerate(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const LocalFrame frame = local_frame(cloud, field.neighborhoods.lists[i], config.rank);
    const auto value =
        detail::aggregate(jacobian_quotients(frame, cloud.point(i).transpose()), config.aggregation);
    field.j_inf[i] = value.value_or(1.0);
    degenerate[i] = value ? 0 : 1;
  });
  field.degenerate.assign(degenerate.begin(), degenerate.end());
  detail::fill_statistics(field);
  return field;
}

// CSV with header "index,j_inf".
inline void write_curvature_csv(const CurvatureField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "index,j_inf\n";
  for (std::size_t i = 0; i < field.size(); ++i) out << i << ',' << format_double(field.j_inf[i]) << '\n';
}

inline nlohmann::json to_json(const CurvatureField& field) {
  return {{"j_inf", field.j_inf},
          {"mean", field.mean},
          {"std_dev", field.std_dev},
          {"min", field.min()},
          {"max", field.max()},
          {"degenerate_count", field.degenerate_count()},
          {"estimation_size", field.config.estimation_size},
          {"rank", field.config.rank},
          {"aggregation", to_string(field.config.aggregation)}};
}

}  // namespace adaptk
