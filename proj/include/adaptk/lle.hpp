#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "adaptk/curvature.hpp"
#include "adaptk/embedding.hpp"
#include "adaptk/neighbors.hpp"

namespace adaptk {

inline constexpr double kDefaultLleRegularization = 1e-3;

struct Weight {
  std::size_t index = 0;
  double value = 0.0;
};

// Sparse reconstruction weights; row i only references the neighbors of i.
struct WeightMatrix {
  std::vector<std::vector<Weight>> rows;

  std::size_t size() const noexcept { return rows.size(); }

  Matrix dense() const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (const Weight& e : rows[static_cast<std::size_t>(i)]) w(i, static_cast<Eigen::Index>(e.index)) = e.value;
    }
    return w;
  }
};

namespace detail {

// Minimizes w^T C w subject to sum(w) = 1 for a symmetric PSD Gram matrix that may
// be singular. With a null space, the zero-cost solution nearest the uniform
// direction is returned; otherwise the (pseudo-)inverse solution.
inline Vector constrained_gram_solve(const Matrix& gram) {
  const Eigen::Index k = gram.rows();
  const Vector ones = Vector::Ones(k);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("Gram eigen-decomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const Matrix& v = eig.eigenvectors();
  const double cutoff = 1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);

  Vector null_part = Vector::Zero(k);
  Vector range_part = Vector::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double proj = v.col(c).dot(ones);
    if (lambda(c) <= cutoff) {
      null_part += proj * v.col(c);
    } else {
      range_part += (proj / lambda(c)) * v.col(c);
    }
  }
  const double null_sum = null_part.sum();
  if (std::abs(null_sum) > 1e-10 * static_cast<double>(k)) return null_part / null_sum;
  const double range_sum = range_part.sum();
  if (std::abs(range_sum) > 0.0 && std::isfinite(range_sum)) return range_part / range_sum;
  return ones / static_cast<double>(k);
}

inline bool gram_is_singular(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const Vector& lambda = eig.eigenvalues();
  return lambda.minCoeff() <= 1e-12 * std::max(lambda.maxCoeff(), 0.0);
}

}  // namespace detail

// Row i minimizes |x_i - sum_j w_ij x_ij|^2 with sum_j w_ij = 1. When k_i > d or
// the local Gram matrix is singular, reg * trace(Gram) is added to its diagonal.
inline WeightMatrix reconstruction_weights(const PointCloud& cloud, const NeighborGraph& graph,
                                           std::size_t target_dim, double reg = kDefaultLleRegularization) {
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw InvalidArgument("regularization must be finite and >= 0");
  if (graph.size() != cloud.size()) throw InvalidArgument("neighbor graph does not match point cloud");
  const std::size_t n = cloud.size();
  WeightMatrix w{std::vector<std::vector<Weight>>(n)};

  parallel_for(n, [&](std::size_t i) {
    const auto& nbrs = graph.lists[i];
    const auto k = static_cast<Eigen::Index>(nbrs.size());
    if (k == 0) throw InvalidArgument("point " + std::to_string(i) + " has no neighbors");
    Matrix z(k, static_cast<Eigen::Index>(cloud.dimension()));
    for (Eigen::Index j = 0; j < k; ++j) z.row(j) = cloud.point(nbrs[static_cast<std::size_t>(j)].index) - cloud.point(i);
    Matrix gram = z * z.transpose();
    const double trace = gram.trace();

    Vector solved;
    if (!(trace > 0.0)) {
      solved = Vector::Constant(k, 1.0 / static_cast<double>(k));
    } else {
      if (static_cast<std::size_t>(k) > target_dim || detail::gram_is_singular(gram)) {
        gram.diagonal().array() += reg * trace;
      }
      solved = detail::constrained_gram_solve(gram);
    }

    auto& row = w.rows[i];
    row.resize(nbrs.size());
    for (std::size_t j = 0; j < nbrs.size(); ++j) row[j] = {nbrs[j].index, solved(static_cast<Eigen::Index>(j))};
  });
  return w;
}

// M = (I - W)^T (I - W).
inline Matrix alignment_matrix(const WeightMatrix& weights) {
  const auto n = static_cast<Eigen::Index>(weights.size());
  Matrix a = Matrix::Identity(n, n) - weights.dense();
  Matrix m(n, n);
  m.noalias() = a.transpose() * a;
  return m;
}

// Eigenvectors 2..d+1 of M (ascending), scaled by sqrt(n), each column signed so
// its largest-magnitude entry is positive.
inline Embedding lle_embed(const WeightMatrix& weights, std::size_t target_dim) {
  const std::size_t n = weights.size();
  if (target_dim < 1 || target_dim >= n) throw InvalidArgument("LLE needs 1 <= d < n");
  const Matrix m = alignment_matrix(weights);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("LLE eigen-solver did not converge (n = " + std::to_string(n) + ")");
  }
  const Vector& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, std::abs(lambda(lambda.size() - 1)));
  if (std::abs(lambda(0)) > 1e-8 * scale) {
    throw NumericalError("LLE alignment matrix has no null vector (smallest eigenvalue " +
                         format_double(lambda(0)) + "); weight rows may not sum to 1");
  }

  Embedding out;
  out.algorithm = Algorithm::lle;
  Matrix y = eig.eigenvectors().middleCols(1, static_cast<Eigen::Index>(target_dim));
  // The constant vector is an exact null vector of M; project its residue out of
  // the near-degenerate eigenvectors and re-orthonormalize in column order.
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    y.col(c).array() -= y.col(c).mean();
    for (Eigen::Index p = 0; p < c; ++p) y.col(c) -= y.col(p).dot(y.col(c)) * y.col(p);
    y.col(c).normalize();
  }
  out.coords = y * std::sqrt(static_cast<double>(n));
  detail::fix_column_signs(out.coords);
  return out;
}

inline Embedding lle(const PointCloud& cloud, const NeighborGraph& graph, std::size_t target_dim,
                     double reg = kDefaultLleRegularization) {
  Embedding e = lle_embed(reconstruction_weights(cloud, graph, target_dim, reg), target_dim);
  e.k_policy = graph.policy.tag();
  return e;
}

}  // namespace adaptk
