#include <gtest/gtest.h>

#include <random>

#include "adaptk/curvature.hpp"
#include "oracles.hpp"

using namespace adaptk;

namespace {

// Regular side x side grid on a tilted plane in R^3.
PointCloud planar_grid(int side, std::mt19937_64& rng, Matrix* rotation_out = nullptr) {
  Matrix flat(side * side, 3);
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) flat.row(a * side + b) << a, b, 0.0;
  }
  const Matrix r = oracle::random_rotation(rng, 3);
  if (rotation_out) *rotation_out = r;
  return PointCloud(oracle::rigid_motion(flat, r, Vector::Constant(3, 0.5)));
}

bool is_interior(int idx, int side) {
  const int a = idx / side;
  const int b = idx % side;
  return a > 0 && b > 0 && a < side - 1 && b < side - 1;
}

}  // namespace

TEST(EstimationSize, Rule) {
  EXPECT_EQ(estimation_neighborhood_size(3, 2), 8u);
  EXPECT_EQ(estimation_neighborhood_size(1, 2), 8u);
  EXPECT_EQ(estimation_neighborhood_size(10, 3), 12u);
  EXPECT_THROW(estimation_neighborhood_size(0, 2), InvalidArgument);
  const CurvatureConfig c = CurvatureConfig::for_dimensions(3, 2);
  EXPECT_EQ(c.estimation_size, 8u);
  EXPECT_EQ(c.rank, 2u);
}

TEST(LocalFrame, ZeroSpreadNeighborhood) {
  Matrix m = Matrix::Zero(6, 3);
  for (int i = 1; i < 6; ++i) m.row(i) << 1.5, -2.0, 4.0;
  const LocalFrame f = local_frame(PointCloud(m), 0, 5, 2);
  EXPECT_TRUE(f.center.isApprox(Vector((Vector(3) << 1.5, -2.0, 4.0).finished())));
  EXPECT_EQ(f.coords.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE((f.basis.transpose() * f.basis).isApprox(Matrix::Identity(2, 2), 1e-12));
}

TEST(LocalFrame, PlanarNeighborhoodReconstructsExactly) {
  std::mt19937_64 rng(3);
  const PointCloud grid = planar_grid(6, rng);
  const auto nbrs = nearest_neighbors(grid, 14, 8);
  const LocalFrame f = local_frame(grid, nbrs, 2);
  for (std::size_t j = 0; j < nbrs.size(); ++j) {
    const Vector centered = grid.point(nbrs[j].index).transpose() - f.center;
    EXPECT_LT((centered - f.basis * f.coords.col(static_cast<Eigen::Index>(j))).norm(), 1e-9);
  }
}

TEST(LocalFrame, MatchesDenseSvdOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x = oracle::random_cloud(rng, 12, 3);
    x.col(2) *= 0.2;  // keep the leading singular values well separated
    const PointCloud cloud(x);
    const auto nbrs = nearest_neighbors(cloud, 0, 9);
    const LocalFrame f = local_frame(cloud, nbrs, 2);

    Matrix centered(3, 9);
    for (int j = 0; j < 9; ++j) centered.col(j) = x.row(static_cast<Eigen::Index>(nbrs[j].index)).transpose();
    centered.colwise() -= centered.rowwise().mean();
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    for (int c = 0; c < 2; ++c) {
      const double dot = svd.matrixU().col(c).dot(f.basis.col(c));
      EXPECT_NEAR(std::abs(dot), 1.0, 1e-9);
      EXPECT_LT((f.basis.col(c) - (dot > 0 ? 1.0 : -1.0) * svd.matrixU().col(c)).norm(), 1e-9);
    }
    EXPECT_LT((f.singular_values - svd.singularValues()).norm(), 1e-9);
  }
}

TEST(LocalFrame, OrthonormalityInvariants) {
  const PointCloud roll = generate_swiss_roll(300, Seed{9});
  for (std::size_t i = 0; i < roll.size(); i += 17) {
    const LocalFrame f = local_frame(roll, i, 8, 2);
    EXPECT_LT((f.basis.transpose() * f.basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index j = 0; j < f.coords.cols(); ++j) {
      EXPECT_NEAR((f.basis * f.coords.col(j)).norm(), f.coords.col(j).norm(), 1e-10);
    }
  }
}

TEST(LocalFrame, RejectsBadRank) {
  const PointCloud roll = generate_swiss_roll(50, Seed{1});
  EXPECT_THROW(local_frame(roll, 0, 8, 4), InvalidArgument);
  EXPECT_THROW(local_frame(roll, 0, 8, 0), InvalidArgument);
  EXPECT_THROW(local_frame(roll, 0, 50, 2), InvalidArgument);
}

TEST(JacobianBound, SymmetricNeighborhoodGivesOne) {
  Matrix m(5, 2);
  m << 0, 0, 1, 0, -1, 0, 0, 2, 0, -2;
  const PointCloud c(m);
  const LocalFrame f = local_frame(c, 0, 4, 2);
  EXPECT_EQ(jacobian_lower_bound(f, c.point(0).transpose()), 1.0);
}

TEST(JacobianBound, MaxAttainedAtSmallestCoords) {
  LocalFrame f;
  f.center = (Vector(2) << 1.0, 0.0).finished();
  f.basis = Matrix::Identity(2, 2);
  f.coords.resize(2, 3);
  f.coords << 0.5, 1.0, 0.0, 0.0, 0.0, 2.0;
  f.diameter = 3.0;
  const Vector x = Vector::Zero(2);
  EXPECT_DOUBLE_EQ(jacobian_lower_bound(f, x), 3.0);
  EXPECT_DOUBLE_EQ(jacobian_lower_bound(f, x, Aggregation::mean), (3.0 + 2.0 + 1.5) / 3.0);
}

TEST(JacobianBound, SkipsNegligibleCoordsAndFallsBackToOne) {
  LocalFrame f;
  f.center = (Vector(2) << 1.0, 0.0).finished();
  f.basis = Matrix::Identity(2, 2);
  f.coords = Matrix::Zero(2, 2);
  f.coords(0, 1) = 1e-14;
  f.diameter = 1.0;
  EXPECT_EQ(jacobian_lower_bound(f, Vector::Zero(2)), 1.0);
  f.coords(1, 0) = 0.25;
  EXPECT_DOUBLE_EQ(jacobian_lower_bound(f, Vector::Zero(2)), 5.0);
}

TEST(JacobianBound, SwissRollMatchesIndependentOracle) {
  const PointCloud roll = generate_swiss_roll(800, Seed{42});
  const CurvatureField field = curvature_field(roll, CurvatureConfig::for_dimensions(3, 2));
  for (std::size_t i = 0; i < roll.size(); ++i) {
    const double expected = oracle::jacobian_bound(roll.points(), i, 8, 2);
    ASSERT_LE(std::abs(field.j_inf[i] - expected), 1e-8 * expected) << "point " << i;
    const LocalFrame f = local_frame(roll, i, 8, 2);
    ASSERT_DOUBLE_EQ(jacobian_lower_bound(f, roll.point(i).transpose()), field.j_inf[i]);
  }
}

TEST(JacobianBound, QuotientMatchesAnalyticForm) {
  const PointCloud roll = generate_swiss_roll(400, Seed{13});
  for (std::size_t i = 0; i < roll.size(); i += 7) {
    const LocalFrame f = local_frame(roll, i, 8, 2);
    const Vector x = roll.point(i).transpose();
    const double offset = (f.center - x).norm();
    const auto q = jacobian_quotients(f, x);
    std::size_t r = 0;
    for (Eigen::Index j = 0; j < f.coords.cols(); ++j) {
      const double theta = f.coords.col(j).norm();
      if (theta <= 1e-12 * f.diameter) continue;
      ASSERT_NEAR(q[r++], 1.0 + offset / theta, 1e-10 * (1.0 + offset / theta));
    }
    // Off-centroid points with usable probes sit strictly above 1.
    if (offset > 0.0 && !q.empty()) EXPECT_GT(jacobian_lower_bound(f, x), 1.0);
  }
}

TEST(CurvatureField, PlanarGridInteriorIsFlat) {
  std::mt19937_64 rng(5);
  const int side = 15;
  const PointCloud grid = planar_grid(side, rng);
  const CurvatureField field = curvature_field(grid, CurvatureConfig::for_dimensions(3, 2));
  for (int i = 0; i < side * side; ++i) {
    if (is_interior(i, side)) EXPECT_NEAR(field.j_inf[static_cast<std::size_t>(i)], 1.0, 1e-9) << i;
    else EXPECT_GT(field.j_inf[static_cast<std::size_t>(i)], 1.0) << i;
  }
  EXPECT_LT(field.std_dev, field.mean);
}

TEST(CurvatureField, RigidMotionInvariant) {
  std::mt19937_64 rng(31);
  const PointCloud roll = generate_swiss_roll(400, Seed{2});
  const CurvatureConfig cfg = CurvatureConfig::for_dimensions(3, 2);
  const CurvatureField a = curvature_field(roll, cfg);
  for (int trial = 0; trial < 3; ++trial) {
    const PointCloud moved(
        oracle::rigid_motion(roll.points(), oracle::random_rotation(rng, 3), oracle::random_cloud(rng, 3, 1, 20.0)));
    const CurvatureField b = curvature_field(moved, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(std::abs(a.j_inf[i] - b.j_inf[i]), 1e-9 * a.j_inf[i]) << i;
  }
}

TEST(CurvatureField, FullyDegenerateCloudUsesSentinel) {
  const PointCloud same(Matrix::Constant(20, 3, 2.5));
  const CurvatureField field = curvature_field(same, CurvatureConfig::for_dimensions(3, 2));
  for (double v : field.j_inf) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(field.degenerate_count(), 20u);
  EXPECT_EQ(field.mean, 1.0);
  EXPECT_EQ(field.std_dev, 0.0);
}

TEST(CurvatureField, StatisticsAndBounds) {
  const PointCloud roll = generate_swiss_roll(500, Seed{77});
  const CurvatureField field = curvature_field(roll, CurvatureConfig::for_dimensions(3, 2));
  double sum = 0.0;
  for (double v : field.j_inf) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 1.0);
    sum += v;
  }
  EXPECT_NEAR(field.mean, sum / 500.0, 1e-12);
  double ss = 0.0;
  for (double v : field.j_inf) ss += (v - field.mean) * (v - field.mean);
  EXPECT_NEAR(field.std_dev, std::sqrt(ss / 500.0), 1e-12);
  EXPECT_EQ(field.neighborhoods.size(), 500u);
}

TEST(CurvatureField, MeanAggregationNeverExceedsMax) {
  const PointCloud roll = generate_swiss_roll(300, Seed{4});
  CurvatureConfig cfg = CurvatureConfig::for_dimensions(3, 2);
  const CurvatureField mx = curvature_field(roll, cfg);
  cfg.aggregation = Aggregation::mean;
  const CurvatureField mn = curvature_field(roll, cfg);
  for (std::size_t i = 0; i < roll.size(); ++i) EXPECT_LE(mn.j_inf[i], mx.j_inf[i] + 1e-12);
}

TEST(CurvatureField, InvalidConfig) {
  const PointCloud roll = generate_swiss_roll(8, Seed{4});
  EXPECT_THROW(curvature_field(roll, CurvatureConfig::for_dimensions(3, 2)), InvalidArgument);  // N = 8 = n
  CurvatureConfig cfg{4, 5, 2, Aggregation::max};
  EXPECT_THROW(curvature_field(generate_swiss_roll(50, Seed{4}), cfg), InvalidArgument);
}

TEST(CurvatureField, IndependentOfThreadCount) {
  const PointCloud roll = generate_swiss_roll(300, Seed{6});
  set_thread_count(1);
  const CurvatureField a = curvature_field(roll, CurvatureConfig::for_dimensions(3, 2));
  set_thread_count(4);
  const CurvatureField b = curvature_field(roll, CurvatureConfig::for_dimensions(3, 2));
  set_thread_count(0);
  EXPECT_EQ(a.j_inf, b.j_inf);
}
