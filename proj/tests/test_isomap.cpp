#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "adaptk/evaluation.hpp"
#include "adaptk/isomap.hpp"
#include "oracles.hpp"

using namespace adaptk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix dense_weights(const UndirectedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Matrix w = Matrix::Constant(n, n, kInf);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const Neighbor& e : g.adjacency[i]) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index)) = e.distance;
  }
  return w;
}

// Random connected weighted graph: a random spanning tree plus extra edges.
UndirectedGraph random_connected_graph(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  std::vector<std::vector<Neighbor>> adj(n);
  auto add = [&](std::size_t a, std::size_t b, double w) {
    for (const Neighbor& e : adj[a]) {
      if (e.index == b) return;
    }
    adj[a].push_back({b, w});
    adj[b].push_back({a, w});
  };
  for (std::size_t v = 1; v < n; ++v) add(v, rng() % v, weight(rng));
  for (std::size_t e = 0; e < 2 * n; ++e) {
    const std::size_t a = rng() % n;
    const std::size_t b = rng() % n;
    if (a != b) add(a, b, weight(rng));
  }
  return {adj};
}

double max_relative_gap(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(a(i, j))));
    }
  }
  return worst;
}

}  // namespace

TEST(Geodesic, PathGraph) {
  Matrix m(3, 1);
  m << 0, 1, 2;
  const PointCloud c(m);
  const GeodesicMatrix g = geodesic_distances(c, knn(c, KPolicy::fixed(1)));
  EXPECT_DOUBLE_EQ(g.distances(0, 2), 2.0);
  EXPECT_EQ(g.distances.metric(), MetricTag::geodesic);
}

TEST(Geodesic, CompleteGraphEqualsEuclidean) {
  std::mt19937_64 rng(2);
  const PointCloud c(oracle::random_cloud(rng, 25, 3));
  const GeodesicMatrix g = geodesic_distances(c, knn(c, KPolicy::fixed(24)));
  EXPECT_LT(max_relative_gap(g.distances.values(), pairwise_euclidean(c).values()), 1e-12);
}

TEST(Geodesic, SwissRollMatchesFloydWarshall) {
  const PointCloud roll = generate_swiss_roll(200, Seed{42});
  const UndirectedGraph u = symmetrize(knn(roll, KPolicy::fixed(8)));
  const GeodesicMatrix g = geodesic_distances(u);
  EXPECT_LT(max_relative_gap(g.distances.values(), oracle::floyd_warshall(dense_weights(u))), 1e-9);
}

TEST(Geodesic, RandomGraphsMatchFloydWarshall) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 149;
    const UndirectedGraph u = random_connected_graph(rng, n);
    const GeodesicMatrix g = geodesic_distances(u);
    ASSERT_LT(max_relative_gap(g.distances.values(), oracle::floyd_warshall(dense_weights(u))), 1e-9) << trial;
  }
}

TEST(Geodesic, TriangleInequalityAndChordBound) {
  const PointCloud roll = generate_swiss_roll(150, Seed{5});
  const Matrix g = geodesic_distances(roll, knn(roll, KPolicy::fixed(7))).distances.values();
  const Matrix e = pairwise_euclidean(roll).values();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      ASSERT_GE(g(i, j), e(i, j) - 1e-9);
      for (Eigen::Index k = 0; k < g.rows(); ++k) ASSERT_LE(g(i, j), g(i, k) + g(k, j) + 1e-9);
    }
  }
}

TEST(Geodesic, LargerKNeverLengthensPaths) {
  const PointCloud roll = generate_swiss_roll(200, Seed{6});
  const Matrix small = geodesic_distances(roll, knn(roll, KPolicy::fixed(6))).distances.values();
  const Matrix large = geodesic_distances(roll, knn(roll, KPolicy::fixed(10))).distances.values();
  EXPECT_LE((large - small).maxCoeff(), 1e-9);
}

TEST(Geodesic, DisconnectedGraphIsAnError) {
  Matrix m(6, 1);
  m << 0, 0.5, 1, 100, 100.5, 101;
  const PointCloud c(m);
  const NeighborGraph g = knn(c, KPolicy::fixed(2));
  try {
    geodesic_distances(c, g);
    FAIL();
  } catch (const DisconnectedGraphError& e) {
    EXPECT_EQ(e.component_count(), 2u);
    EXPECT_NE(std::string(e.what()).find("2 connected components"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("increase K"), std::string::npos);
  }
  EXPECT_THROW(isomap_embed(c, g, 1), DisconnectedGraphError);
}

TEST(Geodesic, LargestComponentOption) {
  Matrix m(7, 1);
  m << 0, 0.5, 1, 100, 100.5, 101, 101.5;
  const PointCloud c(m);
  const NeighborGraph g = knn(c, KPolicy::fixed(2));
  const GeodesicMatrix geo = geodesic_distances(c, g, DisconnectedPolicy::largest_component);
  EXPECT_EQ(geo.kept_indices, (std::vector<std::size_t>{3, 4, 5, 6}));
  EXPECT_DOUBLE_EQ(geo.distances(0, 3), 1.5);
  const Embedding e = isomap_embed(c, g, 1, DisconnectedPolicy::largest_component);
  EXPECT_EQ(e.size(), 4u);
  EXPECT_EQ(e.kept_indices, geo.kept_indices);
  EXPECT_FALSE(e.warnings.empty());
  EXPECT_LT(evaluate_embedding(c, g, e).residual_variance, 1e-12);
}

TEST(ClassicalMds, UnitSquare) {
  Matrix sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  const DistanceMatrix d = pairwise_euclidean(PointCloud(sq));
  const Embedding e = classical_mds(d, 2);
  EXPECT_LT((pairwise_euclidean(e).values() - d.values()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(e.warnings.empty());
  EXPECT_LT(e.coords.colwise().mean().norm(), 1e-12);
}

TEST(ClassicalMds, CollinearPoints) {
  Matrix line(5, 3);
  for (int i = 0; i < 5; ++i) line.row(i) << 1.0 + 2.0 * i * i, -1.0 + i * i, 0.5 * i * i;
  const DistanceMatrix d = pairwise_euclidean(PointCloud(line));
  const Embedding e = classical_mds(d, 1);
  EXPECT_LT((pairwise_euclidean(e).values() - d.values()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ClassicalMds, PlanarPointSetsInThreeDimensions) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix flat = oracle::random_cloud(rng, 60, 3, 3.0);
    flat.col(2).setZero();
    const PointCloud c(oracle::rigid_motion(flat, oracle::random_rotation(rng, 3), oracle::random_cloud(rng, 3, 1)));
    const DistanceMatrix d = pairwise_euclidean(c);
    const Embedding e = classical_mds(d, 2);
    EXPECT_LT(residual_variance(d, pairwise_euclidean(e)).residual_variance, 1e-6);
  }
}

TEST(ClassicalMds, GramSpectrumMatchesTrace) {
  const PointCloud roll = generate_swiss_roll(150, Seed{12});
  const DistanceMatrix g = geodesic_distances(roll, knn(roll, KPolicy::fixed(8))).distances;
  const auto n = static_cast<Eigen::Index>(g.size());
  const Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix b = -0.5 * j * g.values().array().square().matrix() * j;
  EXPECT_LT((b - b.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b, Eigen::EigenvaluesOnly);
  EXPECT_NEAR(eig.eigenvalues().sum(), b.trace(), 1e-8 * std::max(1.0, std::abs(b.trace())));
}

TEST(ClassicalMds, NonEuclideanInputWarns) {
  // Star metric: centre at distance 1 from three leaves that are 2 apart.
  Matrix d(4, 4);
  d << 0, 1, 1, 1, 1, 0, 2, 2, 1, 2, 0, 2, 1, 2, 2, 0;
  const Embedding e = classical_mds(DistanceMatrix(d, MetricTag::geodesic), 3);
  EXPECT_FALSE(e.warnings.empty());
  EXPECT_TRUE(e.coords.allFinite());
  EXPECT_EQ(e.coords.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ClassicalMds, RejectsBadDimension) {
  const DistanceMatrix d = pairwise_euclidean(PointCloud(Matrix::Identity(3, 3)));
  EXPECT_THROW(classical_mds(d, 0), InvalidArgument);
  EXPECT_THROW(classical_mds(d, 3), InvalidArgument);
}

TEST(ClassicalMds, SwissRollGeodesicsAreWellPreserved) {
  const PointCloud roll = generate_swiss_roll(800, Seed{42});
  const NeighborGraph g = knn(roll, KPolicy::fixed(8));
  const DistanceMatrix geo = geodesic_distances(roll, g).distances;
  const Embedding e = classical_mds(geo, 2);
  EXPECT_LT(residual_variance(geo, pairwise_euclidean(e)).residual_variance, 0.35);
}

TEST(IsomapEmbed, ThreePointsAreExact) {
  Matrix m(3, 4);
  m << 0, 0, 0, 0, 1, 2, 0, 1, -1, 0.5, 3, 2;
  const PointCloud c(m);
  const Embedding e = isomap_embed(c, knn(c, KPolicy::fixed(2)), 2);
  EXPECT_LT((pairwise_euclidean(e).values() - pairwise_euclidean(c).values()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(e.algorithm, Algorithm::isomap);
}

TEST(IsomapEmbed, RigidMotionInvariant) {
  std::mt19937_64 rng(9);
  const PointCloud roll = generate_swiss_roll(300, Seed{14});
  const PointCloud moved(
      oracle::rigid_motion(roll.points(), oracle::random_rotation(rng, 3), oracle::random_cloud(rng, 3, 1, 15.0)));
  const NeighborGraph ga = knn(roll, KPolicy::fixed(8));
  const NeighborGraph gb = knn(moved, KPolicy::fixed(8));
  EXPECT_LT(max_relative_gap(geodesic_distances(roll, ga).distances.values(),
                             geodesic_distances(moved, gb).distances.values()),
            1e-9);
  const Matrix ya = pairwise_euclidean(isomap_embed(roll, ga, 2)).values();
  const Matrix yb = pairwise_euclidean(isomap_embed(moved, gb, 2)).values();
  EXPECT_LT(max_relative_gap(ya, yb), 1e-6);
}
