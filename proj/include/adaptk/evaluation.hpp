#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "adaptk/adaptive_k.hpp"
#include "adaptk/isomap.hpp"
#include "adaptk/lle.hpp"

namespace adaptk {

struct ResidualVarianceReport {
  double rho = 0.0;
  double residual_variance = 1.0;
  std::size_t n_pairs = 0;
};

// 1 - rho^2, with rho the Pearson correlation over the strict upper triangle
// (i < j) of the two distance matrices. Zero variance on either side gives rho = 0.
inline ResidualVarianceReport residual_variance(const DistanceMatrix& dx, const DistanceMatrix& dy) {
  if (dx.size() != dy.size()) {
    throw InvalidArgument("distance matrices differ in size (" + std::to_string(dx.size()) + " vs " +
                          std::to_string(dy.size()) + ")");
  }
  const std::size_t n = dx.size();
  const Matrix& a = dx.values();
  const Matrix& b = dy.values();
  ResidualVarianceReport r;
  r.n_pairs = n * (n - 1) / 2;
  if (r.n_pairs == 0) return r;

  double mean_a = 0.0;
  double mean_b = 0.0;
  for (Eigen::Index j = 1; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      mean_a += a(i, j);
      mean_b += b(i, j);
    }
  }
  mean_a /= static_cast<double>(r.n_pairs);
  mean_b /= static_cast<double>(r.n_pairs);

  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Eigen::Index j = 1; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double da = a(i, j) - mean_a;
      const double db = b(i, j) - mean_b;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return r;
  r.rho = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  r.residual_variance = 1.0 - r.rho * r.rho;
  return r;
}

// 100 * (resi_max - resi_optimal) / resi_max.
inline double relative_improvement(double resi_max, double resi_optimal) {
  if (!(resi_max > 0.0)) throw InvalidArgument("resi_max must be > 0");
  if (!(resi_optimal >= 0.0) || resi_optimal > resi_max) {
    throw InvalidArgument("resi_optimal must lie in [0, resi_max]");
  }
  return 100.0 * (resi_max - resi_optimal) / resi_max;
}

// Distances used for the input side of the residual variance.
enum class InputMetric { euclidean, geodesic };

inline std::string_view to_string(InputMetric m) { return m == InputMetric::euclidean ? "euclidean" : "geodesic"; }

struct EmbedOptions {
  double lle_regularization = kDefaultLleRegularization;
  DisconnectedPolicy disconnected = DisconnectedPolicy::error;
  InputMetric input_metric = InputMetric::euclidean;
};

inline Embedding embed(const PointCloud& cloud, const NeighborGraph& graph, Algorithm algorithm,
                       std::size_t target_dim, const EmbedOptions& options = {}) {
  if (algorithm == Algorithm::lle) return lle(cloud, graph, target_dim, options.lle_regularization);
  return isomap_embed(cloud, graph, target_dim, options.disconnected);
}

namespace detail {
inline DistanceMatrix restrict_rows(const DistanceMatrix& d, const std::vector<std::size_t>& keep) {
  const auto m = static_cast<Eigen::Index>(keep.size());
  Matrix out(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = d(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
  }
  return DistanceMatrix(std::move(out), d.metric());
}
}  // namespace detail

// Residual variance of an embedding against its source cloud. dx may be passed to
// reuse a precomputed input matrix of the requested metric.
inline ResidualVarianceReport evaluate_embedding(const PointCloud& cloud, const NeighborGraph& graph,
                                                 const Embedding& embedding, const EmbedOptions& options = {},
                                                 const DistanceMatrix* dx = nullptr) {
  std::optional<DistanceMatrix> computed;
  if (dx == nullptr) {
    if (options.input_metric == InputMetric::euclidean) {
      computed.emplace(pairwise_euclidean(cloud));
    } else {
      computed.emplace(geodesic_distances(cloud, graph, options.disconnected).distances);
    }
    dx = &*computed;
  }
  const DistanceMatrix dy = pairwise_euclidean(embedding);
  if (!embedding.kept_indices.empty() && dx->size() != dy.size()) {
    return residual_variance(detail::restrict_rows(*dx, embedding.kept_indices), dy);
  }
  return residual_variance(*dx, dy);
}

struct SweepEntry {
  std::size_t value = 0;
  std::optional<double> residual_variance;  // empty when the run failed
  std::string failure;
};

struct SweepReport {
  Algorithm algorithm = Algorithm::lle;
  std::string parameter_name;  // "K" or "G"
  std::vector<SweepEntry> entries;
  std::optional<std::size_t> argmin;

  void update_argmin() {
    argmin.reset();
    double best = 0.0;
    for (const SweepEntry& e : entries) {
      if (e.residual_variance && (!argmin || *e.residual_variance < best)) {
        best = *e.residual_variance;
        argmin = e.value;
      }
    }
  }

  std::optional<double> at(std::size_t value) const {
    for (const SweepEntry& e : entries) {
      if (e.value == value) return e.residual_variance;
    }
    return std::nullopt;
  }
};

inline nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const SweepEntry& e : report.entries) {
    nlohmann::json j = {{"value", e.value}};
    j["residual_variance"] = e.residual_variance ? nlohmann::json(*e.residual_variance) : nlohmann::json(nullptr);
    if (!e.failure.empty()) j["failure"] = e.failure;
    entries.push_back(std::move(j));
  }
  nlohmann::json out = {{"algorithm", to_string(report.algorithm)},
                        {"parameter_name", report.parameter_name},
                        {"entries", std::move(entries)}};
  out["argmin"] = report.argmin ? nlohmann::json(*report.argmin) : nlohmann::json(nullptr);
  return out;
}

// Two columns "<parameter>,residual_variance"; failed runs are written as nan.
inline void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << report.parameter_name << ",residual_variance\n";
  for (const SweepEntry& e : report.entries) {
    out << e.value << ',' << (e.residual_variance ? format_double(*e.residual_variance) : "nan") << '\n';
  }
}

namespace detail {
inline void check_sweep_values(const std::vector<std::size_t>& values, const char* what) {
  if (values.empty()) throw InvalidArgument(std::string(what) + " range is empty");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) throw InvalidArgument(std::string(what) + " values must be strictly increasing");
  }
}

inline SweepEntry run_sweep_entry(std::size_t value, const PointCloud& cloud, const KPolicy& policy,
                                  Algorithm algorithm, std::size_t target_dim, const EmbedOptions& options,
                                  const DistanceMatrix* euclidean_dx) {
  SweepEntry entry{value, std::nullopt, {}};
  const NeighborGraph graph = knn(cloud, policy);
  try {
    const Embedding e = embed(cloud, graph, algorithm, target_dim, options);
    const DistanceMatrix* dx = options.input_metric == InputMetric::euclidean ? euclidean_dx : nullptr;
    entry.residual_variance = evaluate_embedding(cloud, graph, e, options, dx).residual_variance;
  } catch (const DisconnectedGraphError& err) {
    entry.failure = err.what();
  }
  return entry;
}
}  // namespace detail

// One embedding per fixed K; disconnected graphs become failure entries.
inline SweepReport sweep_k(const PointCloud& cloud, Algorithm algorithm, const std::vector<std::size_t>& k_values,
                           std::size_t target_dim, const EmbedOptions& options = {}) {
  detail::check_sweep_values(k_values, "K");
  for (std::size_t k : k_values) {
    if (k < 1 || k >= cloud.size()) throw InvalidArgument("K = " + std::to_string(k) + " outside [1, n-1]");
  }
  const DistanceMatrix dx = pairwise_euclidean(cloud);
  SweepReport report{algorithm, "K", {}, std::nullopt};
  for (std::size_t k : k_values) {
    report.entries.push_back(
        detail::run_sweep_entry(k, cloud, KPolicy::fixed(k), algorithm, target_dim, options, &dx));
  }
  report.update_argmin();
  return report;
}

// One adaptive run per group count G, all sharing one curvature field.
inline SweepReport sweep_groups(const PointCloud& cloud, Algorithm algorithm,
                                const std::vector<std::size_t>& g_values, std::size_t target_dim,
                                const CurvatureConfig& curvature, const AdaptiveKConfig& adaptive,
                                const EmbedOptions& options = {}) {
  detail::check_sweep_values(g_values, "G");
  const CurvatureField field = curvature_field(cloud, curvature);
  const DistanceMatrix dx = pairwise_euclidean(cloud);
  SweepReport report{algorithm, "G", {}, std::nullopt};
  for (std::size_t g : g_values) {
    AdaptiveKConfig config = adaptive;
    config.groups = g;
    const KAssignment kan = grouped_adaptive_k(field, config);
    report.entries.push_back(detail::run_sweep_entry(g, cloud, kan.policy(), algorithm, target_dim, options, &dx));
  }
  report.update_argmin();
  return report;
}

}  // namespace adaptk
