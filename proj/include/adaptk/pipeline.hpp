#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptk/evaluation.hpp"

namespace adaptk {

struct PipelineConfig {
  std::size_t target_dim = 2;
  std::vector<Algorithm> algorithms{Algorithm::lle, Algorithm::isomap};
  std::vector<std::size_t> fixed_k{8, 10, 12};

  // Curvature estimation; unset fields follow the dimension-based defaults.
  std::optional<std::size_t> estimation_size;
  std::optional<std::size_t> rank;
  Aggregation aggregation = Aggregation::max;

  // Adaptive K; unset bounds follow default_bounds().
  std::size_t k_init = 8;
  std::optional<double> delta_o;
  std::optional<KBounds> bounds;
  std::optional<std::size_t> groups;  // unset: per-point K; set: G curvature groups
  Baseline baseline = Baseline::global_mean;
  Grouping grouping = Grouping::curvature_quantile;

  EmbedOptions embed;
  std::optional<std::uint64_t> seed;  // echoed into the report only
  std::filesystem::path output_dir;   // artifacts and report.json go here
};

struct PipelineResult {
  Algorithm algorithm = Algorithm::lle;
  std::optional<std::size_t> fixed_k;  // empty for the adaptive run
  ResidualVarianceReport quality;
  std::string embedding_file;
  std::vector<std::string> warnings;
};

struct RelativeImprovement {
  Algorithm algorithm = Algorithm::lle;
  double resi_max = 0.0;      // worst residual variance over this algorithm's runs
  double resi_optimal = 0.0;  // best residual variance over this algorithm's runs
  double improvement_percent = 0.0;           // relative_improvement(resi_max, resi_optimal)
  double adaptive_improvement_percent = 0.0;  // relative_improvement(resi_max, adaptive)
};

struct PipelineReport {
  std::size_t n = 0;
  std::size_t ambient_dim = 0;
  PipelineConfig config;
  CurvatureField curvature;
  KAssignment k_assignment;
  std::vector<PipelineResult> results;
  std::vector<RelativeImprovement> improvements;

  const PipelineResult* find(Algorithm algorithm, std::optional<std::size_t> fixed_k) const {
    for (const PipelineResult& r : results) {
      if (r.algorithm == algorithm && r.fixed_k == fixed_k) return &r;
    }
    return nullptr;
  }
};

namespace detail {

// Re-throws library errors with the pipeline step prefixed, keeping the error category.
template <typename Step>
auto run_step(const std::string& name, Step&& step) {
  const std::string prefix = "pipeline step " + name + ": ";
  try {
    return step();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(prefix + e.what());
  } catch (const DisconnectedGraphError& e) {
    throw DisconnectedGraphError(e.component_count(), prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

inline std::string embedding_file_name(Algorithm a, std::optional<std::size_t> k) {
  return "embedding_" + std::string(to_string(a)) + (k ? "_k" + std::to_string(*k) : "_adaptive") + ".csv";
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineReport& report) {
  const PipelineConfig& c = report.config;
  nlohmann::json algorithms = nlohmann::json::array();
  for (Algorithm a : c.algorithms) algorithms.push_back(to_string(a));

  nlohmann::json config = {{"n", report.n},
                           {"ambient_dim", report.ambient_dim},
                           {"target_dim", c.target_dim},
                           {"algorithms", std::move(algorithms)},
                           {"fixed_k", c.fixed_k},
                           {"estimation_size", report.curvature.config.estimation_size},
                           {"rank", report.curvature.config.rank},
                           {"aggregation", to_string(c.aggregation)},
                           {"lle_regularization", c.embed.lle_regularization},
                           {"input_metric", to_string(c.embed.input_metric)},
                           {"adaptive", to_json(report.k_assignment.config)}};
  config["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  if (!c.groups) config["adaptive"]["groups"] = nullptr;

  const CurvatureField& f = report.curvature;
  nlohmann::json curvature = {{"mean", f.mean},
                              {"std_dev", f.std_dev},
                              {"min", f.min()},
                              {"max", f.max()},
                              {"degenerate_count", f.degenerate_count()},
                              {"file", "curvature.csv"}};

  const KAssignment& kan = report.k_assignment;
  nlohmann::json k_assignment = {
      {"min", kan.min()}, {"median", kan.median()}, {"max", kan.max()}, {"file", "kan.csv"}};

  nlohmann::json results = nlohmann::json::array();
  for (const PipelineResult& r : report.results) {
    nlohmann::json j = {{"algorithm", to_string(r.algorithm)},
                        {"policy", r.fixed_k ? "fixed" : "adaptive"},
                        {"residual_variance", r.quality.residual_variance},
                        {"rho", r.quality.rho},
                        {"n_pairs", r.quality.n_pairs},
                        {"embedding_file", r.embedding_file},
                        {"warnings", r.warnings}};
    j["k"] = r.fixed_k ? nlohmann::json(*r.fixed_k) : nlohmann::json(nullptr);
    results.push_back(std::move(j));
  }

  nlohmann::json improvements = nlohmann::json::array();
  for (const RelativeImprovement& r : report.improvements) {
    improvements.push_back({{"algorithm", to_string(r.algorithm)},
                            {"resi_max", r.resi_max},
                            {"resi_optimal", r.resi_optimal},
                            {"improvement_percent", r.improvement_percent},
                            {"adaptive_improvement_percent", r.adaptive_improvement_percent}});
  }

  return {{"config", std::move(config)},
          {"curvature", std::move(curvature)},
          {"k_assignment", std::move(k_assignment)},
          {"results", std::move(results)},
          {"relative_improvements", std::move(improvements)}};
}

// Curvature -> adaptive K -> adaptive and fixed-K embeddings -> residual variances.
// Writes curvature.csv, kan.csv, one CSV per embedding and report.json to output_dir.
inline PipelineReport run_pipeline(const PointCloud& cloud, const PipelineConfig& config) {
  if (config.algorithms.empty()) throw InvalidArgument("pipeline needs at least one algorithm");
  if (config.output_dir.empty()) throw InvalidArgument("pipeline needs an output directory");
  std::filesystem::create_directories(config.output_dir);
  const auto& dir = config.output_dir;

  PipelineReport report;
  report.n = cloud.size();
  report.ambient_dim = cloud.dimension();
  report.config = config;

  // Step 1: curvature over estimation neighborhoods.
  report.curvature = detail::run_step("1 (curvature)", [&] {
    CurvatureConfig cc = CurvatureConfig::for_dimensions(cloud.dimension(), config.target_dim);
    if (config.estimation_size) cc.estimation_size = *config.estimation_size;
    if (config.rank) cc.rank = *config.rank;
    cc.aggregation = config.aggregation;
    CurvatureField field = curvature_field(cloud, cc);
    write_curvature_csv(field, dir / "curvature.csv");
    return field;
  });

  // Step 2: per-point K.
  report.k_assignment = detail::run_step("2 (adaptive K)", [&] {
    const KBounds b =
        config.bounds ? *config.bounds : default_bounds(cloud.dimension(), config.target_dim, cloud.size());
    AdaptiveKConfig ac;
    ac.k_init = config.k_init;
    ac.delta_o = config.delta_o;
    ac.k_inf = b.k_inf;
    ac.k_sup = b.k_sup;
    if (config.groups) ac.groups = *config.groups;
    ac.baseline = config.baseline;
    ac.grouping = config.grouping;
    KAssignment kan = config.groups ? grouped_adaptive_k(report.curvature, ac) : adaptive_k(report.curvature, ac);
    write_kassignment_csv(kan, dir / "kan.csv");
    return kan;
  });

  const DistanceMatrix dx = pairwise_euclidean(cloud);
  auto run_one = [&](Algorithm algorithm, std::optional<std::size_t> k) {
    const KPolicy policy = k ? KPolicy::fixed(*k) : report.k_assignment.policy();
    const NeighborGraph graph = knn(cloud, policy);
    const Embedding e = embed(cloud, graph, algorithm, config.target_dim, config.embed);
    PipelineResult r;
    r.algorithm = algorithm;
    r.fixed_k = k;
    r.embedding_file = detail::embedding_file_name(algorithm, k);
    r.warnings = e.warnings;
    write_matrix_csv(dir / r.embedding_file, e.coords);
    const DistanceMatrix* reuse = config.embed.input_metric == InputMetric::euclidean ? &dx : nullptr;
    r.quality = evaluate_embedding(cloud, graph, e, config.embed, reuse);
    return r;
  };

  // Steps 3-5: embeddings with the adaptive KAN, then with each fixed K, each scored.
  for (Algorithm a : config.algorithms) {
    report.results.push_back(detail::run_step(
        "3 (" + std::string(to_string(a)) + " adaptive)", [&] { return run_one(a, std::nullopt); }));
  }
  for (Algorithm a : config.algorithms) {
    for (std::size_t k : config.fixed_k) {
      report.results.push_back(detail::run_step(
          "4 (" + std::string(to_string(a)) + " K=" + std::to_string(k) + ")", [&] { return run_one(a, k); }));
    }
  }

  for (Algorithm a : config.algorithms) {
    RelativeImprovement imp;
    imp.algorithm = a;
    bool first = true;
    for (const PipelineResult& r : report.results) {
      if (r.algorithm != a) continue;
      const double v = r.quality.residual_variance;
      imp.resi_max = first ? v : std::max(imp.resi_max, v);
      imp.resi_optimal = first ? v : std::min(imp.resi_optimal, v);
      first = false;
    }
    if (imp.resi_max > 0.0) {
      imp.improvement_percent = relative_improvement(imp.resi_max, imp.resi_optimal);
      imp.adaptive_improvement_percent =
          relative_improvement(imp.resi_max, report.find(a, std::nullopt)->quality.residual_variance);
    }
    report.improvements.push_back(imp);
  }

  std::ofstream out(dir / "report.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "report.json").string());
  out << to_json(report).dump(2) << '\n';
  return report;
}

}  // namespace adaptk
