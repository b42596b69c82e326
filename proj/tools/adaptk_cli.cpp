#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "adaptk/adaptk.hpp"

namespace fs = std::filesystem;
using namespace adaptk;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitCompute = 2;
constexpr const char* kOutputDirEnv = "ADAPTK_OUTPUT_DIR";

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path(".");
}

// Explicit paths win; otherwise the file lands in $ADAPTK_OUTPUT_DIR (or the cwd).
fs::path resolve_output(const std::string& given, const char* default_name) {
  const fs::path p = given.empty() ? default_output_dir() / default_name : fs::path(given);
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw InvalidArgument("output directory does not exist: " + parent.string());
  }
  return p;
}

struct InputOptions {
  std::string path;
  std::size_t n = 800;
  std::uint64_t seed = 42;
};

void add_input(CLI::App* app, InputOptions& o) {
  auto* in = app->add_option("--in", o.path, "Point cloud CSV, one point per row")->check(CLI::ExistingFile);
  app->add_option("--n", o.n, "Swiss-roll sample count when --in is absent")->capture_default_str()->excludes(in);
  app->add_option("--seed", o.seed, "Swiss-roll RNG seed when --in is absent")->capture_default_str()->excludes(in);
}

PointCloud load_input(const InputOptions& o) {
  if (!o.path.empty()) return load_csv(o.path);
  return generate_swiss_roll(o.n, Seed{o.seed});
}

struct CurvatureOptions {
  std::optional<std::size_t> estimation_size;
  std::optional<std::size_t> rank;
  std::string aggregation = "max";
};

void add_curvature(CLI::App* app, CurvatureOptions& o) {
  app->add_option("--estimation-size", o.estimation_size,
                  "Neighbors N used to fit each local tangent frame (default: 8 if D < d, else 4d)");
  app->add_option("--rank", o.rank, "Rank r of the local frame basis Q (default: d)");
  app->add_option("--aggregation", o.aggregation,
                  "Combine the per-neighbor quotients (|mean - x_i| + |Q theta_j|) / |theta_j| into j_inf "
                  "by their max (the lower bound) or their mean")
      ->check(CLI::IsMember({"max", "mean"}))
      ->capture_default_str();
}

CurvatureConfig curvature_config(const CurvatureOptions& o, std::size_t ambient_dim, std::size_t d) {
  CurvatureConfig c = CurvatureConfig::for_dimensions(ambient_dim, d);
  if (o.estimation_size) c.estimation_size = *o.estimation_size;
  if (o.rank) c.rank = *o.rank;
  c.aggregation = o.aggregation == "mean" ? Aggregation::mean : Aggregation::max;
  return c;
}

struct AdaptiveOptions {
  std::optional<std::size_t> k_init;
  std::optional<double> delta_o;
  std::optional<std::size_t> k_inf;
  std::optional<std::size_t> k_sup;
  std::optional<std::size_t> groups;
  std::string baseline = "global";
  std::string grouping = "quantile";
};

void add_adaptive(CLI::App* app, AdaptiveOptions& o, bool with_groups = true) {
  app->add_option("--k-init", o.k_init, "Base neighbor count K_o (default 8, clamped into [k_inf, k_sup])");
  app->add_option("--delta-o", o.delta_o,
                  "Curvature step per unit of K in K_i = K_o + trunc((mean j_inf - j_inf_i) / delta_o) "
                  "(default: standard deviation of j_inf)");
  app->add_option("--k-inf", o.k_inf, "Lower clamp on K_i (default d + 1)");
  app->add_option("--k-sup", o.k_sup, "Upper clamp on K_i (default min(6D, n - 1))");
  if (with_groups) {
    app->add_option("--groups", o.groups,
                    "Group count G; points in a curvature group share one K (default: every point gets its own K)");
  }
  app->add_option("--baseline", o.baseline,
                  "Reference curvature compared with j_inf_i: the global mean or the mean over the "
                  "point's estimation neighborhood")
      ->check(CLI::IsMember({"global", "neighborhood"}))
      ->capture_default_str();
  app->add_option("--grouping", o.grouping, "Split points into groups by curvature quantile or by index")
      ->check(CLI::IsMember({"quantile", "index"}))
      ->capture_default_str();
}

AdaptiveKConfig adaptive_config(const AdaptiveOptions& o, std::size_t ambient_dim, std::size_t d, std::size_t n) {
  KBounds b = default_bounds(ambient_dim, d, n);
  if (o.k_inf) b.k_inf = *o.k_inf;
  if (o.k_sup) b.k_sup = *o.k_sup;
  AdaptiveKConfig c = AdaptiveKConfig::with_bounds(b);
  if (o.k_init) c.k_init = *o.k_init;
  c.delta_o = o.delta_o;
  if (o.groups) c.groups = *o.groups;
  c.baseline = o.baseline == "neighborhood" ? Baseline::neighborhood_mean : Baseline::global_mean;
  c.grouping = o.grouping == "index" ? Grouping::index_contiguous : Grouping::curvature_quantile;
  c.validate();
  return c;
}

KAssignment assign_k(const CurvatureField& field, const AdaptiveKConfig& c, const AdaptiveOptions& o) {
  return o.groups ? grouped_adaptive_k(field, c) : adaptive_k(field, c);
}

struct EmbedFlags {
  double reg = kDefaultLleRegularization;
  bool largest_component = false;
  std::string metric = "euclidean";
};

void add_embed_flags(CLI::App* app, EmbedFlags& o, bool with_metric) {
  app->add_option("--reg", o.reg, "LLE Gram regularization, added as reg * trace(G) * I")->capture_default_str();
  app->add_flag("--largest-component", o.largest_component,
                "Isomap: embed only the largest connected component instead of failing on a disconnected graph");
  if (with_metric) {
    app->add_option("--metric", o.metric,
                    "Input distances D_x for the residual variance 1 - rho^2(D_x, D_y): Euclidean or graph geodesic")
        ->check(CLI::IsMember({"euclidean", "geodesic"}))
        ->capture_default_str();
  }
}

EmbedOptions embed_options(const EmbedFlags& o) {
  EmbedOptions e;
  e.lle_regularization = o.reg;
  e.disconnected = o.largest_component ? DisconnectedPolicy::largest_component : DisconnectedPolicy::error;
  e.input_metric = o.metric == "geodesic" ? InputMetric::geodesic : InputMetric::euclidean;
  return e;
}

CLI::Option* add_algo(CLI::App* app, std::string& algo) {
  return app->add_option("--algo", algo, "Embedding algorithm")->check(CLI::IsMember({"lle", "isomap"}));
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << text;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-neighborhood manifold learning: curvature-driven K selection for LLE and Isomap"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency); results do not depend on it")
      ->capture_default_str();

  // generate
  auto* generate = app.add_subcommand("generate", "Sample a Swiss roll: (t cos t, h, t sin t), t in [1.5pi, 4.5pi]");
  std::size_t gen_n = 800;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  generate->add_option("--n", gen_n, "Number of points")->capture_default_str();
  generate->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output CSV (default: $ADAPTK_OUTPUT_DIR/roll.csv)");

  // curvature
  auto* curvature = app.add_subcommand("curvature", "Per-point Jacobian lower bound j_inf from local tangent frames");
  InputOptions curv_in;
  CurvatureOptions curv_opts;
  std::size_t curv_d = 2;
  std::string curv_out;
  add_input(curvature, curv_in);
  curvature->add_option("--d", curv_d, "Target dimension d")->capture_default_str();
  add_curvature(curvature, curv_opts);
  curvature->add_option("--out", curv_out, "Output CSV index,j_inf (default: $ADAPTK_OUTPUT_DIR/curvature.csv)");

  // adapt-k
  auto* adapt = app.add_subcommand("adapt-k", "Per-point K from curvature: flatter regions get more neighbors");
  InputOptions adapt_in;
  CurvatureOptions adapt_curv;
  AdaptiveOptions adapt_opts;
  std::size_t adapt_d = 2;
  std::string adapt_out;
  add_input(adapt, adapt_in);
  adapt->add_option("--d", adapt_d, "Target dimension d")->capture_default_str();
  add_curvature(adapt, adapt_curv);
  add_adaptive(adapt, adapt_opts);
  adapt->add_option("--out", adapt_out, "Output CSV index,k (default: $ADAPTK_OUTPUT_DIR/kan.csv)");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embed with LLE or Isomap using a fixed or adaptive K");
  InputOptions emb_in;
  CurvatureOptions emb_curv;
  AdaptiveOptions emb_adapt;
  EmbedFlags emb_flags;
  std::string emb_algo = "lle";
  std::size_t emb_d = 2;
  std::optional<std::size_t> emb_k;
  bool emb_adaptive = false;
  std::string emb_out;
  add_input(embed_cmd, emb_in);
  add_algo(embed_cmd, emb_algo)->capture_default_str();
  embed_cmd->add_option("--d", emb_d, "Target dimension d")->capture_default_str();
  auto* k_opt = embed_cmd->add_option("--k", emb_k, "Fixed neighbor count K");
  auto* adaptive_flag = embed_cmd->add_flag("--adaptive", emb_adaptive, "Use the curvature-adapted per-point K");
  k_opt->excludes(adaptive_flag);
  add_curvature(embed_cmd, emb_curv);
  add_adaptive(embed_cmd, emb_adapt);
  add_embed_flags(embed_cmd, emb_flags, false);
  embed_cmd->add_option("--out", emb_out, "Output CSV, n x d (default: $ADAPTK_OUTPUT_DIR/embedding.csv)");

  // eval
  auto* eval = app.add_subcommand("eval", "Residual variance 1 - rho^2 between input and embedding distances");
  InputOptions eval_in;
  EmbedFlags eval_flags;
  std::string eval_embedding;
  std::string eval_kept;
  std::optional<std::size_t> eval_k;
  add_input(eval, eval_in);
  eval->add_option("--embedding", eval_embedding, "Embedding CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--kept", eval_kept, "Row indices of the input kept by a largest-component embedding")
      ->check(CLI::ExistingFile);
  eval->add_option("--k", eval_k, "Neighbor count of the graph used for geodesic D_x");
  eval->add_option("--metric", eval_flags.metric, "Input distances D_x: Euclidean or graph geodesic")
      ->check(CLI::IsMember({"euclidean", "geodesic"}))
      ->capture_default_str();

  // sweep-k
  auto* sweep_k_cmd = app.add_subcommand("sweep-k", "Residual variance for every fixed K in [k-min, k-max]");
  InputOptions sk_in;
  EmbedFlags sk_flags;
  std::string sk_algo = "lle";
  std::size_t sk_d = 2;
  std::size_t sk_min = 3;
  std::size_t sk_max = 18;
  std::string sk_json;
  std::string sk_csv;
  add_input(sweep_k_cmd, sk_in);
  add_algo(sweep_k_cmd, sk_algo)->capture_default_str();
  sweep_k_cmd->add_option("--d", sk_d, "Target dimension d")->capture_default_str();
  sweep_k_cmd->add_option("--k-min", sk_min, "Smallest K")->capture_default_str();
  sweep_k_cmd->add_option("--k-max", sk_max, "Largest K")->capture_default_str();
  add_embed_flags(sweep_k_cmd, sk_flags, true);
  sweep_k_cmd->add_option("--json", sk_json, "Also write the JSON report here");
  sweep_k_cmd->add_option("--csv", sk_csv, "Also write K,residual_variance CSV here");

  // sweep-groups
  auto* sweep_g_cmd = app.add_subcommand("sweep-groups", "Residual variance of adaptive runs for each group count G");
  InputOptions sg_in;
  CurvatureOptions sg_curv;
  AdaptiveOptions sg_adapt;
  EmbedFlags sg_flags;
  std::string sg_algo = "lle";
  std::size_t sg_d = 2;
  std::vector<std::size_t> sg_values{1, 2, 4, 8};
  std::string sg_json;
  std::string sg_csv;
  add_input(sweep_g_cmd, sg_in);
  add_algo(sweep_g_cmd, sg_algo)->capture_default_str();
  sweep_g_cmd->add_option("--d", sg_d, "Target dimension d")->capture_default_str();
  sweep_g_cmd->add_option("--g-values", sg_values, "Group counts, strictly increasing")
      ->delimiter(',')
      ->capture_default_str();
  add_curvature(sweep_g_cmd, sg_curv);
  add_adaptive(sweep_g_cmd, sg_adapt, false);
  add_embed_flags(sweep_g_cmd, sg_flags, true);
  sweep_g_cmd->add_option("--json", sg_json, "Also write the JSON report here");
  sweep_g_cmd->add_option("--csv", sg_csv, "Also write G,residual_variance CSV here");

  // pipeline
  auto* pipeline = app.add_subcommand(
      "pipeline", "Curvature, adaptive K, adaptive and fixed-K embeddings, residual variances and report.json");
  InputOptions pl_in;
  CurvatureOptions pl_curv;
  AdaptiveOptions pl_adapt;
  EmbedFlags pl_flags;
  std::vector<std::string> pl_algos{"lle", "isomap"};
  std::vector<std::size_t> pl_fixed{8, 10, 12};
  std::size_t pl_d = 2;
  std::string pl_out_dir;
  add_input(pipeline, pl_in);
  pipeline->add_option("--algo", pl_algos, "Algorithms to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"lle", "isomap"}))
      ->capture_default_str();
  pipeline->add_option("--fixed-k", pl_fixed, "Fixed K values to compare against")
      ->delimiter(',')
      ->capture_default_str();
  pipeline->add_option("--d", pl_d, "Target dimension d")->capture_default_str();
  add_curvature(pipeline, pl_curv);
  add_adaptive(pipeline, pl_adapt);
  add_embed_flags(pipeline, pl_flags, true);
  pipeline->add_option("--out-dir", pl_out_dir, "Artifact directory (default: $ADAPTK_OUTPUT_DIR or ./adaptk_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    set_thread_count(threads);

    if (*generate) {
      const fs::path out = resolve_output(gen_out, "roll.csv");
      save_csv(generate_swiss_roll(gen_n, Seed{gen_seed}), out);
      std::cerr << "wrote " << gen_n << " points to " << out.string() << '\n';
    } else if (*curvature) {
      const fs::path out = resolve_output(curv_out, "curvature.csv");
      const PointCloud cloud = load_input(curv_in);
      const CurvatureField field = curvature_field(cloud, curvature_config(curv_opts, cloud.dimension(), curv_d));
      write_curvature_csv(field, out);
      nlohmann::json summary = to_json(field);
      summary["file"] = out.string();
      std::cout << summary.dump(2) << '\n';
    } else if (*adapt) {
      const fs::path out = resolve_output(adapt_out, "kan.csv");
      const PointCloud cloud = load_input(adapt_in);
      const AdaptiveKConfig ac = adaptive_config(adapt_opts, cloud.dimension(), adapt_d, cloud.size());
      const CurvatureField field = curvature_field(cloud, curvature_config(adapt_curv, cloud.dimension(), adapt_d));
      const KAssignment kan = assign_k(field, ac, adapt_opts);
      write_kassignment_csv(kan, out);
      nlohmann::json summary = to_json(kan);
      summary["file"] = out.string();
      std::cout << summary.dump(2) << '\n';
    } else if (*embed_cmd) {
      if (!emb_k && !emb_adaptive) throw InvalidArgument("embed needs either --k or --adaptive");
      const fs::path out = resolve_output(emb_out, "embedding.csv");
      const PointCloud cloud = load_input(emb_in);
      KPolicy policy = KPolicy::fixed(emb_k.value_or(1));
      if (emb_adaptive) {
        const AdaptiveKConfig ac = adaptive_config(emb_adapt, cloud.dimension(), emb_d, cloud.size());
        const CurvatureField field = curvature_field(cloud, curvature_config(emb_curv, cloud.dimension(), emb_d));
        policy = assign_k(field, ac, emb_adapt).policy();
      }
      const NeighborGraph graph = knn(cloud, policy);
      const Embedding e = embed(cloud, graph, parse_algorithm(emb_algo), emb_d, embed_options(emb_flags));
      print_warnings(e.warnings);
      write_matrix_csv(out, e.coords);
      if (!e.kept_indices.empty()) {
        fs::path kept = out;
        kept.replace_extension(".kept.csv");
        Matrix idx(static_cast<Eigen::Index>(e.kept_indices.size()), 1);
        for (std::size_t i = 0; i < e.kept_indices.size(); ++i) {
          idx(static_cast<Eigen::Index>(i), 0) = static_cast<double>(e.kept_indices[i]);
        }
        write_matrix_csv(kept, idx);
        std::cerr << "kept " << e.kept_indices.size() << " of " << cloud.size() << " points; indices in "
                  << kept.string() << '\n';
      }
      std::cerr << "wrote " << e.size() << " x " << e.dimension() << " embedding (" << e.k_policy << ") to "
                << out.string() << '\n';
    } else if (*eval) {
      const EmbedOptions opts = embed_options(eval_flags);
      if (opts.input_metric == InputMetric::geodesic && !eval_k) {
        throw InvalidArgument("--metric geodesic needs --k for the neighbor graph");
      }
      const PointCloud cloud = load_input(eval_in);
      const Matrix y = read_matrix_csv(fs::path(eval_embedding));
      DistanceMatrix dx = opts.input_metric == InputMetric::geodesic
                              ? geodesic_distances(cloud, knn(cloud, KPolicy::fixed(*eval_k))).distances
                              : pairwise_euclidean(cloud);
      if (!eval_kept.empty()) {
        const Matrix kept = read_matrix_csv(fs::path(eval_kept));
        std::vector<std::size_t> rows;
        for (Eigen::Index i = 0; i < kept.rows(); ++i) {
          const double v = kept(i, 0);
          if (v < 0 || v >= static_cast<double>(cloud.size())) throw InvalidArgument("kept index out of range");
          rows.push_back(static_cast<std::size_t>(v));
        }
        dx = detail::restrict_rows(dx, rows);
      }
      if (static_cast<std::size_t>(y.rows()) != dx.size()) {
        throw InvalidArgument("embedding has " + std::to_string(y.rows()) + " rows but the input has " +
                              std::to_string(dx.size()) + " points");
      }
      const ResidualVarianceReport r = residual_variance(dx, pairwise_euclidean(PointCloud(y)));
      const nlohmann::json out = {{"residual_variance", r.residual_variance},
                                  {"rho", r.rho},
                                  {"n_pairs", r.n_pairs},
                                  {"input_metric", to_string(opts.input_metric)}};
      std::cout << out.dump(2) << '\n';
    } else if (*sweep_k_cmd) {
      if (sk_min < 1 || sk_min > sk_max) throw InvalidArgument("need 1 <= k-min <= k-max");
      const std::optional<fs::path> json_out =
          sk_json.empty() ? std::nullopt : std::optional<fs::path>(resolve_output(sk_json, ""));
      const std::optional<fs::path> csv_out =
          sk_csv.empty() ? std::nullopt : std::optional<fs::path>(resolve_output(sk_csv, ""));
      const PointCloud cloud = load_input(sk_in);
      std::vector<std::size_t> ks;
      for (std::size_t k = sk_min; k <= sk_max; ++k) ks.push_back(k);
      const SweepReport r = sweep_k(cloud, parse_algorithm(sk_algo), ks, sk_d, embed_options(sk_flags));
      const std::string text = to_json(r).dump(2) + "\n";
      if (json_out) write_text(*json_out, text);
      if (csv_out) write_sweep_csv(r, *csv_out);
      std::cout << text;
    } else if (*sweep_g_cmd) {
      const std::optional<fs::path> json_out =
          sg_json.empty() ? std::nullopt : std::optional<fs::path>(resolve_output(sg_json, ""));
      const std::optional<fs::path> csv_out =
          sg_csv.empty() ? std::nullopt : std::optional<fs::path>(resolve_output(sg_csv, ""));
      const PointCloud cloud = load_input(sg_in);
      const AdaptiveKConfig ac = adaptive_config(sg_adapt, cloud.dimension(), sg_d, cloud.size());
      const SweepReport r = sweep_groups(cloud, parse_algorithm(sg_algo), sg_values, sg_d,
                                         curvature_config(sg_curv, cloud.dimension(), sg_d), ac,
                                         embed_options(sg_flags));
      const std::string text = to_json(r).dump(2) + "\n";
      if (json_out) write_text(*json_out, text);
      if (csv_out) write_sweep_csv(r, *csv_out);
      std::cout << text;
    } else if (*pipeline) {
      PipelineConfig c;
      const char* env = std::getenv(kOutputDirEnv);
      c.output_dir = !pl_out_dir.empty() ? fs::path(pl_out_dir)
                     : env && *env       ? fs::path(env)
                                         : fs::path("adaptk_out");
      if (fs::exists(c.output_dir) && !fs::is_directory(c.output_dir)) {
        throw InvalidArgument("output path exists and is not a directory: " + c.output_dir.string());
      }
      const PointCloud cloud = load_input(pl_in);
      c.target_dim = pl_d;
      c.algorithms.clear();
      for (const std::string& a : pl_algos) c.algorithms.push_back(parse_algorithm(a));
      c.fixed_k = pl_fixed;
      c.estimation_size = pl_curv.estimation_size;
      c.rank = pl_curv.rank;
      c.aggregation = pl_curv.aggregation == "mean" ? Aggregation::mean : Aggregation::max;
      const AdaptiveKConfig ac = adaptive_config(pl_adapt, cloud.dimension(), pl_d, cloud.size());
      c.k_init = ac.k_init;
      c.delta_o = ac.delta_o;
      c.bounds = KBounds{ac.k_inf, ac.k_sup};
      c.groups = pl_adapt.groups;
      c.baseline = ac.baseline;
      c.grouping = ac.grouping;
      c.embed = embed_options(pl_flags);
      if (pl_in.path.empty()) c.seed = pl_in.seed;
      const PipelineReport report = run_pipeline(cloud, c);
      for (const PipelineResult& r : report.results) print_warnings(r.warnings);
      std::cout << to_json(report).dump(2) << '\n';
      std::cerr << "artifacts in " << c.output_dir.string() << '\n';
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCompute;
  }
  return 0;
}
