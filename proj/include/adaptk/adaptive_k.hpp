#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "adaptk/curvature.hpp"

namespace adaptk {

struct KBounds {
  std::size_t k_inf = 0;
  std::size_t k_sup = 0;

  friend bool operator==(const KBounds&, const KBounds&) = default;
};

// k_inf = d + 1 (K must exceed d); k_sup = min(6D, n - 1).
inline KBounds default_bounds(std::size_t ambient_dim, std::size_t target_dim, std::size_t n) {
  if (ambient_dim < 1 || target_dim < 1) throw InvalidArgument("dimensions must be >= 1");
  if (n <= target_dim + 1) {
    throw InvalidArgument("need n > d + 1 to choose K (n = " + std::to_string(n) +
                          ", d = " + std::to_string(target_dim) + ")");
  }
  return {target_dim + 1, std::min(6 * ambient_dim, n - 1)};
}

// Reference curvature that j_inf[i] is compared against.
enum class Baseline {
  global_mean,        // mean of the whole field
  neighborhood_mean,  // mean over the point's estimation neighborhood
};

// How points are split into G groups sharing one K.
enum class Grouping {
  curvature_quantile,  // sort by j_inf, contiguous near-equal slices
  index_contiguous,    // contiguous slices of point index
};

inline std::string_view to_string(Baseline b) {
  return b == Baseline::global_mean ? "global_mean" : "neighborhood_mean";
}
inline std::string_view to_string(Grouping g) {
  return g == Grouping::curvature_quantile ? "curvature_quantile" : "index_contiguous";
}

struct AdaptiveKConfig {
  std::size_t k_init = 8;               // K_o
  std::optional<double> delta_o;        // unset: the field's standard deviation
  std::size_t k_inf = 3;
  std::size_t k_sup = 18;
  std::size_t groups = 1;               // G
  Baseline baseline = Baseline::global_mean;
  Grouping grouping = Grouping::curvature_quantile;

  static AdaptiveKConfig with_bounds(KBounds b) {
    AdaptiveKConfig c;
    c.k_inf = b.k_inf;
    c.k_sup = b.k_sup;
    c.k_init = std::clamp<std::size_t>(8, b.k_inf, b.k_sup);
    return c;
  }

  void validate() const {
    if (k_inf > k_sup) throw InvalidArgument("k_inf must be <= k_sup");
    if (k_inf < 1) throw InvalidArgument("k_inf must be >= 1");
    if (k_init < k_inf || k_init > k_sup) throw InvalidArgument("K_o must lie in [k_inf, k_sup]");
    if (delta_o && !(*delta_o > 0.0 && std::isfinite(*delta_o))) {
      throw InvalidArgument("delta_o must be a finite value > 0");
    }
    if (groups < 1) throw InvalidArgument("group count G must be >= 1");
  }
};

// Per-point neighbor counts (the KAN matrix) plus the configuration that produced
// them, with delta_o resolved to the value actually used.
struct KAssignment {
  std::vector<std::size_t> k_values;
  AdaptiveKConfig config;

  std::size_t size() const noexcept { return k_values.size(); }
  std::size_t min() const { return *std::min_element(k_values.begin(), k_values.end()); }
  std::size_t max() const { return *std::max_element(k_values.begin(), k_values.end()); }
  // Lower median.
  std::size_t median() const {
    std::vector<std::size_t> v = k_values;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  }
  KPolicy policy() const { return KPolicy::per_point(k_values); }
};

// Clamp into [k_inf, k_sup], then cap at n - 1.
inline std::size_t clamp_k(long long raw, std::size_t k_inf, std::size_t k_sup, std::size_t n) {
  const auto lo = static_cast<long long>(k_inf);
  const auto hi = static_cast<long long>(k_sup);
  const auto k = static_cast<std::size_t>(std::clamp(raw, lo, hi));
  return std::min(k, n - 1);
}

// K_o + trunc(delta_j / delta_o), clamped.
inline std::size_t k_from_curvature_change(double delta_j, double delta_o, const AdaptiveKConfig& config,
                                           std::size_t n) {
  const double step = std::trunc(delta_j / delta_o);
  constexpr double kLimit = 1e15;
  const auto raw = static_cast<long long>(config.k_init) + static_cast<long long>(std::clamp(step, -kLimit, kLimit));
  return clamp_k(raw, config.k_inf, config.k_sup, n);
}

namespace detail {
// delta_o falls back to the field's standard deviation; a perfectly uniform field
// has zero spread, where every delta_j is 0 anyway, so 1 stands in.
inline double resolve_delta_o(const CurvatureField& field, const AdaptiveKConfig& config) {
  if (config.delta_o) return *config.delta_o;
  return field.std_dev > 0.0 ? field.std_dev : 1.0;
}

inline void check_field(const CurvatureField& field) {
  if (field.size() < 2) throw InvalidArgument("adaptive K needs a field over at least 2 points");
}
}  // namespace detail

inline KAssignment adaptive_k(const CurvatureField& field, const AdaptiveKConfig& config) {
  config.validate();
  detail::check_field(field);
  const std::size_t n = field.size();
  const double delta_o = detail::resolve_delta_o(field, config);
  if (config.baseline == Baseline::neighborhood_mean && field.neighborhoods.size() != n) {
    throw InvalidArgument("neighborhood-mean baseline needs the field's estimation neighborhoods");
  }

  KAssignment out{std::vector<std::size_t>(n), config};
  out.config.delta_o = delta_o;
  for (std::size_t i = 0; i < n; ++i) {
    double reference = field.mean;
    if (config.baseline == Baseline::neighborhood_mean) {
      const auto& nbrs = field.neighborhoods.lists[i];
      double sum = 0.0;
      for (const Neighbor& nb : nbrs) sum += field.j_inf[nb.index];
      reference = sum / static_cast<double>(nbrs.size());
    }
    out.k_values[i] = k_from_curvature_change(reference - field.j_inf[i], delta_o, config, n);
  }
  return out;
}

inline std::vector<std::size_t> group_partition(const CurvatureField& field, std::size_t groups,
                                                Grouping how = Grouping::curvature_quantile) {
  const std::size_t n = field.size();
  if (groups < 1) throw InvalidArgument("group count G must be >= 1");
  if (groups > n) {
    throw InvalidArgument("group count G = " + std::to_string(groups) + " exceeds n = " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (how == Grouping::curvature_quantile) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return field.j_inf[a] < field.j_inf[b]; });
  }
  // Position p of the ordering goes to group floor(p * G / n): sizes differ by at most one.
  std::vector<std::size_t> labels(n);
  for (std::size_t p = 0; p < n; ++p) labels[order[p]] = p * groups / n;
  return labels;
}

// One K per group from the group's mean curvature; every member gets that K.
inline KAssignment grouped_adaptive_k(const CurvatureField& field, const AdaptiveKConfig& config) {
  config.validate();
  detail::check_field(field);
  const std::size_t n = field.size();
  const double delta_o = detail::resolve_delta_o(field, config);
  const auto labels = group_partition(field, config.groups, config.grouping);

  std::vector<double> sums(config.groups, 0.0);
  std::vector<std::size_t> counts(config.groups, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sums[labels[i]] += field.j_inf[i];
    ++counts[labels[i]];
  }
  std::vector<std::size_t> group_k(config.groups);
  for (std::size_t g = 0; g < config.groups; ++g) {
    // A singleton group's mean is its member's value exactly, matching adaptive_k.
    const double group_mean = counts[g] == 1 ? sums[g] : sums[g] / static_cast<double>(counts[g]);
    group_k[g] = k_from_curvature_change(field.mean - group_mean, delta_o, config, n);
  }

  KAssignment out{std::vector<std::size_t>(n), config};
  out.config.delta_o = delta_o;
  for (std::size_t i = 0; i < n; ++i) out.k_values[i] = group_k[labels[i]];
  return out;
}

// CSV with header "index,k".
inline void write_kassignment_csv(const KAssignment& kan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "index,k\n";
  for (std::size_t i = 0; i < kan.size(); ++i) out << i << ',' << kan.k_values[i] << '\n';
}

inline nlohmann::json to_json(const AdaptiveKConfig& c) {
  nlohmann::json j = {{"k_init", c.k_init},
                      {"k_inf", c.k_inf},
                      {"k_sup", c.k_sup},
                      {"groups", c.groups},
                      {"baseline", to_string(c.baseline)},
                      {"grouping", to_string(c.grouping)}};
  j["delta_o"] = c.delta_o ? nlohmann::json(*c.delta_o) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const KAssignment& kan) {
  return {{"k_values", kan.k_values},
          {"min", kan.min()},
          {"median", kan.median()},
          {"max", kan.max()},
          {"config", to_json(kan.config)}};
}

}  // namespace adaptk
