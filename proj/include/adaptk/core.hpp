#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "adaptk/error.hpp"
#include "adaptk/parallel.hpp"

namespace adaptk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// n points in ambient dimension D, one point per row. Immutable once built;
// row i is point i everywhere downstream.
class PointCloud {
 public:
  explicit PointCloud(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1) {
      throw InvalidArgument("point cloud needs at least one point and one dimension");
    }
    if (!points_.allFinite()) throw InvalidArgument("point cloud contains non-finite coordinates");
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(points_.cols()); }

  const Matrix& points() const noexcept { return points_; }
  auto point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)); }

 private:
  Matrix points_;
};

enum class MetricTag { euclidean, geodesic };

inline std::string_view to_string(MetricTag tag) {
  return tag == MetricTag::euclidean ? "euclidean" : "geodesic";
}

// Dense symmetric n x n matrix of finite nonnegative distances with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix(Matrix values, MetricTag tag) : values_(std::move(values)), tag_(tag) {
    if (values_.rows() != values_.cols() || values_.rows() < 1) {
      throw InvalidArgument("distance matrix must be square and non-empty");
    }
    if (!values_.allFinite()) throw InvalidArgument("distance matrix has non-finite entries");
    const Eigen::Index n = values_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (values_(i, i) != 0.0) throw InvalidArgument("distance matrix diagonal must be zero");
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double a = values_(i, j);
        const double b = values_(j, i);
        if (a < 0.0 || b < 0.0) throw InvalidArgument("distance matrix has negative entries");
        if (std::abs(a - b) > 1e-12 * std::max({1.0, a, b})) {
          throw InvalidArgument("distance matrix is not symmetric");
        }
        values_(j, i) = a;
      }
    }
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  MetricTag metric() const noexcept { return tag_; }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix values_;
  MetricTag tag_;
};

struct Seed {
  std::uint64_t value = 0;
};

namespace detail {
// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

inline constexpr double kSwissRollTMin = 1.5 * std::numbers::pi;
inline constexpr double kSwissRollTMax = 4.5 * std::numbers::pi;
inline constexpr double kSwissRollHeight = 21.0;

// Swiss roll in R^3: t ~ U[3pi/2, 9pi/2], h ~ U[0, 21], point (t cos t, h, t sin t).
// t is drawn before h for each point, so a prefix of a larger roll with the same
// seed reproduces a smaller one.
inline PointCloud generate_swiss_roll(std::size_t n, Seed seed) {
  if (n == 0) throw InvalidArgument("swiss roll needs n >= 1");
  std::mt19937_64 rng(seed.value);
  Matrix points(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double t = kSwissRollTMin + (kSwissRollTMax - kSwissRollTMin) * detail::unit_uniform(rng);
    const double h = kSwissRollHeight * detail::unit_uniform(rng);
    points(i, 0) = t * std::cos(t);
    points(i, 1) = h;
    points(i, 2) = t * std::sin(t);
  }
  return PointCloud(std::move(points));
}

inline DistanceMatrix pairwise_euclidean(const PointCloud& cloud) {
  const Matrix& x = cloud.points();
  const Eigen::Index n = x.rows();
  Matrix dist = Matrix::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = i + 1; j < n; ++j) dist(i, j) = (x.row(i) - x.row(j)).norm();
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) dist(j, i) = dist(i, j);
  }
  return DistanceMatrix(std::move(dist), MetricTag::euclidean);
}

// ---------------------------------------------------------------------------
// CSV: one row per line, comma separated, no header, LF endings.

// 17 significant digits: enough for an exact double round-trip.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j != 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_matrix_csv(out, m);
  if (!out) throw Error("failed writing " + path.string());
}

inline Matrix read_matrix_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // A leading line that starts with a letter is a column header.
    if (rows == 0 && !saw_header && std::isalpha(static_cast<unsigned char>(line.front()))) {
      saw_header = true;
      continue;
    }

    std::size_t fields = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("non-numeric field '" + std::string(field) + "'", line_no);
      }
      if (!std::isfinite(v)) throw ParseError("non-finite field '" + std::string(field) + "'", line_no);
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }

    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw ParseError("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields),
                       line_no);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("empty file", 0);

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
    }
  }
  return m;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_matrix_csv(in);
}

inline PointCloud load_csv(const std::filesystem::path& path) { return PointCloud(read_matrix_csv(path)); }

inline void save_csv(const PointCloud& cloud, const std::filesystem::path& path) {
  write_matrix_csv(path, cloud.points());
}

}  // namespace adaptk
