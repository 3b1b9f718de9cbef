#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cate/dataset.hpp"
#include "cate/rng.hpp"

namespace cate::testing {

/// Small observational dataset: y = x0 + d * (1 + x1) + noise.
inline Dataset toy_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  Matrix x(n, p);
  Vector y(n);
  Eigen::VectorXi d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = standard_normal(rng);
    d[i] = i % 2;
    y[i] = x(i, 0) + d[i] * (1.0 + (p > 1 ? x(i, 1) : 0.0)) + 0.1 * standard_normal(rng);
  }
  return make_dataset(y, d, x);
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Engine& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = standard_normal(rng);
  }
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cate_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cate::testing
