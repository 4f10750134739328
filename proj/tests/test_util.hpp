#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "vision/degrade.hpp"
#include "vision/rng.hpp"
#include "vision/tensor.hpp"

namespace vision::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(VISION_TEST_DATA) / name;
}

inline std::vector<double> random_vector(std::size_t n, std::uint32_t sub, std::uint64_t seed = 99) {
  std::vector<float> f(n);
  CounterRng(seed, make_stream(RngDomain::kTest, sub)).fill_gaussian(f);
  return {f.begin(), f.end()};
}

inline VideoTensor random_video(Shape s, std::uint32_t sub, RangeTag range = RangeTag::kSymmetric) {
  std::vector<float> f(s.size());
  CounterRng(123, make_stream(RngDomain::kTest, sub)).fill_gaussian(f);
  return VideoTensor(s, range, std::move(f));
}

// Low-frequency moving pattern in [0.1, 0.9], UNIT range.
inline VideoTensor smooth_video(Shape s, double phase = 0.0) {
  VideoTensor v(s, RangeTag::kUnit);
  const double pi = 3.14159265358979323846;
  for (std::uint32_t n = 0; n < s.n; ++n) {
    for (std::uint32_t c = 0; c < s.c; ++c) {
      for (std::uint32_t y = 0; y < s.h; ++y) {
        for (std::uint32_t x = 0; x < s.w; ++x) {
          const double u = static_cast<double>(x) / s.w, w = static_cast<double>(y) / s.h;
          v.at(n, c, y, x) = static_cast<float>(
              0.5 + 0.2 * std::sin(2 * pi * (u + 0.03 * n) + c + phase) +
              0.15 * std::cos(2 * pi * (1.5 * w - 0.02 * n) + 0.5 * c) +
              0.05 * std::sin(4 * pi * (u + w)));
        }
      }
    }
  }
  return v;
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat dense(const LinearDegradation& op) {
  const auto rows = static_cast<Eigen::Index>(op.output_shape().size());
  const auto cols = static_cast<Eigen::Index>(op.input_shape().size());
  Mat m(rows, cols);
  std::vector<double> e(cols, 0.0);
  for (Eigen::Index j = 0; j < cols; ++j) {
    e[j] = 1.0;
    const auto col = op.apply(e);
    e[j] = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = col[i];
  }
  return m;
}

inline Vec to_eigen(std::span<const float> v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

inline Vec to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double rel_err(const Vec& a, const Vec& b) {
  const double den = std::max(b.norm(), 1e-300);
  return (a - b).norm() / den;
}

}  // namespace vision::testing
