#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vision/degrade.hpp"
#include "vision/tensor.hpp"

namespace vision {

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct CgReport {
  std::uint32_t iterations_run = 0;
  // ‖y - A x_k‖ for k = 0 (initial iterate) .. iterations_run.
  std::vector<double> residual_history;
  bool breakdown = false;
};

// Gradient-norm threshold below which CG stops early.
inline constexpr double kCgStopTolerance = 1e-10;

// Runs up to `l` CG iterations on A^T A x = A^T y starting from `x` (updated in
// place). The correction stays in the Krylov space K_l(A^T A, A^T(y - A x0)).
// On non-positive curvature the last iterate is kept and `breakdown` is set.
CgReport cg_normal_equations(std::span<double> x, std::span<const double> y,
                             const LinearDegradation& a, std::uint32_t l);

struct CgResult {
  VideoTensor x;
  CgReport report;
};

CgResult cg_data_consistency(const VideoTensor& x0, const VideoTensor& y,
                             const LinearDegradation& a, std::uint32_t l);

inline constexpr std::size_t kKrylovMembershipCapacity = 4096;

// ‖(I - P)(x_bar - x0)‖ / ‖x_bar - x0‖ where P projects onto
// K_l(A^T A, A^T(y - A x0)). Zero when x_bar == x0.
double krylov_membership(const VideoTensor& x0, const VideoTensor& x_bar, const VideoTensor& y,
                         const LinearDegradation& a, std::uint32_t l);

}  // namespace vision
