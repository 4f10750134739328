#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vision/tensor.hpp"

namespace vision {

class Denoiser;

enum class ScheduleKind { kScaledLinear, kLinear, kCosine };

const char* to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& s);

// Cumulative signal levels alpha_bar[0..T] with alpha_bar[0] = 1 and
// 1 = a_0 > a_1 > ... > a_T > 0.
class NoiseSchedule {
 public:
  NoiseSchedule(ScheduleKind kind, std::vector<double> alpha_bar);

  std::uint32_t steps() const { return static_cast<std::uint32_t>(alpha_bar_.size() - 1); }
  ScheduleKind kind() const { return kind_; }
  double alpha_bar(std::uint32_t t) const { return alpha_bar_.at(t); }
  double sqrt_alpha_bar(std::uint32_t t) const { return std::sqrt(alpha_bar(t)); }
  double sqrt_one_minus(std::uint32_t t) const { return std::sqrt(1.0 - alpha_bar(t)); }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  ScheduleKind kind_;
  std::vector<double> alpha_bar_;
};

// Discrete schedules are defined on a 1000-step grid and subsampled at
// k_t = round(t·1000/T); T must lie in [1, 1000].
inline constexpr std::uint32_t kTrainSteps = 1000;
inline constexpr double kCosineFloor = 1e-5;

NoiseSchedule make_schedule(std::uint32_t steps, ScheduleKind kind);

// τ = round(fraction·T), clamped to [1, T].
std::uint32_t tau_from_fraction(double fraction, std::uint32_t steps);

// z_t = sqrt(a_t) x0 + sqrt(1 - a_t) eps,  0 <= t <= T.
Frame add_noise(const Frame& x0, const Frame& eps, std::uint32_t t, const NoiseSchedule& s);

// x0_hat = (z_t - sqrt(1 - a_t) eps_hat) / sqrt(a_t),  1 <= t <= T.
Frame tweedie_denoise(const Frame& z_t, const Frame& eps_hat, std::uint32_t t,
                      const NoiseSchedule& s);

// Deterministic first-order inversion from t = 0 up to `tau`. The noise
// prediction at step t is taken at max(t, 1). Calls the denoiser tau times.
Frame ddim_invert(const Frame& z0, const Denoiser& denoiser, std::uint32_t tau,
                  const NoiseSchedule& s);

// Deterministic (eta = 0) DDIM sampling from `tau` down to 0.
Frame ddim_sample(const Frame& z_tau, const Denoiser& denoiser, std::uint32_t tau,
                  const NoiseSchedule& s);

// E = sqrt(1 - eta^2) eps_pred + eta shared.
Frame compose_noise(const Frame& eps_pred, const Frame& shared, double eta);

// z_{t-1} = sqrt(a_{t-1}) z_bar + sqrt(1 - a_{t-1}) E.
Frame renoise(const Frame& z_bar, std::uint32_t t_minus_1, const Frame& noise,
              const NoiseSchedule& s);

// Spatial low-pass filter whose width follows the noise level.
struct LpfSchedule {
  double lambda = 2.0;

  double sigma(double alpha_bar) const { return lambda * std::sqrt(1.0 - alpha_bar); }
  double sigma_at(std::uint32_t t, const NoiseSchedule& s) const { return sigma(s.alpha_bar(t)); }
};

// Below this width the filter is treated as the identity.
inline constexpr double kLpfMinSigma = 0.3;

// Per-frame Gaussian blur with radius ceil(3σ), reflect padding.
VideoTensor lpf_apply(const VideoTensor& x, double sigma);
VideoTensor lpf_apply(const VideoTensor& x, std::uint32_t t, const LpfSchedule& lpf,
                      const NoiseSchedule& s);

}  // namespace vision
