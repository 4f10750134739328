#include "vision/schedule.hpp"

#include <algorithm>
#include <numbers>

#include "vision/degrade.hpp"
#include "vision/denoiser.hpp"

namespace vision {

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kScaledLinear:
      return "scaled_linear";
    case ScheduleKind::kLinear:
      return "linear";
    case ScheduleKind::kCosine:
      return "cosine";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "scaled_linear") return ScheduleKind::kScaledLinear;
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  throw ParameterError("unknown schedule kind '" + s + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, std::vector<double> alpha_bar)
    : kind_(kind), alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.size() < 2) throw ParameterError("schedule needs at least one step");
  if (alpha_bar_[0] != 1.0) throw ParameterError("schedule must start at alpha_bar = 1");
  for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
    if (!(alpha_bar_[t] < alpha_bar_[t - 1]) || !(alpha_bar_[t] > 0.0)) {
      throw ParameterError("alpha_bar must be strictly decreasing and positive (index " +
                           std::to_string(t) + ")");
    }
  }
}

namespace {

// Cumulative products over the 1000-step training grid, index k = steps taken.
std::vector<double> cumulative_alpha(const std::vector<double>& betas) {
  std::vector<double> cum(betas.size() + 1);
  cum[0] = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) cum[i + 1] = cum[i] * (1.0 - betas[i]);
  return cum;
}

std::vector<double> train_betas(ScheduleKind kind) {
  std::vector<double> betas(kTrainSteps);
  const double last = kTrainSteps - 1;
  for (std::uint32_t i = 0; i < kTrainSteps; ++i) {
    const double u = i / last;
    if (kind == ScheduleKind::kScaledLinear) {
      const double lo = std::sqrt(0.00085), hi = std::sqrt(0.012);
      const double b = lo + (hi - lo) * u;
      betas[i] = b * b;
    } else {
      betas[i] = 1e-4 + (0.02 - 1e-4) * u;
    }
  }
  return betas;
}

double cosine_level(double u) {
  constexpr double s = 0.008;
  const double c = std::cos((u + s) / (1.0 + s) * std::numbers::pi / 2.0);
  return c * c;
}

}  // namespace

NoiseSchedule make_schedule(std::uint32_t steps, ScheduleKind kind) {
  if (steps == 0) throw ParameterError("schedule needs T >= 1");
  if (steps > kTrainSteps) {
    throw ParameterError("T must not exceed " + std::to_string(kTrainSteps));
  }
  std::vector<double> ab(steps + 1);
  ab[0] = 1.0;
  if (kind == ScheduleKind::kCosine) {
    // Affine rescale keeps a_0 = 1 and pins a_T to the floor.
    const double f0 = cosine_level(0.0);
    for (std::uint32_t t = 1; t <= steps; ++t) {
      const double level = cosine_level(static_cast<double>(t) / steps) / f0;
      ab[t] = kCosineFloor + (1.0 - kCosineFloor) * level;
    }
  } else {
    const auto cum = cumulative_alpha(train_betas(kind));
    for (std::uint32_t t = 1; t <= steps; ++t) {
      const auto k = static_cast<std::size_t>(
          std::llround(static_cast<double>(t) * kTrainSteps / static_cast<double>(steps)));
      ab[t] = cum[k];
    }
  }
  return NoiseSchedule(kind, std::move(ab));
}

std::uint32_t tau_from_fraction(double fraction, std::uint32_t steps) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ParameterError("tau fraction must lie in (0, 1]");
  }
  const auto tau = std::llround(fraction * steps);
  return static_cast<std::uint32_t>(std::clamp<long long>(tau, 1, steps));
}

namespace {

void check_t(std::uint32_t t, std::uint32_t lo, const NoiseSchedule& s, const char* what) {
  if (t < lo || t > s.steps()) {
    throw ParameterError(std::string(what) + ": timestep " + std::to_string(t) +
                         " outside [" + std::to_string(lo) + ", " + std::to_string(s.steps()) + "]");
  }
}

void check_same(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": frame shapes differ");
}

// out = ca·a + cb·b evaluated in double.
Frame affine2(const Frame& a, double ca, const Frame& b, double cb) {
  Frame out(a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data[i] = static_cast<float>(ca * a.data[i] + cb * b.data[i]);
  }
  return out;
}

}  // namespace

Frame add_noise(const Frame& x0, const Frame& eps, std::uint32_t t, const NoiseSchedule& s) {
  check_t(t, 0, s, "add_noise");
  check_same(x0, eps, "add_noise");
  return affine2(x0, s.sqrt_alpha_bar(t), eps, s.sqrt_one_minus(t));
}

Frame tweedie_denoise(const Frame& z_t, const Frame& eps_hat, std::uint32_t t,
                      const NoiseSchedule& s) {
  check_t(t, 1, s, "tweedie_denoise");
  check_same(z_t, eps_hat, "tweedie_denoise");
  const double inv = 1.0 / s.sqrt_alpha_bar(t);
  return affine2(z_t, inv, eps_hat, -s.sqrt_one_minus(t) * inv);
}

Frame ddim_invert(const Frame& z0, const Denoiser& denoiser, std::uint32_t tau,
                  const NoiseSchedule& s) {
  check_t(tau, 1, s, "ddim_invert");
  Frame z = z0;
  for (std::uint32_t t = 0; t < tau; ++t) {
    const Frame eps = denoiser.eps(z, std::max<std::uint32_t>(t, 1));
    check_same(z, eps, "ddim_invert");
    // x0_hat = (z - sqrt(1-a_t) eps) / sqrt(a_t);  z' = sqrt(a_{t+1}) x0_hat + sqrt(1-a_{t+1}) eps
    const double inv = 1.0 / s.sqrt_alpha_bar(t);
    const double up = s.sqrt_alpha_bar(t + 1);
    const double mix = s.sqrt_one_minus(t + 1) - up * s.sqrt_one_minus(t) * inv;
    z = affine2(z, up * inv, eps, mix);
  }
  return z;
}

Frame ddim_sample(const Frame& z_tau, const Denoiser& denoiser, std::uint32_t tau,
                  const NoiseSchedule& s) {
  check_t(tau, 1, s, "ddim_sample");
  Frame z = z_tau;
  for (std::uint32_t t = tau; t >= 1; --t) {
    const Frame eps = denoiser.eps(z, t);
    check_same(z, eps, "ddim_sample");
    const double inv = 1.0 / s.sqrt_alpha_bar(t);
    const double down = s.sqrt_alpha_bar(t - 1);
    const double mix = s.sqrt_one_minus(t - 1) - down * s.sqrt_one_minus(t) * inv;
    z = affine2(z, down * inv, eps, mix);
  }
  return z;
}

Frame compose_noise(const Frame& eps_pred, const Frame& shared, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("eta must lie in [0, 1]");
  check_same(eps_pred, shared, "compose_noise");
  return affine2(eps_pred, std::sqrt(1.0 - eta * eta), shared, eta);
}

Frame renoise(const Frame& z_bar, std::uint32_t t_minus_1, const Frame& noise,
              const NoiseSchedule& s) {
  check_t(t_minus_1, 0, s, "renoise");
  check_same(z_bar, noise, "renoise");
  return affine2(z_bar, s.sqrt_alpha_bar(t_minus_1), noise, s.sqrt_one_minus(t_minus_1));
}

VideoTensor lpf_apply(const VideoTensor& x, double sigma) {
  if (!(sigma >= kLpfMinSigma)) return x;
  const auto radius = static_cast<std::uint32_t>(std::ceil(3.0 * sigma));
  const auto taps = gaussian_taps(2 * radius + 1, sigma);
  const auto in = to_double(x.data());
  std::vector<double> out(in.size());
  blur_planes(in, out, x.shape(), taps);
  return VideoTensor(x.shape(), x.range(), to_float(out));
}

VideoTensor lpf_apply(const VideoTensor& x, std::uint32_t t, const LpfSchedule& lpf,
                      const NoiseSchedule& s) {
  return lpf_apply(x, lpf.sigma_at(t, s));
}

}  // namespace vision
