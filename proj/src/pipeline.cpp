#include "vision/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "vision/parallel.hpp"
#include "vision/rng.hpp"

namespace vision {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double data_residual(const VideoTensor& x, const std::vector<double>& y,
                     const LinearDegradation& a) {
  const auto ax = a.apply(to_double(x.data()));
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - ax[i]) * (y[i] - ax[i]);
  return std::sqrt(s);
}

// Brings a measurement whose shape differs from the operator input back onto
// the input grid: A^T y divided elementwise by A^T 1, zero where A^T 1 vanishes.
VideoTensor lift_to_input(const VideoTensor& y, const LinearDegradation& a) {
  const auto num = a.adjoint(to_double(y.data()));
  const auto den = a.adjoint(std::vector<double>(a.output_shape().size(), 1.0));
  std::vector<float> out(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) {
    out[i] = den[i] > 1e-12 ? static_cast<float>(num[i] / den[i]) : 0.0f;
  }
  return VideoTensor(a.input_shape(), y.range(), std::move(out));
}

class OraclePreRestorer final : public PreRestorer {
 public:
  explicit OraclePreRestorer(VideoTensor ref) : ref_(std::move(ref)) {}
  VideoTensor restore(const VideoTensor&) const override { return ref_; }

 private:
  VideoTensor ref_;
};

class IdentityPreRestorer final : public PreRestorer {
 public:
  VideoTensor restore(const VideoTensor& y) const override { return y; }
};

}  // namespace

void SolverConfig::validate() const {
  if (steps == 0) throw ParameterError("steps must be >= 1");
  if (!(tau_frac > 0.0 && tau_frac <= 1.0)) throw ParameterError("tau_frac must lie in (0, 1]");
  if (cg_steps == 0) throw ParameterError("cg_steps must be >= 1");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("eta must lie in [0, 1]");
  if (!(lambda_lpf >= 0.0)) throw ParameterError("lambda must be >= 0");
}

bool LatentBatch::frames_identical() const {
  for (const auto& f : frames) {
    if (!(f == frames.front())) return false;
  }
  return true;
}

VideoTensor measurement_to_symmetric(const VideoTensor& y, const LinearDegradation& a) {
  if (y.range() == RangeTag::kSymmetric) return y;
  const auto ones = a.apply(std::vector<double>(a.input_shape().size(), 1.0));
  std::vector<float> out(y.size());
  auto d = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(2.0 * d[i] - ones[i]);
  }
  return VideoTensor(y.shape(), RangeTag::kSymmetric, std::move(out));
}

std::shared_ptr<const PreRestorer> oracle_pre_restorer(VideoTensor reference) {
  return std::make_shared<OraclePreRestorer>(std::move(reference));
}

std::shared_ptr<const PreRestorer> identity_pre_restorer() {
  return std::make_shared<IdentityPreRestorer>();
}

PsfEstimate estimate_psf_sigma(const VideoTensor& y, const VideoTensor& x_ref, double lo,
                               double hi, double tolerance) {
  if (!(lo > 0.0) || !(hi > lo) || !(tolerance > 0.0)) {
    throw ParameterError("PSF bracket must satisfy 0 < lo < hi");
  }
  if (y.shape() != x_ref.shape()) {
    throw ShapeError("PSF fit needs equal shapes, got " + to_string(y.shape()) + " and " +
                     to_string(x_ref.shape()));
  }
  const VideoTensor ref = convert_range(x_ref, y.range());
  const auto yd = to_double(y.data());
  const auto xd = to_double(ref.data());
  std::vector<double> blurred(xd.size());
  auto cost = [&](double sigma) {
    blur_planes(xd, blurred, y.shape(), gaussian_taps(kPsfKernelSize, sigma));
    double s = 0.0;
    for (std::size_t i = 0; i < yd.size(); ++i) s += (yd[i] - blurred[i]) * (yd[i] - blurred[i]);
    return s;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = cost(c), fd = cost(d);
  while (b - a > tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = cost(d);
    }
  }
  PsfEstimate est;
  est.sigma = 0.5 * (a + b);
  est.residual = std::sqrt(cost(est.sigma));
  est.lo = lo;
  est.hi = hi;
  return est;
}

Solver::Solver(SolverConfig cfg, std::shared_ptr<const Denoiser> denoiser,
               std::shared_ptr<const LatentCodec> codec)
    : cfg_(std::move(cfg)),
      schedule_(make_schedule(cfg_.steps, cfg_.schedule)),
      denoiser_(std::move(denoiser)),
      codec_(std::move(codec)) {
  cfg_.validate();
  if (!denoiser_ || !codec_) throw ParameterError("solver needs a denoiser and a codec");
}

std::vector<Frame> Solver::decode_all(const std::vector<Frame>& latents) const {
  std::vector<Frame> out(latents.size());
  parallel_for(latents.size(), cfg_.workers, [&](std::size_t n) { out[n] = codec_->decode(latents[n]); });
  return out;
}

std::vector<Frame> Solver::encode_all(const VideoTensor& pixels) const {
  std::vector<Frame> out(pixels.shape().n);
  parallel_for(out.size(), cfg_.workers, [&](std::size_t n) {
    out[n] = codec_->encode(pixels.frame(static_cast<std::uint32_t>(n)));
  });
  return out;
}

LatentBatch Solver::initialize_latents(const VideoTensor& source, std::uint32_t frames) const {
  if (frames == 0) throw ShapeError("need at least one frame");
  const Frame first = source.frame(0);
  const Frame z_y = codec_->encode(first);
  if (!codec_->decode(z_y).same_shape(first)) {
    throw ShapeError("codec " + codec_->name() + " does not round-trip the frame shape");
  }
  const Frame z_tau = ddim_invert(z_y, *denoiser_, cfg_.tau(), schedule_);
  return LatentBatch{cfg_.tau(), std::vector<Frame>(frames, z_tau)};
}

ReconstructResult Solver::reconstruct(const VideoTensor& y, const LinearDegradation& a,
                                      const StepObserver& observer) const {
  if (y.shape() != a.output_shape()) {
    throw ShapeError("measurement " + to_string(y.shape()) + " does not match operator output " +
                     to_string(a.output_shape()));
  }
  const auto run_start = Clock::now();
  const Shape xs = a.input_shape();
  const VideoTensor ys = measurement_to_symmetric(y, a);
  const auto yd = to_double(ys.data());
  const std::uint32_t tau = cfg_.tau();
  const LpfSchedule lpf{cfg_.lambda_lpf};

  RunReport report;
  report.tau = tau;
  report.steps = cfg_.steps;
  report.operator_name = a.name();

  const VideoTensor init_source = ys.shape() == xs ? ys : lift_to_input(ys, a);
  LatentBatch z = initialize_latents(init_source, xs.n);
  report.init_seconds = seconds_since(run_start);

  auto notify = [&](Stage st, const LatentBatch& b) {
    if (observer) observer(st, b);
  };

  std::vector<Frame> eps(xs.n);
  for (std::uint32_t t = tau; t >= 2; --t) {
    const auto step_start = Clock::now();
    StepRecord rec;
    rec.t = t;
    rec.alpha_bar = schedule_.alpha_bar(t);
    notify(Stage::kLatent, z);

    // Per-frame Tweedie estimate, then decode.
    LatentBatch z_hat{t, std::vector<Frame>(xs.n)};
    parallel_for(xs.n, cfg_.workers, [&](std::size_t n) {
      eps[n] = denoiser_->eps(z.frames[n], t);
      z_hat.frames[n] = tweedie_denoise(z.frames[n], eps[n], t, schedule_);
    });
    notify(Stage::kDenoised, z_hat);
    VideoTensor x_hat = VideoTensor::from_frames(decode_all(z_hat.frames), RangeTag::kSymmetric);
    if (x_hat.shape() != xs) {
      throw ShapeError("decoded batch " + to_string(x_hat.shape()) + " does not match operator input " +
                       to_string(xs));
    }

    // l-step CG over the whole batch.
    CgResult cg = cg_data_consistency(x_hat, ys, a, cfg_.cg_steps);
    rec.residual_denoised = cg.report.residual_history.front();
    rec.residual_cg = cg.report.residual_history.back();
    rec.cg_iterations = cg.report.iterations_run;
    rec.cg_breakdown = cg.report.breakdown;

    // Scheduled low-pass filter, re-encode.
    rec.lpf_sigma = lpf.sigma_at(t, schedule_);
    const VideoTensor x_bar = lpf_apply(cg.x, rec.lpf_sigma);
    rec.residual_lpf = data_residual(x_bar, yd, a);
    LatentBatch z_bar{t, encode_all(x_bar)};
    notify(Stage::kEncoded, z_bar);

    // Renoise with the stored prediction and one shared Gaussian draw.
    const Frame& shape_ref = z_bar.frames.front();
    Frame shared(shape_ref.c, shape_ref.h, shape_ref.w);
    CounterRng(cfg_.seed, make_stream(RngDomain::kSharedNoise, t)).fill_gaussian(shared.data);
    LatentBatch next{t - 1, std::vector<Frame>(xs.n)};
    parallel_for(xs.n, cfg_.workers, [&](std::size_t n) {
      next.frames[n] = renoise(z_bar.frames[n], t - 1, compose_noise(eps[n], shared, cfg_.eta), schedule_);
    });
    z = std::move(next);
    rec.seconds = seconds_since(step_start);
    report.timesteps.push_back(rec);
  }

  // Final Tweedie estimate at t = 1.
  notify(Stage::kLatent, z);
  LatentBatch z0{0, std::vector<Frame>(xs.n)};
  parallel_for(xs.n, cfg_.workers, [&](std::size_t n) {
    z0.frames[n] = tweedie_denoise(z.frames[n], denoiser_->eps(z.frames[n], 1), 1, schedule_);
  });
  notify(Stage::kDenoised, z0);
  VideoTensor out = VideoTensor::from_frames(decode_all(z0.frames), RangeTag::kSymmetric);
  report.final_residual = data_residual(out, yd, a);
  report.total_seconds = seconds_since(run_start);
  return {convert_range(out, cfg_.output_range), std::move(report)};
}

BlindResult Solver::blind_reconstruct(const VideoTensor& y, const PreRestorer& pre,
                                      const StepObserver& observer) const {
  BlindResult result;
  const VideoTensor x_pre = pre.restore(y);
  result.round1 = estimate_psf_sigma(y, x_pre);

  const auto blur1 = gaussian_blur_op(y.shape(), kPsfKernelSize, result.round1.sigma);
  result.first = reconstruct(y, blur1, observer);
  result.round1_residual = result.first.report.final_residual;

  result.round2 = estimate_psf_sigma(y, result.first.video);
  const auto blur2 = gaussian_blur_op(y.shape(), kPsfKernelSize, result.round2.sigma);
  ReconstructResult second = reconstruct(y, blur2, observer);
  result.round2_residual = second.report.final_residual;
  result.video = std::move(second.video);
  result.report = std::move(second.report);
  return result;
}

ReconstructResult reconstruct(const VideoTensor& y, const LinearDegradation& a,
                              const SolverConfig& cfg, std::shared_ptr<const Denoiser> denoiser,
                              std::shared_ptr<const LatentCodec> codec) {
  return Solver(cfg, std::move(denoiser), std::move(codec)).reconstruct(y, a);
}

Measurement degrade(const VideoTensor& x, const DegradationDescriptor& descriptor) {
  const LinearDegradation op = build_operator(descriptor, x.shape());
  return Measurement{op.apply(x), descriptor, x.shape()};
}

}  // namespace vision
