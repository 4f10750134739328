#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vision/degrade.hpp"
#include "vision/denoiser.hpp"
#include "vision/krylov.hpp"
#include "vision/schedule.hpp"
#include "vision/tensor.hpp"

namespace vision {

struct SolverConfig {
  std::uint32_t steps = 25;
  double tau_frac = 0.3;
  double lambda_lpf = 2.0;
  std::uint32_t cg_steps = 10;
  double eta = 0.8;
  std::uint64_t seed = 0;
  ScheduleKind schedule = ScheduleKind::kScaledLinear;
  std::string denoiser = "gaussian";
  std::string codec = "identity";
  RangeTag output_range = RangeTag::kUnit;
  std::uint32_t workers = 1;

  void validate() const;
  std::uint32_t tau() const { return tau_from_fraction(tau_frac, steps); }
};

struct LatentBatch {
  std::uint32_t t = 0;
  std::vector<Frame> frames;

  bool frames_identical() const;
};

enum class Stage { kLatent, kDenoised, kEncoded };

// Sees Z_t (kLatent), Ẑ_t (kDenoised) and Z̄_t (kEncoded) at every timestep.
using StepObserver = std::function<void(Stage, const LatentBatch&)>;

struct StepRecord {
  std::uint32_t t = 0;
  double alpha_bar = 1.0;
  double lpf_sigma = 0.0;
  double residual_denoised = 0.0;  // ‖y - A X̂_t‖
  double residual_cg = 0.0;        // ‖y - A X̄_t‖ after CG
  double residual_lpf = 0.0;       // after the low-pass filter
  std::uint32_t cg_iterations = 0;
  bool cg_breakdown = false;
  double seconds = 0.0;
};

struct RunReport {
  std::uint32_t tau = 0;
  std::uint32_t steps = 0;
  std::string operator_name;
  std::vector<StepRecord> timesteps;
  double init_seconds = 0.0;
  double total_seconds = 0.0;
  // ‖y - A x‖ for the returned video, SYMMETRIC range.
  double final_residual = 0.0;
};

struct ReconstructResult {
  VideoTensor video;
  RunReport report;
};

// Maps a measurement into the SYMMETRIC range under operator `a`. A linear
// operator sends 2x - 1 to 2A(x) - A(1), so the offset is A(1) rather than 1.
VideoTensor measurement_to_symmetric(const VideoTensor& y, const LinearDegradation& a);

// Clean-video estimate from a measurement, used to seed the blind PSF fit.
class PreRestorer {
 public:
  virtual ~PreRestorer() = default;
  virtual VideoTensor restore(const VideoTensor& y) const = 0;
};

// Returns a fixed reference video regardless of input.
std::shared_ptr<const PreRestorer> oracle_pre_restorer(VideoTensor reference);
// Returns the measurement unchanged.
std::shared_ptr<const PreRestorer> identity_pre_restorer();

struct PsfEstimate {
  double sigma = 0.0;
  double residual = 0.0;  // ‖y - x_ref * h_sigma‖
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::uint32_t kPsfKernelSize = 61;

// Golden-section search for the Gaussian PSF width that best explains `y`
// as a blur of `x_ref`. Stops once the bracket is narrower than `tolerance`.
PsfEstimate estimate_psf_sigma(const VideoTensor& y, const VideoTensor& x_ref, double lo = 0.2,
                               double hi = 10.0, double tolerance = 1e-3);

struct BlindResult {
  VideoTensor video;
  PsfEstimate round1;
  PsfEstimate round2;
  ReconstructResult first;
  RunReport report;
  // ‖y - A_σk x_k‖ of each round's output under its own PSF.
  double round1_residual = 0.0;
  double round2_residual = 0.0;
};

class Solver {
 public:
  Solver(SolverConfig cfg, std::shared_ptr<const Denoiser> denoiser,
         std::shared_ptr<const LatentCodec> codec);

  const SolverConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  // Encodes the first frame of the SYMMETRIC-range pixel video, inverts it to
  // t = τ and replicates it over `frames` slots.
  LatentBatch initialize_latents(const VideoTensor& first_frame_source, std::uint32_t frames) const;

  ReconstructResult reconstruct(const VideoTensor& y, const LinearDegradation& a,
                                const StepObserver& observer = {}) const;

  BlindResult blind_reconstruct(const VideoTensor& y, const PreRestorer& pre,
                                const StepObserver& observer = {}) const;

 private:
  std::vector<Frame> decode_all(const std::vector<Frame>& latents) const;
  std::vector<Frame> encode_all(const VideoTensor& pixels) const;

  SolverConfig cfg_;
  NoiseSchedule schedule_;
  std::shared_ptr<const Denoiser> denoiser_;
  std::shared_ptr<const LatentCodec> codec_;
};

ReconstructResult reconstruct(const VideoTensor& y, const LinearDegradation& a,
                              const SolverConfig& cfg, std::shared_ptr<const Denoiser> denoiser,
                              std::shared_ptr<const LatentCodec> codec);

struct Measurement {
  VideoTensor y;
  DegradationDescriptor descriptor;
  Shape input_shape;
};

Measurement degrade(const VideoTensor& x, const DegradationDescriptor& descriptor);

}  // namespace vision
