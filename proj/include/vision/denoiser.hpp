#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "vision/schedule.hpp"
#include "vision/tensor.hpp"

namespace vision {

// Noise predictor eps(z, t) for one latent frame. Called per frame; the
// pipeline owns cross-frame parallelism, so implementations must be safe for
// concurrent calls.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Frame eps(const Frame& z, std::uint32_t t) const = 0;
  virtual bool deterministic() const { return true; }
  virtual std::string name() const = 0;
};

// Pixel frame <-> latent frame.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Frame encode(const Frame& pixel) const = 0;
  virtual Frame decode(const Frame& latent) const = 0;
  virtual std::uint32_t spatial_factor() const = 0;
  virtual std::uint32_t latent_channels(std::uint32_t pixel_channels) const = 0;
  virtual std::string name() const = 0;
};

// eps = 0.
std::shared_ptr<const Denoiser> zero_denoiser();

// eps = sqrt(1 - a_t) z, the posterior-mean noise predictor for a standard
// normal latent prior.
std::shared_ptr<const Denoiser> gaussian_prior_denoiser(NoiseSchedule schedule);

std::shared_ptr<const LatentCodec> identity_codec();

// Orthonormal 2×2 Haar analysis per channel: latent channel 4c+b holds band b
// (LL, LH, HL, HH) of pixel channel c at half resolution.
std::shared_ptr<const LatentCodec> haar_codec();

// Forwards to another denoiser and counts calls.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(std::shared_ptr<const Denoiser> inner) : inner_(std::move(inner)) {}
  Frame eps(const Frame& z, std::uint32_t t) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->eps(z, t);
  }
  bool deterministic() const override { return inner_->deterministic(); }
  std::string name() const override { return inner_->name(); }
  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  std::shared_ptr<const Denoiser> inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace vision
