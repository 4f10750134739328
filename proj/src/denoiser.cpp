#include "vision/denoiser.hpp"

namespace vision {

namespace {

class ZeroDenoiser final : public Denoiser {
 public:
  Frame eps(const Frame& z, std::uint32_t) const override { return Frame(z.c, z.h, z.w, 0.0f); }
  std::string name() const override { return "zero"; }
};

class GaussianPriorDenoiser final : public Denoiser {
 public:
  explicit GaussianPriorDenoiser(NoiseSchedule s) : schedule_(std::move(s)) {}
  Frame eps(const Frame& z, std::uint32_t t) const override {
    const double k = schedule_.sqrt_one_minus(t);
    Frame out(z.c, z.h, z.w);
    for (std::size_t i = 0; i < z.size(); ++i) out.data[i] = static_cast<float>(k * z.data[i]);
    return out;
  }
  std::string name() const override { return "gaussian"; }

 private:
  NoiseSchedule schedule_;
};

class IdentityCodec final : public LatentCodec {
 public:
  Frame encode(const Frame& pixel) const override { return pixel; }
  Frame decode(const Frame& latent) const override { return latent; }
  std::uint32_t spatial_factor() const override { return 1; }
  std::uint32_t latent_channels(std::uint32_t c) const override { return c; }
  std::string name() const override { return "identity"; }
};

class HaarCodec final : public LatentCodec {
 public:
  Frame encode(const Frame& px) const override {
    if (px.h % 2 != 0 || px.w % 2 != 0) {
      throw ShapeError("haar codec needs even frame dimensions, got " + std::to_string(px.h) + "x" +
                       std::to_string(px.w));
    }
    const std::uint32_t h = px.h / 2, w = px.w / 2;
    Frame out(px.c * 4, h, w);
    for (std::uint32_t c = 0; c < px.c; ++c) {
      const float* src = px.data.data() + static_cast<std::size_t>(c) * px.h * px.w;
      float* ll = out.data.data() + (static_cast<std::size_t>(4 * c) + 0) * h * w;
      float* lh = out.data.data() + (static_cast<std::size_t>(4 * c) + 1) * h * w;
      float* hl = out.data.data() + (static_cast<std::size_t>(4 * c) + 2) * h * w;
      float* hh = out.data.data() + (static_cast<std::size_t>(4 * c) + 3) * h * w;
      for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x) {
          const double a = src[(2 * y) * px.w + 2 * x];
          const double b = src[(2 * y) * px.w + 2 * x + 1];
          const double cc = src[(2 * y + 1) * px.w + 2 * x];
          const double d = src[(2 * y + 1) * px.w + 2 * x + 1];
          const std::size_t o = static_cast<std::size_t>(y) * w + x;
          ll[o] = static_cast<float>(0.5 * (a + b + cc + d));
          lh[o] = static_cast<float>(0.5 * (a - b + cc - d));
          hl[o] = static_cast<float>(0.5 * (a + b - cc - d));
          hh[o] = static_cast<float>(0.5 * (a - b - cc + d));
        }
    }
    return out;
  }

  Frame decode(const Frame& lat) const override {
    if (lat.c % 4 != 0) {
      throw ShapeError("haar latent needs a multiple of 4 channels, got " + std::to_string(lat.c));
    }
    const std::uint32_t h = lat.h, w = lat.w;
    Frame out(lat.c / 4, 2 * h, 2 * w);
    for (std::uint32_t c = 0; c < out.c; ++c) {
      const float* ll = lat.data.data() + (static_cast<std::size_t>(4 * c) + 0) * h * w;
      const float* lh = lat.data.data() + (static_cast<std::size_t>(4 * c) + 1) * h * w;
      const float* hl = lat.data.data() + (static_cast<std::size_t>(4 * c) + 2) * h * w;
      const float* hh = lat.data.data() + (static_cast<std::size_t>(4 * c) + 3) * h * w;
      float* dst = out.data.data() + static_cast<std::size_t>(c) * out.h * out.w;
      for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x) {
          const std::size_t o = static_cast<std::size_t>(y) * w + x;
          const double s = ll[o], p = lh[o], q = hl[o], r = hh[o];
          dst[(2 * y) * out.w + 2 * x] = static_cast<float>(0.5 * (s + p + q + r));
          dst[(2 * y) * out.w + 2 * x + 1] = static_cast<float>(0.5 * (s - p + q - r));
          dst[(2 * y + 1) * out.w + 2 * x] = static_cast<float>(0.5 * (s + p - q - r));
          dst[(2 * y + 1) * out.w + 2 * x + 1] = static_cast<float>(0.5 * (s - p - q + r));
        }
    }
    return out;
  }

  std::uint32_t spatial_factor() const override { return 2; }
  std::uint32_t latent_channels(std::uint32_t c) const override { return 4 * c; }
  std::string name() const override { return "haar"; }
};

}  // namespace

std::shared_ptr<const Denoiser> zero_denoiser() { return std::make_shared<ZeroDenoiser>(); }

std::shared_ptr<const Denoiser> gaussian_prior_denoiser(NoiseSchedule schedule) {
  return std::make_shared<GaussianPriorDenoiser>(std::move(schedule));
}

std::shared_ptr<const LatentCodec> identity_codec() { return std::make_shared<IdentityCodec>(); }

std::shared_ptr<const LatentCodec> haar_codec() { return std::make_shared<HaarCodec>(); }

}  // namespace vision
