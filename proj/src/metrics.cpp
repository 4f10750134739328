#include "vision/metrics.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace vision {

namespace {

void require_same(const VideoTensor& a, const VideoTensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("metric inputs differ in shape: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  if (a.range() != b.range()) {
    throw ParameterError(std::string("metric inputs differ in range: ") + to_string(a.range()) +
                         " vs " + to_string(b.range()));
  }
}

void finish(MetricReport& r) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : r.per_frame) {
    if (std::isinf(v)) {
      r.has_infinite = true;
      continue;
    }
    sum += v;
    ++count;
  }
  r.mean = count ? sum / static_cast<double>(count) : std::numeric_limits<double>::infinity();
}

std::vector<double> window_1d() {
  std::vector<double> w(kSsimWindow);
  const int r = static_cast<int>(kSsimWindow / 2);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
    s += w[i + r];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Separable weighted average over every valid window position.
std::vector<double> filter_valid(const std::vector<double>& img, std::uint32_t h, std::uint32_t w,
                                 const std::vector<double>& k) {
  const std::uint32_t K = kSsimWindow;
  const std::uint32_t oh = h - K + 1, ow = w - K + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::uint32_t i = 0; i < K; ++i) s += k[i] * img[y * w + x + i];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (std::uint32_t y = 0; y < oh; ++y) {
    for (std::uint32_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::uint32_t i = 0; i < K; ++i) s += k[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

double ssim_plane(std::span<const float> pa, std::span<const float> pb, std::uint32_t h,
                  std::uint32_t w, const std::vector<double>& k) {
  const std::size_t n = pa.size();
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = pa[i];
    b[i] = pb[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, k);
  const auto mu_b = filter_valid(b, h, w, k);
  const auto s_aa = filter_valid(aa, h, w, k);
  const auto s_bb = filter_valid(bb, h, w, k);
  const auto s_ab = filter_valid(ab, h, w, k);
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["metric"] = metric;
  j["peak"] = peak;
  auto frames = nlohmann::json::array();
  for (double v : per_frame) {
    if (std::isinf(v)) frames.push_back("inf");
    else frames.push_back(v);
  }
  j["per_frame"] = frames;
  if (std::isinf(mean)) j["mean"] = "inf";
  else j["mean"] = mean;
  j["has_infinite"] = has_infinite;
  return j.dump(2);
}

MetricReport psnr(const VideoTensor& a, const VideoTensor& b) {
  require_same(a, b);
  MetricReport r;
  r.metric = "psnr";
  r.peak = a.range() == RangeTag::kUnit ? 1.0 : 2.0;
  const auto& s = a.shape();
  for (std::uint32_t n = 0; n < s.n; ++n) {
    auto fa = a.frame_span(n), fb = b.frame_span(n);
    double se = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const double d = static_cast<double>(fa[i]) - fb[i];
      se += d * d;
    }
    const double mse = se / static_cast<double>(fa.size());
    r.per_frame.push_back(mse == 0.0 ? std::numeric_limits<double>::infinity()
                                     : 10.0 * std::log10(r.peak * r.peak / mse));
  }
  finish(r);
  return r;
}

MetricReport ssim(const VideoTensor& a, const VideoTensor& b) {
  require_same(a, b);
  if (a.range() != RangeTag::kUnit) throw ParameterError("ssim expects UNIT-range inputs");
  const auto& s = a.shape();
  if (s.h < kSsimWindow || s.w < kSsimWindow) {
    throw ShapeError("ssim needs frames of at least 11x11, got " + to_string(s));
  }
  MetricReport r;
  r.metric = "ssim";
  r.peak = 1.0;
  const auto k = window_1d();
  const std::size_t plane = s.plane_size();
  for (std::uint32_t n = 0; n < s.n; ++n) {
    auto fa = a.frame_span(n), fb = b.frame_span(n);
    double acc = 0.0;
    for (std::uint32_t c = 0; c < s.c; ++c) {
      acc += ssim_plane(fa.subspan(c * plane, plane), fb.subspan(c * plane, plane), s.h, s.w, k);
    }
    r.per_frame.push_back(acc / s.c);
  }
  finish(r);
  return r;
}

}  // namespace vision
