#pragma once

#include <string>
#include <vector>

#include "vision/tensor.hpp"

namespace vision {

struct MetricReport {
  std::string metric;
  double peak = 1.0;
  // Frames with zero error carry +infinity here and are left out of `mean`.
  std::vector<double> per_frame;
  double mean = 0.0;
  bool has_infinite = false;

  std::string to_json() const;
};

// Per-frame 10·log10(peak² / MSE). Peak is the width of the shared range tag.
MetricReport psnr(const VideoTensor& a, const VideoTensor& b);

inline constexpr std::uint32_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Mean SSIM over the valid window positions of each channel, then averaged
// over channels. Inputs must be UNIT range.
MetricReport ssim(const VideoTensor& a, const VideoTensor& b);

}  // namespace vision
