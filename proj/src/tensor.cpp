#include "vision/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace vision {

const char* to_string(RangeTag tag) {
  return tag == RangeTag::kUnit ? "unit" : "symmetric";
}

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) +
         "," + std::to_string(s.w) + ")";
}

namespace {

void validate(const Shape& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("tensor dimensions must be positive, got " + to_string(s));
  }
}

}  // namespace

VideoTensor::VideoTensor(Shape shape, RangeTag range, float fill)
    : shape_(shape), range_(range) {
  validate(shape_);
  data_.assign(shape_.size(), fill);
}

VideoTensor::VideoTensor(Shape shape, RangeTag range, std::vector<float> data)
    : shape_(shape), range_(range), data_(std::move(data)) {
  validate(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("payload has " + std::to_string(data_.size()) + " values, shape " +
                     to_string(shape_) + " needs " + std::to_string(shape_.size()));
  }
}

std::span<float> VideoTensor::frame_span(std::uint32_t n) {
  return std::span<float>(data_).subspan(n * shape_.frame_size(), shape_.frame_size());
}

std::span<const float> VideoTensor::frame_span(std::uint32_t n) const {
  return std::span<const float>(data_).subspan(n * shape_.frame_size(), shape_.frame_size());
}

Frame VideoTensor::frame(std::uint32_t n) const {
  Frame f(shape_.c, shape_.h, shape_.w);
  auto src = frame_span(n);
  std::copy(src.begin(), src.end(), f.data.begin());
  return f;
}

void VideoTensor::set_frame(std::uint32_t n, const Frame& f) {
  if (f.c != shape_.c || f.h != shape_.h || f.w != shape_.w) {
    throw ShapeError("frame shape does not match video " + to_string(shape_));
  }
  std::copy(f.data.begin(), f.data.end(), frame_span(n).begin());
}

VideoTensor VideoTensor::from_frames(std::span<const Frame> frames, RangeTag range) {
  if (frames.empty()) throw ShapeError("cannot build a video from zero frames");
  const Frame& f0 = frames.front();
  Shape s{static_cast<std::uint32_t>(frames.size()), f0.c, f0.h, f0.w};
  VideoTensor v(s, range);
  for (std::uint32_t n = 0; n < s.n; ++n) v.set_frame(n, frames[n]);
  return v;
}

VideoTensor convert_range(const VideoTensor& v, RangeTag target) {
  VideoTensor out = v;
  out.set_range(target);
  if (v.range() == target) return out;
  auto d = out.data();
  if (target == RangeTag::kSymmetric) {
    for (float& x : d) x = 2.0f * x - 1.0f;
  } else {
    for (float& x : d) x = (x + 1.0f) * 0.5f;
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }
double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> to_double(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

std::vector<float> to_float(std::span<const double> v) {
  std::vector<float> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<float>(x); });
  return out;
}

}  // namespace vision
