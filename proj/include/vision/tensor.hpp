#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vision {

// Error taxonomy shared by every module. The CLI maps these to exit codes.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

enum class RangeTag : std::uint8_t { kUnit = 0, kSymmetric = 1 };

const char* to_string(RangeTag tag);

struct Shape {
  std::uint32_t n = 1;
  std::uint32_t c = 1;
  std::uint32_t h = 1;
  std::uint32_t w = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t frame_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// One C×H×W frame. Used for latent frames and for single pixel frames
// passed to codecs and denoisers.
struct Frame {
  std::uint32_t c = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::vector<float> data;

  Frame() = default;
  Frame(std::uint32_t c_, std::uint32_t h_, std::uint32_t w_, float fill = 0.0f)
      : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  bool same_shape(const Frame& o) const { return c == o.c && h == o.h && w == o.w; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// N×C×H×W video, frame-major then channel, row, column.
class VideoTensor {
 public:
  VideoTensor() = default;
  VideoTensor(Shape shape, RangeTag range, float fill = 0.0f);
  VideoTensor(Shape shape, RangeTag range, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  RangeTag range() const { return range_; }
  void set_range(RangeTag r) { range_ = r; }

  std::size_t size() const { return data_.size(); }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }

  float& at(std::uint32_t n, std::uint32_t c, std::uint32_t y, std::uint32_t x) {
    return data_[index(n, c, y, x)];
  }
  float at(std::uint32_t n, std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return data_[index(n, c, y, x)];
  }

  std::span<float> frame_span(std::uint32_t n);
  std::span<const float> frame_span(std::uint32_t n) const;
  Frame frame(std::uint32_t n) const;
  void set_frame(std::uint32_t n, const Frame& f);

  static VideoTensor from_frames(std::span<const Frame> frames, RangeTag range);

  friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

 private:
  std::size_t index(std::uint32_t n, std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  RangeTag range_ = RangeTag::kUnit;
  std::vector<float> data_;
};

VideoTensor convert_range(const VideoTensor& v, RangeTag target);

// Reductions accumulate in double.
double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const float> a);
double norm(std::span<const double> a);

std::vector<double> to_double(std::span<const float> v);
std::vector<float> to_float(std::span<const double> v);

}  // namespace vision
