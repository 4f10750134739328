#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vision/tensor.hpp"

namespace vision {

// Structured parameters that rebuild a degradation exactly.
struct DegradationDescriptor {
  // identity | deblur | sr | inpaint | average | deblur+ | sr+ | inpaint+
  std::string task = "identity";
  std::uint32_t blur_kernel = 61;
  double blur_sigma = 3.0;
  std::uint32_t sr_factor = 4;
  double mask_rate = 0.5;
  bool mask_per_frame = true;
  std::uint32_t average_window = 7;
  // For the "+" tasks: apply the temporal average before the spatial operator.
  bool temporal_first = true;
  std::uint64_t seed = 0;

  friend bool operator==(const DegradationDescriptor&, const DegradationDescriptor&) = default;
};

const std::vector<std::string>& known_tasks();

// Matrix-free linear map between two tensor shapes. Buffers are flat in
// N,C,H,W order and use double precision.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Shape input_shape() const = 0;
  virtual Shape output_shape() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual void adjoint(std::span<const double> y, std::span<double> x) const = 0;
  virtual std::string name() const = 0;
};

// Value handle over an immutable operator. Cheap to copy, safe to share.
class LinearDegradation {
 public:
  LinearDegradation() = default;
  explicit LinearDegradation(std::shared_ptr<const LinearOperator> impl,
                             std::optional<DegradationDescriptor> descriptor = std::nullopt);

  Shape input_shape() const { return impl_->input_shape(); }
  Shape output_shape() const { return impl_->output_shape(); }
  std::string name() const { return impl_->name(); }
  const std::optional<DegradationDescriptor>& descriptor() const { return descriptor_; }
  bool valid() const { return impl_ != nullptr; }
  const LinearOperator& impl() const { return *impl_; }

  LinearDegradation with_descriptor(DegradationDescriptor d) const {
    return LinearDegradation(impl_, std::move(d));
  }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> adjoint(std::span<const double> y) const;
  void apply(std::span<const double> x, std::span<double> y) const;
  void adjoint(std::span<const double> y, std::span<double> x) const;

  // Tensor overloads keep the range tag of their argument.
  VideoTensor apply(const VideoTensor& x) const;
  VideoTensor adjoint(const VideoTensor& y) const;

 private:
  std::shared_ptr<const LinearOperator> impl_;
  std::optional<DegradationDescriptor> descriptor_;
};

LinearDegradation identity_op(Shape shape);

// Per-frame, per-channel 2-D convolution with a sampled, normalized Gaussian.
// Same-size output, reflect padding.
LinearDegradation gaussian_blur_op(Shape shape, std::uint32_t kernel_size, double sigma);

// Mean over factor×factor blocks.
LinearDegradation avgpool_sr_op(Shape shape, std::uint32_t factor);

// Multiplies by a {0,1} mask; `rate` is the drop probability. The mask is
// shared across channels, and across frames unless `per_frame`.
LinearDegradation random_mask_op(Shape shape, double rate, std::uint64_t seed, bool per_frame);

// Uniform temporal average over `window` frames, replicate padding, same N.
LinearDegradation frame_average_op(Shape shape, std::uint32_t window);

LinearDegradation compose(const LinearDegradation& outer, const LinearDegradation& inner);

// Row-major dense matrix with rows = output size, cols = input size.
LinearDegradation dense_matrix_op(Shape input, Shape output, std::vector<double> matrix);

// Test double: correct forward map, adjoint multiplied by `scale`.
LinearDegradation with_scaled_adjoint(const LinearDegradation& op, double scale);

LinearDegradation build_operator(const DegradationDescriptor& desc, Shape input_shape);

// Normalized 1-D Gaussian taps at integer offsets -r..r, r = (size-1)/2.
std::vector<double> gaussian_taps(std::uint32_t kernel_size, double sigma);

// Mirror index into [0, n) without repeating the edge sample, any distance.
std::int64_t reflect_index(std::int64_t i, std::int64_t n);

// Separable same-size blur of every H×W plane, reflect padding.
void blur_planes(std::span<const double> in, std::span<double> out, Shape shape,
                 std::span<const double> taps);
void blur_planes_adjoint(std::span<const double> in, std::span<double> out, Shape shape,
                         std::span<const double> taps);

// Rows = output size, cols = input size, row-major.
std::vector<double> materialize(const LinearDegradation& op);
std::vector<double> materialize_adjoint(const LinearDegradation& op);

// max over trials of |<Ax,y> - <x,A^T y>| / (|<Ax,y>| + |<x,A^T y>| + eps·‖Ax‖‖y‖)
double adjoint_check(const LinearDegradation& op, std::uint32_t trials, std::uint64_t seed);

// Fraction of dropped pixels in a mask operator's realized pattern.
double mask_drop_fraction(const LinearDegradation& op);

}  // namespace vision
