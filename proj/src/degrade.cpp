#include "vision/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vision/rng.hpp"

namespace vision {

namespace {

void check_len(std::span<const double> v, const Shape& s, const char* what) {
  if (v.size() != s.size()) {
    throw ShapeError(std::string(what) + ": buffer has " + std::to_string(v.size()) +
                     " values, expected " + std::to_string(s.size()) + " for " + to_string(s));
  }
}

class IdentityOp final : public LinearOperator {
 public:
  explicit IdentityOp(Shape s) : shape_(s) {}
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    std::copy(x.begin(), x.end(), y.begin());
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    std::copy(y.begin(), y.end(), x.begin());
  }
  std::string name() const override { return "identity"; }

 private:
  Shape shape_;
};

class GaussianBlurOp final : public LinearOperator {
 public:
  GaussianBlurOp(Shape s, std::uint32_t size, double sigma)
      : shape_(s), size_(size), sigma_(sigma), taps_(gaussian_taps(size, sigma)) {}
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    blur_planes(x, y, shape_, taps_);
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    blur_planes_adjoint(y, x, shape_, taps_);
  }
  std::string name() const override {
    return "gaussian_blur(" + std::to_string(size_) + "," + std::to_string(sigma_) + ")";
  }

 private:
  Shape shape_;
  std::uint32_t size_;
  double sigma_;
  std::vector<double> taps_;
};

class AvgPoolOp final : public LinearOperator {
 public:
  AvgPoolOp(Shape s, std::uint32_t f) : in_(s), out_(s), f_(f) {
    out_.h = s.h / f;
    out_.w = s.w / f;
  }
  Shape input_shape() const override { return in_; }
  Shape output_shape() const override { return out_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    const double inv = 1.0 / (static_cast<double>(f_) * f_);
    const std::size_t planes = static_cast<std::size_t>(in_.n) * in_.c;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = x.data() + p * in_.plane_size();
      double* dst = y.data() + p * out_.plane_size();
      for (std::uint32_t oy = 0; oy < out_.h; ++oy) {
        for (std::uint32_t ox = 0; ox < out_.w; ++ox) {
          double s = 0.0;
          for (std::uint32_t dy = 0; dy < f_; ++dy)
            for (std::uint32_t dx = 0; dx < f_; ++dx)
              s += src[(static_cast<std::size_t>(oy) * f_ + dy) * in_.w + ox * f_ + dx];
          dst[static_cast<std::size_t>(oy) * out_.w + ox] = s * inv;
        }
      }
    }
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    const double inv = 1.0 / (static_cast<double>(f_) * f_);
    const std::size_t planes = static_cast<std::size_t>(in_.n) * in_.c;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = y.data() + p * out_.plane_size();
      double* dst = x.data() + p * in_.plane_size();
      for (std::uint32_t iy = 0; iy < in_.h; ++iy)
        for (std::uint32_t ix = 0; ix < in_.w; ++ix)
          dst[static_cast<std::size_t>(iy) * in_.w + ix] =
              src[static_cast<std::size_t>(iy / f_) * out_.w + ix / f_] * inv;
    }
  }
  std::string name() const override { return "avgpool(" + std::to_string(f_) + ")"; }

 private:
  Shape in_;
  Shape out_;
  std::uint32_t f_;
};

class MaskOp final : public LinearOperator {
 public:
  MaskOp(Shape s, double rate, std::uint64_t seed, bool per_frame)
      : shape_(s), rate_(rate), per_frame_(per_frame) {
    const std::size_t plane = s.plane_size();
    mask_.resize(static_cast<std::size_t>(s.n) * plane);
    const CounterRng rng(seed, make_stream(RngDomain::kMask, 0));
    for (std::uint32_t n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < plane; ++i) {
        const std::uint64_t idx = per_frame ? n * plane + i : i;
        mask_[n * plane + i] = rng.uniform(idx) >= rate ? 1 : 0;
      }
    }
  }
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    const std::size_t plane = shape_.plane_size();
    for (std::uint32_t n = 0; n < shape_.n; ++n)
      for (std::uint32_t c = 0; c < shape_.c; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * shape_.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
          y[base + i] = mask_[n * plane + i] ? x[base + i] : 0.0;
      }
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override { apply(y, x); }
  std::string name() const override {
    return std::string("mask(") + std::to_string(rate_) + (per_frame_ ? ",per_frame)" : ",shared)");
  }
  double drop_fraction() const {
    const auto kept = std::count(mask_.begin(), mask_.end(), std::uint8_t{1});
    return 1.0 - static_cast<double>(kept) / static_cast<double>(mask_.size());
  }

 private:
  Shape shape_;
  double rate_;
  bool per_frame_;
  std::vector<std::uint8_t> mask_;
};

class FrameAverageOp final : public LinearOperator {
 public:
  FrameAverageOp(Shape s, std::uint32_t window) : shape_(s), window_(window) {}
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    const std::size_t fs = shape_.frame_size();
    const auto radius = static_cast<std::int64_t>(window_ / 2);
    const auto last = static_cast<std::int64_t>(shape_.n) - 1;
    const double inv = 1.0 / window_;
    std::fill(y.begin(), y.end(), 0.0);
    for (std::int64_t n = 0; n <= last; ++n) {
      double* dst = y.data() + n * fs;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        const double* src = x.data() + std::clamp(n + k, std::int64_t{0}, last) * fs;
        for (std::size_t i = 0; i < fs; ++i) dst[i] += src[i];
      }
      for (std::size_t i = 0; i < fs; ++i) dst[i] *= inv;
    }
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    const std::size_t fs = shape_.frame_size();
    const auto radius = static_cast<std::int64_t>(window_ / 2);
    const auto last = static_cast<std::int64_t>(shape_.n) - 1;
    const double inv = 1.0 / window_;
    std::fill(x.begin(), x.end(), 0.0);
    for (std::int64_t n = 0; n <= last; ++n) {
      const double* src = y.data() + n * fs;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        double* dst = x.data() + std::clamp(n + k, std::int64_t{0}, last) * fs;
        for (std::size_t i = 0; i < fs; ++i) dst[i] += src[i] * inv;
      }
    }
  }
  std::string name() const override { return "frame_average(" + std::to_string(window_) + ")"; }

 private:
  Shape shape_;
  std::uint32_t window_;
};

class ComposedOp final : public LinearOperator {
 public:
  ComposedOp(LinearDegradation outer, LinearDegradation inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Shape input_shape() const override { return inner_.input_shape(); }
  Shape output_shape() const override { return outer_.output_shape(); }
  void apply(std::span<const double> x, std::span<double> y) const override {
    std::vector<double> mid(inner_.output_shape().size());
    inner_.apply(x, mid);
    outer_.apply(mid, y);
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    std::vector<double> mid(outer_.input_shape().size());
    outer_.adjoint(y, mid);
    inner_.adjoint(mid, x);
  }
  std::string name() const override { return outer_.name() + " o " + inner_.name(); }

 private:
  LinearDegradation outer_;
  LinearDegradation inner_;
};

class DenseOp final : public LinearOperator {
 public:
  DenseOp(Shape in, Shape out, std::vector<double> m) : in_(in), out_(out), m_(std::move(m)) {}
  Shape input_shape() const override { return in_; }
  Shape output_shape() const override { return out_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    const std::size_t cols = in_.size();
    for (std::size_t r = 0; r < out_.size(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += m_[r * cols + c] * x[c];
      y[r] = s;
    }
  }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    const std::size_t cols = in_.size();
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t r = 0; r < out_.size(); ++r)
      for (std::size_t c = 0; c < cols; ++c) x[c] += m_[r * cols + c] * y[r];
  }
  std::string name() const override { return "dense"; }

 private:
  Shape in_;
  Shape out_;
  std::vector<double> m_;
};

class ScaledAdjointOp final : public LinearOperator {
 public:
  ScaledAdjointOp(LinearDegradation base, double scale) : base_(std::move(base)), scale_(scale) {}
  Shape input_shape() const override { return base_.input_shape(); }
  Shape output_shape() const override { return base_.output_shape(); }
  void apply(std::span<const double> x, std::span<double> y) const override { base_.apply(x, y); }
  void adjoint(std::span<const double> y, std::span<double> x) const override {
    base_.adjoint(y, x);
    for (double& v : x) v *= scale_;
  }
  std::string name() const override { return base_.name() + " [adjoint x" + std::to_string(scale_) + "]"; }

 private:
  LinearDegradation base_;
  double scale_;
};

}  // namespace

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks{"identity", "deblur",  "sr",  "inpaint",
                                              "average",  "deblur+", "sr+", "inpaint+"};
  return tasks;
}

LinearDegradation::LinearDegradation(std::shared_ptr<const LinearOperator> impl,
                                     std::optional<DegradationDescriptor> descriptor)
    : impl_(std::move(impl)), descriptor_(std::move(descriptor)) {}

void LinearDegradation::apply(std::span<const double> x, std::span<double> y) const {
  check_len(x, input_shape(), "apply input");
  check_len(y, output_shape(), "apply output");
  impl_->apply(x, y);
}

void LinearDegradation::adjoint(std::span<const double> y, std::span<double> x) const {
  check_len(y, output_shape(), "adjoint input");
  check_len(x, input_shape(), "adjoint output");
  impl_->adjoint(y, x);
}

std::vector<double> LinearDegradation::apply(std::span<const double> x) const {
  std::vector<double> y(output_shape().size());
  apply(x, y);
  return y;
}

std::vector<double> LinearDegradation::adjoint(std::span<const double> y) const {
  std::vector<double> x(input_shape().size());
  adjoint(y, x);
  return x;
}

VideoTensor LinearDegradation::apply(const VideoTensor& x) const {
  if (x.shape() != input_shape()) {
    throw ShapeError("operator " + name() + " expects " + to_string(input_shape()) + ", got " +
                     to_string(x.shape()));
  }
  const auto y = apply(to_double(x.data()));
  return VideoTensor(output_shape(), x.range(), to_float(y));
}

VideoTensor LinearDegradation::adjoint(const VideoTensor& y) const {
  if (y.shape() != output_shape()) {
    throw ShapeError("adjoint of " + name() + " expects " + to_string(output_shape()) + ", got " +
                     to_string(y.shape()));
  }
  const auto x = adjoint(to_double(y.data()));
  return VideoTensor(input_shape(), y.range(), to_float(x));
}

std::vector<double> gaussian_taps(std::uint32_t kernel_size, double sigma) {
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw ParameterError("kernel size must be odd and positive, got " + std::to_string(kernel_size));
  }
  if (!(sigma > 0.0)) throw ParameterError("blur sigma must be positive");
  const auto r = static_cast<std::int64_t>(kernel_size / 2);
  std::vector<double> taps(kernel_size);
  double sum = 0.0;
  for (std::int64_t k = -r; k <= r; ++k) {
    taps[k + r] = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    sum += taps[k + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

// One separable pass along rows (horizontal) or columns (vertical) of every plane.
// The forward pass gathers through reflected indices; the adjoint scatters.
void pass(std::span<const double> in, std::span<double> out, Shape shape,
          std::span<const double> taps, bool vertical, bool transpose) {
  const auto h = static_cast<std::int64_t>(shape.h);
  const auto w = static_cast<std::int64_t>(shape.w);
  const auto r = static_cast<std::int64_t>(taps.size() / 2);
  const std::int64_t len = vertical ? h : w;
  const std::size_t planes = static_cast<std::size_t>(shape.n) * shape.c;

  // Precompute the reflected source index of every (position, tap) pair.
  std::vector<std::int64_t> src(static_cast<std::size_t>(len) * taps.size());
  for (std::int64_t i = 0; i < len; ++i)
    for (std::int64_t k = -r; k <= r; ++k) src[i * taps.size() + (k + r)] = reflect_index(i + k, len);

  if (transpose) std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* pin = in.data() + p * shape.plane_size();
    double* pout = out.data() + p * shape.plane_size();
    const std::int64_t lines = vertical ? w : h;
    const std::int64_t stride = vertical ? w : 1;
    const std::int64_t line_step = vertical ? 1 : w;
    for (std::int64_t line = 0; line < lines; ++line) {
      const double* lin = pin + line * line_step;
      double* lout = pout + line * line_step;
      for (std::int64_t i = 0; i < len; ++i) {
        const std::int64_t* idx = &src[i * taps.size()];
        if (!transpose) {
          double s = 0.0;
          for (std::size_t k = 0; k < taps.size(); ++k) s += taps[k] * lin[idx[k] * stride];
          lout[i * stride] = s;
        } else {
          const double v = lin[i * stride];
          for (std::size_t k = 0; k < taps.size(); ++k) lout[idx[k] * stride] += taps[k] * v;
        }
      }
    }
  }
}

}  // namespace

void blur_planes(std::span<const double> in, std::span<double> out, Shape shape,
                 std::span<const double> taps) {
  std::vector<double> tmp(in.size());
  pass(in, tmp, shape, taps, /*vertical=*/false, /*transpose=*/false);
  pass(tmp, out, shape, taps, /*vertical=*/true, /*transpose=*/false);
}

void blur_planes_adjoint(std::span<const double> in, std::span<double> out, Shape shape,
                         std::span<const double> taps) {
  std::vector<double> tmp(in.size());
  pass(in, tmp, shape, taps, /*vertical=*/true, /*transpose=*/true);
  pass(tmp, out, shape, taps, /*vertical=*/false, /*transpose=*/true);
}

LinearDegradation identity_op(Shape shape) {
  return LinearDegradation(std::make_shared<IdentityOp>(shape));
}

LinearDegradation gaussian_blur_op(Shape shape, std::uint32_t kernel_size, double sigma) {
  return LinearDegradation(std::make_shared<GaussianBlurOp>(shape, kernel_size, sigma));
}

LinearDegradation avgpool_sr_op(Shape shape, std::uint32_t factor) {
  if (factor < 2) throw ParameterError("pooling factor must be >= 2");
  if (shape.h % factor != 0 || shape.w % factor != 0) {
    throw ShapeError("frame size " + std::to_string(shape.h) + "x" + std::to_string(shape.w) +
                     " is not divisible by pooling factor " + std::to_string(factor));
  }
  return LinearDegradation(std::make_shared<AvgPoolOp>(shape, factor));
}

LinearDegradation random_mask_op(Shape shape, double rate, std::uint64_t seed, bool per_frame) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ParameterError("mask rate must lie in [0, 1]");
  return LinearDegradation(std::make_shared<MaskOp>(shape, rate, seed, per_frame));
}

LinearDegradation frame_average_op(Shape shape, std::uint32_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ParameterError("averaging window must be odd, got " + std::to_string(window));
  }
  if (window > shape.n) {
    throw ParameterError("averaging window " + std::to_string(window) + " exceeds frame count " +
                         std::to_string(shape.n));
  }
  return LinearDegradation(std::make_shared<FrameAverageOp>(shape, window));
}

LinearDegradation compose(const LinearDegradation& outer, const LinearDegradation& inner) {
  if (inner.output_shape() != outer.input_shape()) {
    throw ShapeError("cannot compose: inner output " + to_string(inner.output_shape()) +
                     " != outer input " + to_string(outer.input_shape()));
  }
  return LinearDegradation(std::make_shared<ComposedOp>(outer, inner));
}

LinearDegradation dense_matrix_op(Shape input, Shape output, std::vector<double> matrix) {
  if (matrix.size() != input.size() * output.size()) {
    throw ShapeError("dense operator needs " + std::to_string(input.size() * output.size()) +
                     " entries, got " + std::to_string(matrix.size()));
  }
  return LinearDegradation(std::make_shared<DenseOp>(input, output, std::move(matrix)));
}

LinearDegradation with_scaled_adjoint(const LinearDegradation& op, double scale) {
  return LinearDegradation(std::make_shared<ScaledAdjointOp>(op, scale), op.descriptor());
}

LinearDegradation build_operator(const DegradationDescriptor& d, Shape input_shape) {
  const std::string& t = d.task;
  const bool plus = !t.empty() && t.back() == '+';
  const std::string base = plus ? t.substr(0, t.size() - 1) : t;

  auto spatial = [&](Shape s) -> LinearDegradation {
    if (base == "deblur") return gaussian_blur_op(s, d.blur_kernel, d.blur_sigma);
    if (base == "sr") return avgpool_sr_op(s, d.sr_factor);
    if (base == "inpaint") return random_mask_op(s, d.mask_rate, d.seed, d.mask_per_frame);
    throw ParameterError("unknown task '" + t + "'");
  };

  LinearDegradation op;
  if (t == "identity") {
    op = identity_op(input_shape);
  } else if (t == "average") {
    op = frame_average_op(input_shape, d.average_window);
  } else if (!plus) {
    op = spatial(input_shape);
  } else if (d.temporal_first) {
    const LinearDegradation avg = frame_average_op(input_shape, d.average_window);
    op = compose(spatial(avg.output_shape()), avg);
  } else {
    const LinearDegradation sp = spatial(input_shape);
    op = compose(frame_average_op(sp.output_shape(), d.average_window), sp);
  }
  return op.with_descriptor(d);
}

std::vector<double> materialize(const LinearDegradation& op) {
  const std::size_t rows = op.output_shape().size();
  const std::size_t cols = op.input_shape().size();
  std::vector<double> m(rows * cols);
  std::vector<double> e(cols, 0.0);
  std::vector<double> col(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) m[i * cols + j] = col[i];
  }
  return m;
}

std::vector<double> materialize_adjoint(const LinearDegradation& op) {
  const std::size_t rows = op.input_shape().size();
  const std::size_t cols = op.output_shape().size();
  std::vector<double> m(rows * cols);
  std::vector<double> e(cols, 0.0);
  std::vector<double> col(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    e[j] = 1.0;
    op.adjoint(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) m[i * cols + j] = col[i];
  }
  return m;
}

double adjoint_check(const LinearDegradation& op, std::uint32_t trials, std::uint64_t seed) {
  if (trials == 0) throw ParameterError("adjoint_check needs at least one trial");
  const std::size_t nin = op.input_shape().size();
  const std::size_t nout = op.output_shape().size();
  double worst = 0.0;
  std::vector<float> xf(nin), yf(nout);
  for (std::uint32_t trial = 0; trial < trials; ++trial) {
    CounterRng(seed, make_stream(RngDomain::kTest, 2 * trial)).fill_gaussian(xf);
    CounterRng(seed, make_stream(RngDomain::kTest, 2 * trial + 1)).fill_gaussian(yf);
    const auto x = to_double(xf);
    const auto y = to_double(yf);
    const auto ax = op.apply(x);
    const auto aty = op.adjoint(y);
    const double lhs = dot(ax, y);
    const double rhs = dot(x, aty);
    const double scale = std::numeric_limits<double>::epsilon() * norm(ax) * norm(y);
    const double denom = std::abs(lhs) + std::abs(rhs) + scale;
    const double err = denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
    worst = std::max(worst, err);
  }
  return worst;
}

double mask_drop_fraction(const LinearDegradation& op) {
  const auto* mask = dynamic_cast<const MaskOp*>(&op.impl());
  if (mask == nullptr) throw ParameterError("operator " + op.name() + " is not a mask");
  return mask->drop_fraction();
}

}  // namespace vision
