#include "vision/krylov.hpp"

#include <cmath>

namespace vision {

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void check_shapes(const VideoTensor& x0, const VideoTensor& y, const LinearDegradation& a) {
  if (x0.shape() != a.input_shape()) {
    throw ShapeError("CG: initial iterate " + to_string(x0.shape()) + " does not match operator input " +
                     to_string(a.input_shape()));
  }
  if (y.shape() != a.output_shape()) {
    throw ShapeError("CG: measurement " + to_string(y.shape()) + " does not match operator output " +
                     to_string(a.output_shape()));
  }
}

}  // namespace

CgReport cg_normal_equations(std::span<double> x, std::span<const double> y,
                             const LinearDegradation& a, std::uint32_t l) {
  if (l == 0) throw ParameterError("CG needs at least one step");
  if (x.size() != a.input_shape().size() || y.size() != a.output_shape().size()) {
    throw ShapeError("CG: buffer sizes do not match operator " + a.name());
  }

  CgReport report;
  // s = y - A x tracks the data residual, r = A^T s the normal-equation residual.
  std::vector<double> s(y.begin(), y.end());
  {
    const auto ax = a.apply(std::span<const double>(x.data(), x.size()));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= ax[i];
  }
  std::vector<double> r = a.adjoint(s);
  std::vector<double> p = r;
  std::vector<double> ap(s.size());
  std::vector<double> q(x.size());
  double rs = dot(r, r);
  report.residual_history.push_back(norm(s));

  for (std::uint32_t k = 0; k < l; ++k) {
    if (std::sqrt(rs) <= kCgStopTolerance) break;
    a.apply(p, ap);
    const double curvature = dot(ap, ap);
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
      report.breakdown = true;
      break;
    }
    const double alpha = rs / curvature;
    axpy(alpha, p, x);
    axpy(-alpha, ap, s);
    a.adjoint(ap, q);
    axpy(-alpha, q, r);
    const double rs_next = dot(r, r);
    const double beta = rs_next / rs;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rs = rs_next;
    ++report.iterations_run;
    report.residual_history.push_back(norm(s));
  }
  return report;
}

CgResult cg_data_consistency(const VideoTensor& x0, const VideoTensor& y,
                             const LinearDegradation& a, std::uint32_t l) {
  check_shapes(x0, y, a);
  auto x = to_double(x0.data());
  const auto yd = to_double(y.data());
  CgReport report = cg_normal_equations(x, yd, a, l);
  return {VideoTensor(x0.shape(), x0.range(), to_float(x)), std::move(report)};
}

double krylov_membership(const VideoTensor& x0, const VideoTensor& x_bar, const VideoTensor& y,
                         const LinearDegradation& a, std::uint32_t l) {
  check_shapes(x0, y, a);
  if (x_bar.shape() != x0.shape()) throw ShapeError("krylov_membership: x_bar shape mismatch");
  if (x0.size() > kKrylovMembershipCapacity) {
    throw CapacityError("krylov_membership supports at most " +
                        std::to_string(kKrylovMembershipCapacity) + " elements, got " +
                        std::to_string(x0.size()));
  }
  if (l == 0) throw ParameterError("Krylov dimension must be >= 1");

  const auto xd = to_double(x0.data());
  const auto xb = to_double(x_bar.data());
  std::vector<double> d(xd.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = xb[i] - xd[i];
  const double dnorm = norm(d);
  if (dnorm == 0.0) return 0.0;

  auto normal_map = [&](std::span<const double> v) { return a.adjoint(a.apply(v)); };

  std::vector<double> s = to_double(y.data());
  const auto ax = a.apply(xd);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] -= ax[i];
  std::vector<double> r = a.adjoint(s);

  // Arnoldi-style orthonormal basis of span{r, Mr, ..., M^{l-1} r}.
  std::vector<std::vector<double>> basis;
  std::vector<double> w = r;
  for (std::uint32_t k = 0; k < l; ++k) {
    const double before = norm(w);
    if (before == 0.0) break;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) axpy(-dot(w, b), b, w);
    }
    const double after = norm(w);
    if (after <= 1e-10 * before) break;  // invariant subspace reached
    for (double& v : w) v /= after;
    basis.push_back(w);
    w = normal_map(basis.back());
  }

  std::vector<double> resid = d;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) axpy(-dot(resid, b), b, resid);
  }
  return norm(resid) / dnorm;
}

}  // namespace vision
