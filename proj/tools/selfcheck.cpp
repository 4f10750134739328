#include "selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <vector>

#include "vision/degrade.hpp"
#include "vision/denoiser.hpp"
#include "vision/krylov.hpp"
#include "vision/rng.hpp"
#include "vision/schedule.hpp"

namespace vision::cli {

namespace {

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
};

Frame random_frame(std::uint32_t c, std::uint32_t h, std::uint32_t w, std::uint32_t sub) {
  Frame f(c, h, w);
  CounterRng(7, make_stream(RngDomain::kTest, sub)).fill_gaussian(f.data);
  return f;
}

double max_abs_diff(const Frame& a, const Frame& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  }
  return m;
}

double cg_finite_termination() {
  const std::uint32_t d = 32;
  const Shape s{1, 1, 1, d};
  std::vector<double> m(d * d);
  CounterRng rng(11, make_stream(RngDomain::kTest, 1));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(i) - 0.5;
  for (std::uint32_t i = 0; i < d; ++i) m[i * d + i] += 4.0;
  const auto a = dense_matrix_op(s, s, m);
  std::vector<double> x_true(d);
  for (std::uint32_t i = 0; i < d; ++i) x_true[i] = rng.uniform(1000 + i) * 2.0 - 1.0;
  const auto y = a.apply(x_true);
  std::vector<double> x(d, 0.0);
  cg_normal_equations(x, y, a, d);
  double num = 0.0, den = 0.0;
  for (std::uint32_t i = 0; i < d; ++i) {
    num += (x[i] - x_true[i]) * (x[i] - x_true[i]);
    den += x_true[i] * x_true[i];
  }
  return std::sqrt(num / den);
}

double tweedie_identity() {
  const auto sched = make_schedule(25, ScheduleKind::kScaledLinear);
  const Frame x = random_frame(4, 8, 8, 2);
  const Frame e = random_frame(4, 8, 8, 3);
  double worst = 0.0;
  for (std::uint32_t t = 1; t <= 25; ++t) {
    worst = std::max(worst, max_abs_diff(tweedie_denoise(add_noise(x, e, t, sched), e, t, sched), x));
  }
  return worst;
}

double codec_roundtrip(const LatentCodec& codec) {
  const Frame x = random_frame(3, 16, 16, 4);
  return max_abs_diff(codec.decode(codec.encode(x)), x);
}

}  // namespace

bool run_selfcheck(const SelfcheckOptions& opts, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Check> checks;

  const Shape shape{8, 3, 16, 16};
  for (const auto& task : known_tasks()) {
    DegradationDescriptor d;
    d.task = task;
    d.seed = 5;
    LinearDegradation op = build_operator(d, shape);
    if (opts.inject_fault == "adjoint") op = with_scaled_adjoint(op, 2.0);
    checks.push_back({"adjoint " + task, adjoint_check(op, 5, 17), 1e-5});
  }
  checks.push_back({"cg finite termination", cg_finite_termination(), 1e-6});
  checks.push_back({"tweedie identity", tweedie_identity(), 1e-5});
  checks.push_back({"codec identity", codec_roundtrip(*identity_codec()), 1e-6});
  checks.push_back({"codec haar", codec_roundtrip(*haar_codec()), 1e-5});

  bool all = true;
  for (const auto& c : checks) {
    const bool ok = std::isfinite(c.value) && c.value <= c.limit;
    all = all && ok;
    out << (ok ? "PASS  " : "FAIL  ") << std::left << std::setw(26) << c.name << std::scientific
        << std::setprecision(3) << c.value << " <= " << c.limit << "\n";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << std::defaultfloat << (all ? "all checks passed" : "some checks failed") << " in " << secs
      << " s\n";
  return all;
}

}  // namespace vision::cli
