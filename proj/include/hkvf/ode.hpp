#pragma once

// Adaptive Dormand-Prince 5(4) integrator with embedded error estimate and
// fourth-order dense output. Shared by flows, geodesics and collar charts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace hkvf::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Options {
  double rtol = 1e-9;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0 selects a step automatically
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 500000;
};

enum class Status { Completed, Stopped, StepLimit, StepTooSmall };

/// One accepted step with its continuous extension.
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec<N> y0{};
  Vec<N> y1{};
  Vec<N> r2{}, r3{}, r4{}, r5{};

  Vec<N> at(double t) const {
    const double h = t1 - t0;
    if (h == 0.0) return y1;
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = y0[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
    return out;
  }
};

template <std::size_t N>
struct Result {
  Status status = Status::Completed;
  double t = 0.0;
  Vec<N> y{};
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

struct NoLimit {
  template <class Y>
  double operator()(double, const Y&) const {
    return std::numeric_limits<double>::infinity();
  }
};

namespace detail {

template <std::size_t N>
double error_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1, const Options& o) {
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    sum += (err[i] / sk) * (err[i] / sk);
  }
  return std::sqrt(sum / static_cast<double>(N));
}

template <std::size_t N>
Vec<N> axpy(const Vec<N>& y, double h, std::initializer_list<std::pair<double, const Vec<N>*>> terms) {
  Vec<N> out = y;
  for (const auto& [c, k] : terms)
    if (c != 0.0)
      for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
  return out;
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t_end (either direction).
///
/// `observer(const DenseStep<N>&)` is called after every accepted step and may
/// return false to stop. `step_limit(t, y)` caps |h| for the next step.
template <std::size_t N, class Rhs, class Observer, class StepLimit = NoLimit>
Result<N> integrate(Rhs&& rhs, double t0, Vec<N> y0, double t_end, const Options& opt,
                    Observer&& observer, StepLimit&& step_limit = {}) {
  // Dormand-Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  Result<N> res;
  res.t = t0;
  res.y = y0;
  const double span = t_end - t0;
  if (span == 0.0) return res;
  const double dir = span > 0.0 ? 1.0 : -1.0;

  double t = t0;
  Vec<N> y = y0;
  Vec<N> k1 = rhs(t, y);

  auto scaled_norm = [&](const Vec<N>& v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt.atol + opt.rtol * std::abs(y[i]);
      sum += (v[i] / sk) * (v[i] / sk);
    }
    return std::sqrt(sum / static_cast<double>(N));
  };

  double h = std::abs(opt.initial_step);
  if (h == 0.0) {
    const double dn0 = scaled_norm(y), dn1 = scaled_norm(k1);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, std::abs(span));
    Vec<N> y1 = y;
    for (std::size_t i = 0; i < N; ++i) y1[i] += dir * h0 * k1[i];
    const Vec<N> f1 = rhs(t + dir * h0, y1);
    Vec<N> df;
    for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k1[i];
    const double dn2 = scaled_norm(df) / h0;
    const double m = std::max(dn1, dn2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    h = std::min(100.0 * h0, h1);
    // near-zero states make the heuristic collapse; error control shrinks h if needed
    h = std::max(h, 1e-8 * std::min(1.0, std::abs(span)));
  }

  bool last_rejected = false;
  while (true) {
    const double remaining = std::abs(t_end - t);
    if (remaining <= 1e-15 * std::max(1.0, std::abs(t_end))) {
      res.status = Status::Completed;
      break;
    }
    if (res.steps >= opt.max_steps) {
      res.status = Status::StepLimit;
      break;
    }
    h = std::min({h, opt.max_step, std::abs(step_limit(t, y))});
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      res.status = Status::StepTooSmall;
      break;
    }
    const double hs = dir * h;

    using detail::axpy;
    const Vec<N> k2 = rhs(t + c2 * hs, axpy<N>(y, hs, {{a21, &k1}}));
    const Vec<N> k3 = rhs(t + c3 * hs, axpy<N>(y, hs, {{a31, &k1}, {a32, &k2}}));
    const Vec<N> k4 = rhs(t + c4 * hs, axpy<N>(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const Vec<N> k5 =
        rhs(t + c5 * hs, axpy<N>(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const Vec<N> k6 = rhs(
        t + hs, axpy<N>(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const Vec<N> ynew =
        axpy<N>(y, hs, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const Vec<N> k7 = rhs(t + hs, ynew);

    Vec<N> err;
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double en = detail::error_norm<N>(err, y, ynew, opt);

    if (!(en <= 1.0)) {
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
      h *= std::min(1.0, fac);
      last_rejected = true;
      ++res.rejected;
      continue;
    }

    DenseStep<N> ds;
    ds.t0 = t;
    ds.t1 = final_step ? t_end : t + hs;
    ds.y0 = y;
    ds.y1 = ynew;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = ynew[i] - y[i];
      const double bspl = hs * k1[i] - ydiff;
      ds.r2[i] = ydiff;
      ds.r3[i] = bspl;
      ds.r4[i] = ydiff - hs * k7[i] - bspl;
      ds.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                       d7 * k7[i]);
    }

    t = ds.t1;
    y = ynew;
    k1 = k7;
    ++res.steps;
    res.t = t;
    res.y = y;

    if (!observer(ds)) {
      res.status = Status::Stopped;
      break;
    }

    double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h *= fac;
    if (final_step) {
      res.status = Status::Completed;
      break;
    }
  }
  return res;
}

/// Convenience overload without an observer.
template <std::size_t N, class Rhs>
Result<N> integrate(Rhs&& rhs, double t0, Vec<N> y0, double t_end, const Options& opt) {
  return integrate<N>(std::forward<Rhs>(rhs), t0, y0, t_end, opt,
                      [](const DenseStep<N>&) { return true; });
}

}  // namespace hkvf::ode
