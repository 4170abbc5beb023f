#pragma once

// Conformal metrics g = lambda^2 |dz|^2 and expression-defined vector fields:
// Killing residual, slip product, Gaussian curvature, geodesics and area.
//
// Christoffel symbols of lambda^2 (dx^2 + dy^2), with a = d_x log lambda and
// b = d_y log lambda:
//   G^1_11 = G^2_12 = a,  G^2_22 = G^1_12 = b,  G^1_22 = -a,  G^2_11 = -b.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hkvf/errors.hpp"
#include "hkvf/expr.hpp"
#include "hkvf/mobius.hpp"
#include "hkvf/ode.hpp"
#include "hkvf/surfaces.hpp"

namespace hkvf {

using expr::Expr;

inline constexpr double kFarThreshold = 1e6;
inline constexpr double kPunctureGuard = 1e-9;

/// Rejects points near the puncture or beyond the far-field threshold.
inline void require_regular(const CanonicalSurface& s, Complex p) {
  if (!std::isfinite(p.real()) || !std::isfinite(p.imag()) ||
      (!s.is_periodic() && std::abs(p) > kFarThreshold))
    throw SingularRegion("point too far from the origin");
  for (const Complex q : s.punctures())
    if (std::abs(p - q) < kPunctureGuard) throw SingularRegion("point too close to a puncture");
}

class ConformalMetric {
 public:
  ConformalMetric(CanonicalSurface surface, Expr lambda)
      : surface_(std::move(surface)),
        lambda_(std::move(lambda)),
        lx_(lambda_.diff(expr::Var::X)),
        ly_(lambda_.diff(expr::Var::Y)),
        lxx_(lx_.diff(expr::Var::X)),
        lyy_(ly_.diff(expr::Var::Y)) {}

  ConformalMetric(CanonicalSurface surface, std::string_view lambda)
      : ConformalMetric(std::move(surface), Expr::parse(lambda)) {}

  const CanonicalSurface& surface() const noexcept { return surface_; }
  const Expr& lambda_expr() const noexcept { return lambda_; }

  double lambda(Complex p) const {
    const double l = lambda_.eval(p.real(), p.imag());
    if (!(l > 0.0)) throw NonPositiveMetric("lambda = " + std::to_string(l) + " at " + ExtendedPoint(p).to_string());
    return l;
  }

  /// (d_x log lambda, d_y log lambda)
  std::array<double, 2> grad_log(Complex p) const {
    const double l = lambda(p);
    return {lx_.eval(p.real(), p.imag()) / l, ly_.eval(p.real(), p.imag()) / l};
  }

  /// Laplacian of log lambda.
  double laplacian_log(Complex p) const {
    const double x = p.real(), y = p.imag();
    const double l = lambda(p);
    const double gx = lx_.eval(x, y), gy = ly_.eval(x, y);
    return (lxx_.eval(x, y) + lyy_.eval(x, y)) / l - (gx * gx + gy * gy) / (l * l);
  }

  /// lambda and its gradient.
  std::array<double, 3> jet(Complex p) const {
    return {lambda(p), lx_.eval(p.real(), p.imag()), ly_.eval(p.real(), p.imag())};
  }

  /// g-norm of a tangent vector at p.
  double norm(Complex p, Complex v) const { return lambda(p) * std::abs(v); }

  /// Hard error unless lambda > 0 at every sample.
  void check_positive(const std::vector<Complex>& grid) const {
    for (const Complex& p : grid) (void)lambda(p);
  }

 private:
  CanonicalSurface surface_;
  Expr lambda_, lx_, ly_, lxx_, lyy_;
};

enum class FieldTag { Rotational, Translational, Custom };

inline const char* to_string(FieldTag t) {
  switch (t) {
    case FieldTag::Rotational: return "rotational";
    case FieldTag::Translational: return "translational";
    case FieldTag::Custom: return "custom";
  }
  return "?";
}

/// X = u d_x + v d_y.
class VectorField {
 public:
  VectorField(Expr u, Expr v, FieldTag tag = FieldTag::Custom)
      : u_(std::move(u)),
        v_(std::move(v)),
        ux_(u_.diff(expr::Var::X)),
        uy_(u_.diff(expr::Var::Y)),
        vx_(v_.diff(expr::Var::X)),
        vy_(v_.diff(expr::Var::Y)),
        tag_(tag) {
    if (tag_ == FieldTag::Custom) {
      if (u_ == rotational().u_ && v_ == rotational().v_) tag_ = FieldTag::Rotational;
      else if (u_.is_constant(0.0) && v_.is_constant(1.0)) tag_ = FieldTag::Translational;
    }
  }

  VectorField(std::string_view u, std::string_view v) : VectorField(Expr::parse(u), Expr::parse(v)) {}

  /// V^rot = d_theta = -y d_x + x d_y.
  static VectorField rotational() {
    return VectorField(Expr(expr::neg(expr::var_y())), Expr(expr::var_x()), FieldTag::Rotational);
  }

  /// V^tra = d_y.
  static VectorField translational() {
    return VectorField(Expr::constant_value(0.0), Expr::constant_value(1.0), FieldTag::Translational);
  }

  FieldTag tag() const noexcept { return tag_; }
  const Expr& u() const noexcept { return u_; }
  const Expr& v() const noexcept { return v_; }

  Complex at(Complex p) const { return {u_.eval(p.real(), p.imag()), v_.eval(p.real(), p.imag())}; }
  Complex operator()(Complex p) const { return at(p); }

  /// {{u_x, u_y}, {v_x, v_y}}
  std::array<std::array<double, 2>, 2> jacobian(Complex p) const {
    const double x = p.real(), y = p.imag();
    return {{{ux_.eval(x, y), uy_.eval(x, y)}, {vx_.eval(x, y), vy_.eval(x, y)}}};
  }

  bool uses_abs() const { return u_.uses_abs() || v_.uses_abs(); }

 private:
  Expr u_, v_, ux_, uy_, vx_, vy_;
  FieldTag tag_;
};

/// Symmetric 2x2 matrix {r11, r12, r22}.
struct Sym2 {
  double r11 = 0.0;
  double r12 = 0.0;
  double r22 = 0.0;

  double frobenius() const { return std::sqrt(r11 * r11 + 2.0 * r12 * r12 + r22 * r22); }
  double max_abs_diff(const Sym2& o) const {
    return std::max({std::abs(r11 - o.r11), std::abs(r12 - o.r12), std::abs(r22 - o.r22)});
  }
};

/// (L_X g)(p) from symbolic partials.
inline Sym2 killing_residual(const ConformalMetric& g, const VectorField& X, Complex p) {
  require_regular(g.surface(), p);
  const auto [l, lx, ly] = g.jet(p);
  const Complex xv = X.at(p);
  const auto J = X.jacobian(p);
  const double l2 = l * l;
  const double xl2 = 2.0 * l * (xv.real() * lx + xv.imag() * ly);
  return {xl2 + 2.0 * l2 * J[0][0], l2 * (J[0][1] + J[1][0]), xl2 + 2.0 * l2 * J[1][1]};
}

namespace detail {

/// Fixed-step RK4 flow map; smooth in the initial point, which keeps spatial
/// finite differences of the flow clean.
inline Complex rk4_flow(const VectorField& X, Complex z, double t, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Complex k1 = X.at(z);
    const Complex k2 = X.at(z + 0.5 * h * k1);
    const Complex k3 = X.at(z + 0.5 * h * k2);
    const Complex k4 = X.at(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

/// (X_t^* g)(p) using only flow integration and values of lambda.
inline Sym2 pulled_back_metric(const ConformalMetric& g, const VectorField& X, Complex p, double t) {
  constexpr double dp = 1e-5;
  const int steps = 40;
  const Complex e1 = (rk4_flow(X, p + dp, t, steps) - rk4_flow(X, p - dp, t, steps)) / (2.0 * dp);
  const Complex e2 = (rk4_flow(X, p + Complex(0, dp), t, steps) -
                      rk4_flow(X, p - Complex(0, dp), t, steps)) / (2.0 * dp);
  const double l = g.lambda(rk4_flow(X, p, t, steps));
  const double l2 = l * l;
  return {l2 * std::norm(e1), l2 * (e1.real() * e2.real() + e1.imag() * e2.imag()), l2 * std::norm(e2)};
}

}  // namespace detail

/// Independent oracle: d/dt (X_t^* g)(p) at t = 0 by Richardson-extrapolated
/// central differences of the pulled-back metric.
inline Sym2 killing_residual_fd(const ConformalMetric& g, const VectorField& X, Complex p,
                                double s = 1e-2) {
  require_regular(g.surface(), p);
  auto central = [&](double h) {
    const Sym2 a = detail::pulled_back_metric(g, X, p, h);
    const Sym2 b = detail::pulled_back_metric(g, X, p, -h);
    return Sym2{(a.r11 - b.r11) / (2 * h), (a.r12 - b.r12) / (2 * h), (a.r22 - b.r22) / (2 * h)};
  };
  const Sym2 d1 = central(s), d2 = central(s / 2);
  return {(4 * d2.r11 - d1.r11) / 3, (4 * d2.r12 - d1.r12) / 3, (4 * d2.r22 - d1.r22) / 3};
}

/// g_q(X, n) for the inward unit normal n at a boundary point q.
inline double slip_product(const ConformalMetric& g, const VectorField& X, Complex q,
                           double on_tol = 1e-9) {
  for (const BoundaryCurve& c : g.surface().boundary_components()) {
    if (c.distance(q) > on_tol) continue;
    const Complex n = c.inward_normal(q);
    const Complex xv = X.at(q);
    return g.lambda(q) * (xv.real() * n.real() + xv.imag() * n.imag());
  }
  throw NotOnBoundary(ExtendedPoint(q).to_string() + " is not on a boundary component of " +
                      std::string(g.surface().name()));
}

/// K = -Laplacian(log lambda) / lambda^2.
inline double gauss_curvature(const ConformalMetric& g, Complex p) {
  require_regular(g.surface(), p);
  const double l = g.lambda(p);
  return -g.laplacian_log(p) / (l * l);
}

/// Rescales a Euclidean direction to g-length one at p.
inline Complex unit_tangent(const ConformalMetric& g, Complex p, Complex direction) {
  const double n = std::abs(direction);
  if (!(n > 0.0)) throw InvalidTangent("zero direction");
  return direction / (n * g.lambda(p));
}

struct GeodesicSample {
  double t;
  Complex z;
  Complex velocity;
};

struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  bool domain_exit = false;
  double t_exit = 0.0;  // meaningful when domain_exit
  double t_end = 0.0;   // last integrated time

  const GeodesicSample& back() const { return samples.back(); }

  /// Riemannian length of the sampled polyline with midpoint lambda.
  double g_length(const ConformalMetric& g) const {
    double len = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double dt = samples[i].t - samples[i - 1].t;
      // trapezoid rule on the speed
      const double s0 = g.norm(samples[i - 1].z, samples[i - 1].velocity);
      const double s1 = g.norm(samples[i].z, samples[i].velocity);
      len += 0.5 * dt * (s0 + s1);
    }
    return len;
  }
};

struct GeodesicOptions {
  double rtol = 1e-11;
  double atol = 1e-11;
  double unit_tol = 1e-6;
  double edge_slack = 1e-9;
};

/// Integrates the geodesic from p with g-unit initial velocity v up to t_end,
/// sampling every h. Leaving the surface ends the path with domain_exit set.
inline GeodesicPath geodesic(const ConformalMetric& g, Complex p, Complex v, double t_end, double h,
                             const GeodesicOptions& opt = {}) {
  const CanonicalSurface& S = g.surface();
  require_regular(S, p);
  if (std::abs(g.norm(p, v) - 1.0) > opt.unit_tol)
    throw InvalidTangent("|v|_g = " + std::to_string(g.norm(p, v)) + ", expected 1");
  if (!(h > 0.0)) throw InvalidTangent("sampling step must be positive");

  using State = ode::Vec<4>;
  auto rhs = [&](double, const State& s) -> State {
    const auto [a, b] = g.grad_log({s[0], s[1]});
    const double xd = s[2], yd = s[3];
    return {xd, yd, -a * xd * xd - 2.0 * b * xd * yd + a * yd * yd,
            b * xd * xd - 2.0 * a * xd * yd - b * yd * yd};
  };
  auto inside = [&](const State& s) {
    const Complex z{s[0], s[1]};
    if (!S.contains(ExtendedPoint(z), opt.edge_slack)) return false;
    if (!S.is_periodic() && std::abs(z) > kFarThreshold) return false;
    for (const Complex q : S.punctures())
      if (std::abs(z - q) < kPunctureGuard) return false;
    return true;
  };

  GeodesicPath path;
  path.samples.push_back({0.0, p, v});
  double next_sample = h;
  bool stopped = false;
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_step = h;
  auto observer = [&](const ode::DenseStep<4>& st) {
    if (!inside(st.y1)) {
      double lo = st.t0, hi = st.t1;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (inside(st.at(mid)) ? lo : hi) = mid;
      }
      while (next_sample <= lo) {
        const State s = st.at(next_sample);
        path.samples.push_back({next_sample, {s[0], s[1]}, {s[2], s[3]}});
        next_sample += h;
      }
      const State s = st.at(lo);
      path.samples.push_back({lo, {s[0], s[1]}, {s[2], s[3]}});
      path.domain_exit = true;
      path.t_exit = lo;
      stopped = true;
      return false;
    }
    while (next_sample <= st.t1 + 1e-12 * h) {
      const double tt = std::min(next_sample, st.t1);
      const State s = st.at(tt);
      path.samples.push_back({tt, {s[0], s[1]}, {s[2], s[3]}});
      next_sample += h;
    }
    return true;
  };
  ode::Result<4> r;
  try {
    r = ode::integrate<4>(rhs, 0.0, State{p.real(), p.imag(), v.real(), v.imag()}, t_end, o,
                          observer);
  } catch (const Error&) {
    // Stage evaluation left the metric's domain: the path exits.
    path.domain_exit = true;
    path.t_exit = path.samples.back().t;
    stopped = true;
  }
  if (!stopped && path.samples.back().t < r.t - 1e-12)
    path.samples.push_back({r.t, {r.y[0], r.y[1]}, {r.y[2], r.y[3]}});
  path.t_end = path.samples.back().t;
  return path;
}

struct AreaOptions {
  double rel_tol = 1e-8;
  unsigned max_depth = 12;
};

/// Integral of lambda^2 over the coordinate disc |z - center| <= radius.
inline double area(const ConformalMetric& g, Complex center, double radius, const AreaOptions& opt = {}) {
  if (radius < 0.0) throw OutsideDomain("negative radius");
  if (radius == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto ring = [&](double r) {
    if (r == 0.0) return 0.0;
    auto f = [&](double th) {
      const double l = g.lambda(center + std::polar(r, th));
      return l * l;
    };
    return r * gauss_kronrod<double, 31>::integrate(f, 0.0, two_pi, opt.max_depth, opt.rel_tol);
  };
  return gauss_kronrod<double, 31>::integrate(ring, 0.0, radius, opt.max_depth, opt.rel_tol);
}

/// Circle through three finite points: (center, radius).
inline std::pair<Complex, double> circle_through(Complex a, Complex b, Complex c) {
  const Complex ba = b - a, ca = c - a;
  const double d = 2.0 * (ba.real() * ca.imag() - ba.imag() * ca.real());
  if (std::abs(d) < 1e-300) throw DegenerateTriple("collinear points");
  const double nb = std::norm(ba), nc = std::norm(ca);
  const Complex center = a + Complex((ca.imag() * nb - ba.imag() * nc) / d,
                                     (ba.real() * nc - ca.real() * nb) / d);
  return {center, std::abs(center - a)};
}

/// Area of f(B) for the coordinate disc B = B_radius(center), f a Mobius map
/// whose pole lies outside the closed disc.
inline double image_area(const ConformalMetric& g, const MobiusTransform& f, Complex center,
                         double radius, const AreaOptions& opt = {}) {
  const Complex p0 = f.apply_finite(center + radius);
  const Complex p1 = f.apply_finite(center + Complex(0, radius));
  const Complex p2 = f.apply_finite(center - radius);
  const auto [c, r] = circle_through(p0, p1, p2);
  return area(g, c, r, opt);
}

// ---------------------------------------------------------------------------
// Sampling grids and CSV export

/// n x n grid over the surface's chart box, keeping members away from punctures.
inline std::vector<Complex> surface_grid(const CanonicalSurface& S, int n, double puncture_margin = 1e-6) {
  const auto [x0, x1, y0, y1] = S.bounding_box();
  std::vector<Complex> pts;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = n == 1 ? 0.5 * (x0 + x1) : x0 + (x1 - x0) * i / (n - 1);
      const double y = n == 1 ? 0.5 * (y0 + y1) : y0 + (y1 - y0) * j / (n - 1);
      const Complex z{x, y};
      if (!S.contains(ExtendedPoint(z))) continue;
      bool near = false;
      for (const Complex q : S.punctures()) near = near || std::abs(z - q) < puncture_margin;
      if (S.kind() == SurfaceKind::Torus || S.kind() == SurfaceKind::Cylinder) {
        // half-open fundamental domain: skip duplicated far edges
        if (S.reduce(z) != z) continue;
      }
      if (!near) pts.push_back(z);
    }
  return pts;
}

inline void write_path_csv(std::ostream& os, const GeodesicPath& path) {
  os << "t,x,y\n";
  char buf[128];
  for (const auto& s : path.samples) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", s.t, s.z.real(), s.z.imag());
    os << buf;
  }
}

inline void write_residual_csv(std::ostream& os, const ConformalMetric& g, const VectorField& X,
                               const std::vector<Complex>& grid) {
  os << "x,y,R11,R12,R22\n";
  char buf[192];
  for (const Complex& p : grid) {
    const Sym2 r = killing_residual(g, X, p);
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.6e,%.6e,%.6e\n", p.real(), p.imag(), r.r11, r.r12, r.r22);
    os << buf;
  }
}

}  // namespace hkvf
