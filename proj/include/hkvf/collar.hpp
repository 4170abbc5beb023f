#pragma once

// Boundary cases: the collar chart Sigma(x, y) = X_x(gamma(f^{-1}(y))) along a
// boundary component, the admissible centres of annulus automorphisms, and
// cutting an open canonical surface along orbits of its normal form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "hkvf/classify.hpp"
#include "hkvf/conformal_maps.hpp"
#include "hkvf/errors.hpp"
#include "hkvf/geometry.hpp"
#include "hkvf/surfaces.hpp"
#include "hkvf/trajectory.hpp"

namespace hkvf {

// ---------------------------------------------------------------------------
// Collar

struct CollarOptions {
  int nx = 9;
  int ny = 9;
  double x_max = 1.0;
  double strip = -1.0;  // extension depth past the boundary; negative selects eps / 4
  double tol_collar = 1e-5;
  double tol_orth = 1e-8;
  double tol_slip = 1e-8;
  double tol_zero = 1e-10;
  double fd_step = 1e-4;
  int geodesic_samples = 400;
};

struct CollarSample {
  double x;
  double y;
  double t;       // f^{-1}(y)
  Complex point;  // Sigma(x, y)
  double E, F, G;  // pulled-back metric coefficients
  double mu;       // |X o gamma o f^{-1}(y)|_g^2
};

struct CollarChart {
  Complex base;
  BoundaryCurve component;
  double eps = 0.0;
  double strip = 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<CollarSample> samples;  // row-major in y, then x
  double conformality_residual = 0.0;
  double orthogonality = 0.0;
  std::vector<std::pair<double, double>> f_table;  // (t, f(t))
  std::function<double(double)> f;
  std::function<double(double)> f_inv;
  std::function<Complex(double)> gamma;
};

namespace detail {

inline SurfaceKind open_extension(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::ClosedDisc:
    case SurfaceKind::HalfPlaneClosed:
    case SurfaceKind::ChannelSemiClosed:
    case SurfaceKind::ChannelClosed: return SurfaceKind::Plane;
    case SurfaceKind::PuncturedClosedDisc:
    case SurfaceKind::ClosedAnnulus:
    case SurfaceKind::SemiClosedAnnulus: return SurfaceKind::PuncturedPlane;
    default: throw NotOnBoundary(std::string(to_string(k)) + " has no boundary");
  }
}

/// Cubic Hermite interpolation of a sampled curve with known velocities.
class HermitePath {
 public:
  explicit HermitePath(std::vector<GeodesicSample> s) : s_(std::move(s)) {
    std::sort(s_.begin(), s_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  }
  double t_min() const { return s_.front().t; }
  double t_max() const { return s_.back().t; }

  Complex operator()(double t) const {
    auto it = std::upper_bound(s_.begin(), s_.end(), t, [](double v, const auto& a) { return v < a.t; });
    if (it == s_.begin()) ++it;
    if (it == s_.end()) --it;
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double h = b.t - a.t;
    const double u = (t - a.t) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * a.z + h10 * h * a.velocity + h01 * b.z + h11 * h * b.velocity;
  }

 private:
  std::vector<GeodesicSample> s_;
};

}  // namespace detail

/// Collar chart of width eps at the boundary point p.
inline CollarChart collar_extend(const ConformalMetric& g, const VectorField& X, Complex p, double eps,
                                 const CollarOptions& opt = {}) {
  const CanonicalSurface& S = g.surface();
  std::optional<BoundaryCurve> comp;
  for (const BoundaryCurve& c : S.boundary_components())
    if (c.distance(p) < 1e-9) comp = c;
  if (!comp) throw NotOnBoundary(ExtendedPoint(p).to_string() + " is not on a boundary component");
  if (!(eps > 0.0)) throw InvalidTangent("collar width must be positive");
  if (std::abs(X.at(p)) < opt.tol_zero) throw ZeroGenerator("X vanishes at the base point");
  if (std::abs(slip_product(g, X, p)) > opt.tol_slip) throw NotOnBoundary("X is not tangent to the boundary at p");

  const ConformalMetric gx(CanonicalSurface::make(detail::open_extension(S.kind())), g.lambda_expr());
  const double strip = opt.strip < 0.0 ? 0.25 * eps : opt.strip;
  const Complex v = unit_tangent(g, p, comp->inward_normal(p));
  const double h = eps / opt.geodesic_samples;

  const GeodesicPath fwd = geodesic(g, p, v, eps, h);
  if (fwd.domain_exit || fwd.t_end < eps - 1e-12)
    throw GeodesicEscape("inward geodesic leaves the surface at t = " + std::to_string(fwd.t_exit));
  std::vector<GeodesicSample> all = fwd.samples;
  if (strip > 0.0) {
    const GeodesicPath bwd = geodesic(gx, p, -v, strip, h);
    if (bwd.domain_exit) throw GeodesicEscape("extension geodesic leaves the chart");
    for (std::size_t i = 1; i < bwd.samples.size(); ++i)
      all.push_back({-bwd.samples[i].t, bwd.samples[i].z, -bwd.samples[i].velocity});
  }
  const detail::HermitePath gamma(all);

  CollarChart out;
  out.base = p;
  out.component = *comp;
  out.eps = eps;
  out.strip = strip;
  for (const GeodesicSample& s : fwd.samples) {
    const double o = std::abs(std::pow(g.lambda(s.z), 2) * (X.at(s.z) * std::conj(s.velocity)).real());
    out.orthogonality = std::max(out.orthogonality, o);
  }
  if (out.orthogonality > opt.tol_orth)
    throw NonOrthogonal("g(X, gamma') reaches " + std::to_string(out.orthogonality));

  struct State {
    ConformalMetric gx;
    VectorField X;
    detail::HermitePath gamma;
    double strip, eps, y_lo = 0.0, y_hi = 0.0;
    double speed(double u) const {
      const Complex q = gamma(u);
      return gx.lambda(q) * std::abs(X.at(q));
    }
    double f(double t) const {
      if (t == 0.0) return 0.0;
      using boost::math::quadrature::gauss_kronrod;
      return gauss_kronrod<double, 31>::integrate([this](double u) { return 1.0 / speed(u); }, 0.0, t, 10, 1e-14);
    }
    double f_inv(double y) const {
      if (y == 0.0) return 0.0;
      std::uintmax_t it = 200;
      const auto r = boost::math::tools::toms748_solve([&](double t) { return f(t) - y; }, -strip, eps, y_lo - y,
                                                       y_hi - y, boost::math::tools::eps_tolerance<double>(50), it);
      return 0.5 * (r.first + r.second);
    }
  };
  auto st = std::make_shared<State>(State{gx, X, gamma, strip, eps});
  st->y_lo = st->f(-strip);
  st->y_hi = st->f(eps);
  const double y_lo = st->y_lo, y_hi = st->y_hi;
  auto f_inv = [st](double y) { return st->f_inv(y); };
  auto speed = [st](double u) { return st->speed(u); };
  for (int k = 0; k <= 20; ++k) {
    const double t = -strip + (eps + strip) * k / 20.0;
    out.f_table.emplace_back(t, st->f(t));
  }

  FlowOptions fo;
  fo.rtol = 1e-13;
  fo.atol = 1e-13;
  const CanonicalSurface Sx = gx.surface();
  auto sigma = [&](double x, double y) {
    const ExtendedPoint q = flow_map(Sx, X, ExtendedPoint(gamma(f_inv(y))), x, fo);
    return q.value();
  };
  const double d = opt.fd_step;
  for (int j = 0; j < opt.ny; ++j) out.ys.push_back(y_lo + (y_hi - y_lo) * (0.02 + 0.96 * j / std::max(1, opt.ny - 1)));
  for (int i = 0; i < opt.nx; ++i) out.xs.push_back(opt.x_max * i / std::max(1, opt.nx - 1));
  for (double y : out.ys)
    for (double x : out.xs) {
      CollarSample s{};
      s.x = x;
      s.y = y;
      s.t = f_inv(y);
      s.point = sigma(x, y);
      const Complex sx = (sigma(x + d, y) - sigma(x - d, y)) / (2.0 * d);
      const Complex sy = (sigma(x, y + d) - sigma(x, y - d)) / (2.0 * d);
      const double l2 = std::pow(gx.lambda(s.point), 2);
      s.E = l2 * std::norm(sx);
      s.G = l2 * std::norm(sy);
      s.F = l2 * (sx * std::conj(sy)).real();
      s.mu = std::pow(speed(s.t), 2);
      const double r = std::max({std::abs(s.E - s.mu), std::abs(s.G - s.mu), std::abs(s.F)}) / s.mu;
      out.conformality_residual = std::max(out.conformality_residual, r);
      out.samples.push_back(s);
    }
  if (out.conformality_residual > opt.tol_collar)
    throw ReductionMismatch("collar metric is not conformal to |X|^2 (dx^2 + dy^2): residual " +
                            std::to_string(out.conformality_residual));
  out.gamma = [st](double t) { return st->gamma(t); };
  out.f = [st](double t) { return st->f(t); };
  out.f_inv = f_inv;
  return out;
}

// ---------------------------------------------------------------------------
// Annulus automorphisms

/// |alpha| values for which z -> e^{i theta}(z - alpha)/(1 - conj(alpha) z)
/// can send rho to a point of modulus rho: {0, 2 rho / (1 + rho^2)}.
inline std::array<double, 2> annulus_alpha_constraint(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidSurface("rho must lie in (0,1)");
  return {0.0, 2.0 * rho / (1.0 + rho * rho)};
}

struct AlphaCheck {
  Complex alpha;
  double outer_deviation = 0.0;  // max ||f(z)| - 1| on |z| = 1
  double inner_deviation = 0.0;  // max ||f(z)| - rho| on |z| = rho
  bool outer = false;
  bool inner = false;
  bool accepted() const { return outer && inner; }
};

/// Samples both boundary circles under the disc automorphism with centre alpha.
inline AlphaCheck annulus_alpha_check(double rho, Complex alpha, double theta = 0.0, int n = 256,
                                      double tol = 1e-9) {
  if (!(std::abs(alpha) < 1.0)) throw InvalidSurface("alpha must lie in the unit disc");
  AlphaCheck c;
  c.alpha = alpha;
  const Complex rot = std::polar(1.0, theta);
  auto f = [&](Complex z) { return rot * (z - alpha) / (1.0 - std::conj(alpha) * z); };
  for (int k = 0; k < n; ++k) {
    const double phi = kTwoPi * k / n;
    c.outer_deviation = std::max(c.outer_deviation, std::abs(std::abs(f(std::polar(1.0, phi))) - 1.0));
    c.inner_deviation = std::max(c.inner_deviation, std::abs(std::abs(f(std::polar(rho, phi))) - rho));
  }
  c.outer = c.outer_deviation < tol;
  c.inner = c.inner_deviation < tol;
  return c;
}

// ---------------------------------------------------------------------------
// Cuts along orbits

struct CutCurve {
  enum class Type { Circle, VerticalLine, HorizontalLine };
  Type type = Type::Circle;
  double level = 1.0;   // radius or coordinate
  Complex center{};     // circles only
};

enum class CutKeep { Below, Above };  // |z| <= r / Re z <= c, or the other side

struct CutSpec {
  std::vector<CutCurve> curves;
  std::optional<CutKeep> keep = std::nullopt;  // one curve only; defaults: inside a circle, right of a line
};

struct CutResult {
  CanonicalSurface surface;
  MapChain normalization;     // normal-form chart -> new canonical chart
  double time_factor = 1.0;   // normalized time of the new chart is s / time_factor
  double boundary_residual = 0.0;
};

/// Cuts the target of `res` (curves in its chart) and normalizes the piece.
inline CutResult cut_boundary_case(const CanonicalSurface& S_open, const ClassificationResult& res,
                                   const CutSpec& cut) {
  if (!(S_open == res.source)) throw InvalidCut("classification was computed for a different surface");
  const CanonicalSurface& T = res.target;
  if (T.has_boundary()) throw InvalidCut("the classified surface already has boundary");
  if (cut.curves.empty() || cut.curves.size() > 2) throw InvalidCut("expected one or two cut curves");
  if (T.kind() == SurfaceKind::Cylinder || T.kind() == SurfaceKind::Torus)
    throw InvalidCut(std::string(T.name()) + " has no ends that an orbit can cut off");
  const bool rot = res.normal_form == NormalForm::Rotation;
  std::vector<double> lv;
  for (const CutCurve& c : cut.curves) {
    if (rot && (c.type != CutCurve::Type::Circle || std::abs(c.center) > 1e-12))
      throw InvalidCut("cuts of a rotation must be circles about 0");
    if (!rot && c.type != CutCurve::Type::VerticalLine) throw InvalidCut("cuts of a translation must be vertical lines");
    const Complex probe = rot ? Complex(c.level, 0.0) : Complex(c.level, 0.0);
    if (!(c.level > 0.0 || !rot) || !T.contains_interior(probe, 1e-12))
      throw InvalidCut("cut curve does not lie inside " + std::string(T.name()));
    lv.push_back(c.level);
  }
  std::sort(lv.begin(), lv.end());
  if (lv.size() == 2 && !(lv[1] - lv[0] > 1e-12)) throw InvalidCut("cut curves coincide");
  const CutKeep keep = cut.keep.value_or(rot ? CutKeep::Below : CutKeep::Above);
  if (lv.size() == 2 && cut.keep) throw InvalidCut("two cuts keep the region between them");

  CutResult out;
  std::vector<Atom> atoms;
  const SurfaceKind k = T.kind();
  if (rot) {
    const bool punctured = T.is_punctured();
    if (lv.size() == 2) {
      atoms.push_back(Atom::scale(1.0 / lv[1]));
      out.surface = CanonicalSurface::with_rho(SurfaceKind::ClosedAnnulus, lv[0] / lv[1]);
    } else if (keep == CutKeep::Below) {
      atoms.push_back(Atom::scale(1.0 / lv[0]));
      if (k == SurfaceKind::Annulus)
        out.surface = CanonicalSurface::with_rho(SurfaceKind::SemiClosedAnnulus, T.rho() / lv[0]);
      else
        out.surface = CanonicalSurface::make(punctured ? SurfaceKind::PuncturedClosedDisc : SurfaceKind::ClosedDisc);
    } else {
      atoms.push_back(Atom::from_mobius(MobiusTransform(0.0, lv[0], 1.0, 0.0)));
      out.time_factor = -1.0;
      if (k == SurfaceKind::RiemannSphere)
        out.surface = CanonicalSurface::make(SurfaceKind::ClosedDisc);
      else if (k == SurfaceKind::Plane || k == SurfaceKind::PuncturedPlane)
        out.surface = CanonicalSurface::make(SurfaceKind::PuncturedClosedDisc);
      else
        out.surface = CanonicalSurface::with_rho(SurfaceKind::SemiClosedAnnulus, lv[0]);
    }
  } else {
    // open interval of Re z covered by the target
    const double lo = k == SurfaceKind::Plane ? -INFINITY : 0.0;
    const double hi = k == SurfaceKind::ChannelOpen ? kTwoPi : INFINITY;
    double a = lo, b = hi;  // kept strip before normalization, closed at finite cut levels
    bool closed_a = false, closed_b = false;
    if (lv.size() == 2) {
      a = lv[0], b = lv[1], closed_a = closed_b = true;
    } else if (keep == CutKeep::Above) {
      a = lv[0], closed_a = true;
    } else {
      b = lv[0], closed_b = true;
    }
    bool reversed = false;
    if (!closed_a) {  // reflect so the closed edge is on the left
      atoms.push_back(Atom::scale(-1.0));
      std::swap(a, b);
      a = -a, b = -b;
      std::swap(closed_a, closed_b);
      reversed = true;
    }
    atoms.push_back(Atom::shift(-a));
    b -= a;
    double factor = 1.0;
    if (std::isfinite(b)) {
      factor = kTwoPi / b;
      atoms.push_back(Atom::scale(factor));
      out.surface = CanonicalSurface::make(closed_b ? SurfaceKind::ChannelClosed : SurfaceKind::ChannelSemiClosed);
    } else {
      out.surface = CanonicalSurface::make(SurfaceKind::HalfPlaneClosed);
    }
    out.time_factor = (reversed ? -1.0 : 1.0) / factor;
  }
  out.normalization = MapChain(atoms, T, out.surface).simplified();

  const auto bcs = out.surface.boundary_components();
  for (const CutCurve& c : cut.curves)
    for (int i = 0; i < 16; ++i) {
      const double s = rot ? kTwoPi * i / 16.0 : -2.0 + 0.25 * i;
      const Complex z = rot ? std::polar(c.level, s) : Complex(c.level, s);
      const Complex w = out.normalization.apply(z);
      double dmin = INFINITY;
      for (const BoundaryCurve& bc : bcs) dmin = std::min(dmin, bc.distance(w));
      out.boundary_residual = std::max(out.boundary_residual, dmin);
    }
  if (out.boundary_residual > 1e-9) throw InvalidCut("normalized cut misses the canonical boundary");
  return out;
}

}  // namespace hkvf
