#pragma once

// Catalog of the canonical Riemann surfaces admitting a one-parameter isometry group.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hkvf/errors.hpp"
#include "hkvf/mobius.hpp"

namespace hkvf {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Slack for membership tests on closed boundary circles and lines.
inline constexpr double kEdgeTol = 1e-12;

enum class SurfaceKind {
  RiemannSphere,
  Plane,
  Disc,
  HalfPlaneOpen,
  ChannelOpen,
  PuncturedPlane,
  Cylinder,
  PuncturedDisc,
  Annulus,
  Torus,
  ClosedDisc,
  PuncturedClosedDisc,
  ClosedAnnulus,
  SemiClosedAnnulus,
  HalfPlaneClosed,
  ChannelSemiClosed,
  ChannelClosed,
};

inline constexpr std::array<SurfaceKind, 17> kAllSurfaceKinds = {
    SurfaceKind::RiemannSphere,     SurfaceKind::Plane,           SurfaceKind::Disc,
    SurfaceKind::HalfPlaneOpen,     SurfaceKind::ChannelOpen,     SurfaceKind::PuncturedPlane,
    SurfaceKind::Cylinder,          SurfaceKind::PuncturedDisc,   SurfaceKind::Annulus,
    SurfaceKind::Torus,             SurfaceKind::ClosedDisc,      SurfaceKind::PuncturedClosedDisc,
    SurfaceKind::ClosedAnnulus,     SurfaceKind::SemiClosedAnnulus, SurfaceKind::HalfPlaneClosed,
    SurfaceKind::ChannelSemiClosed, SurfaceKind::ChannelClosed,
};

inline std::string_view to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::RiemannSphere: return "riemann_sphere";
    case SurfaceKind::Plane: return "plane";
    case SurfaceKind::Disc: return "disc";
    case SurfaceKind::HalfPlaneOpen: return "half_plane_open";
    case SurfaceKind::ChannelOpen: return "channel_open";
    case SurfaceKind::PuncturedPlane: return "punctured_plane";
    case SurfaceKind::Cylinder: return "cylinder";
    case SurfaceKind::PuncturedDisc: return "punctured_disc";
    case SurfaceKind::Annulus: return "annulus";
    case SurfaceKind::Torus: return "torus";
    case SurfaceKind::ClosedDisc: return "closed_disc";
    case SurfaceKind::PuncturedClosedDisc: return "punctured_closed_disc";
    case SurfaceKind::ClosedAnnulus: return "closed_annulus";
    case SurfaceKind::SemiClosedAnnulus: return "semi_closed_annulus";
    case SurfaceKind::HalfPlaneClosed: return "half_plane_closed";
    case SurfaceKind::ChannelSemiClosed: return "channel_semi_closed";
    case SurfaceKind::ChannelClosed: return "channel_closed";
  }
  return "?";
}

inline std::optional<SurfaceKind> surface_kind_from_string(std::string_view name) {
  for (SurfaceKind k : kAllSurfaceKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

inline bool has_rho(SurfaceKind k) {
  return k == SurfaceKind::Annulus || k == SurfaceKind::ClosedAnnulus ||
         k == SurfaceKind::SemiClosedAnnulus;
}

/// Lattice {m*pi1 + n*pi2} with Im(pi1/pi2) > 0.
struct Lattice {
  Complex pi1{0.0, 1.0};
  Complex pi2{1.0, 0.0};

  void validate() const {
    if (!(std::abs(pi2) > 0.0) || !((pi1 / pi2).imag() > 0.0))
      throw DegenerateLattice("Im(pi1/pi2) must be positive");
  }

  /// Real coordinates (s, t) with z = s*pi1 + t*pi2.
  std::array<double, 2> coordinates(Complex z) const {
    const double a = pi1.real(), b = pi2.real(), c = pi1.imag(), d = pi2.imag();
    const double det = a * d - b * c;
    return {(d * z.real() - b * z.imag()) / det, (-c * z.real() + a * z.imag()) / det};
  }

  /// Representative in the fundamental parallelogram {s*pi1 + t*pi2 : s, t in [0,1)}.
  Complex reduce(Complex z) const {
    auto frac = [](double s) {
      double f = s - std::floor(s);
      if (f >= 1.0 - 1e-12 || f < 1e-12) f = 0.0;
      return f;
    };
    const auto [s, t] = coordinates(z);
    return frac(s) * pi1 + frac(t) * pi2;
  }

  /// Shortest lattice translate of a difference vector.
  Complex nearest_image(Complex dz) const {
    const auto [s, t] = coordinates(dz);
    const double s0 = std::round(s), t0 = std::round(t);
    Complex best = dz - s0 * pi1 - t0 * pi2;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        const Complex cand = dz - (s0 + i) * pi1 - (t0 + j) * pi2;
        if (std::abs(cand) < std::abs(best)) best = cand;
      }
    return best;
  }
};

inline Complex torus_reduce(Complex pi1, Complex pi2, Complex z) {
  const Lattice lat{pi1, pi2};
  lat.validate();
  return lat.reduce(z);
}

/// A boundary component: the circle |z| = level or the vertical line Re(z) = level.
/// `interior_side` is +1 when the surface lies on the side of larger |z| (resp. Re z).
struct BoundaryCurve {
  enum class Type { Circle, VerticalLine };
  Type type = Type::Circle;
  double level = 1.0;
  int interior_side = -1;

  /// Parametrization: circle by angle, line by imaginary part.
  Complex point(double s) const {
    return type == Type::Circle ? std::polar(level, s) : Complex{level, s};
  }

  double distance(Complex q) const {
    return type == Type::Circle ? std::abs(std::abs(q) - level) : std::abs(q.real() - level);
  }

  /// Euclidean unit normal at q pointing into the surface.
  Complex inward_normal(Complex q) const {
    if (type == Type::Circle) return static_cast<double>(interior_side) * q / std::abs(q);
    return {static_cast<double>(interior_side), 0.0};
  }

  /// Euclidean unit tangent at q (counter-clockwise for circles, +i for lines).
  Complex tangent(Complex q) const {
    if (type == Type::Circle) return Complex{0.0, 1.0} * q / std::abs(q);
    return {0.0, 1.0};
  }

  std::string to_string() const {
    char buf[64];
    if (type == Type::Circle)
      std::snprintf(buf, sizeof buf, "|z|=%.12g", level);
    else
      std::snprintf(buf, sizeof buf, "Re(z)=%.12g", level);
    return buf;
  }

  bool operator==(const BoundaryCurve&) const = default;
};

class CanonicalSurface {
 public:
  CanonicalSurface() = default;

  static CanonicalSurface make(SurfaceKind kind) {
    if (has_rho(kind) || kind == SurfaceKind::Torus)
      throw InvalidSurface(std::string(to_string(kind)) + " requires parameters");
    CanonicalSurface s;
    s.kind_ = kind;
    return s;
  }

  static CanonicalSurface with_rho(SurfaceKind kind, double rho) {
    if (!has_rho(kind)) throw InvalidSurface(std::string(to_string(kind)) + " has no rho");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidSurface("rho must lie in (0,1)");
    CanonicalSurface s;
    s.kind_ = kind;
    s.rho_ = rho;
    return s;
  }

  static CanonicalSurface torus(Complex pi1, Complex pi2) {
    Lattice lat{pi1, pi2};
    lat.validate();
    CanonicalSurface s;
    s.kind_ = SurfaceKind::Torus;
    s.lattice_ = lat;
    return s;
  }

  SurfaceKind kind() const noexcept { return kind_; }
  double rho() const noexcept { return rho_; }
  const Lattice& lattice() const noexcept { return lattice_; }
  std::string_view name() const { return to_string(kind_); }

  bool has_boundary() const { return !boundary_components().empty(); }

  bool is_punctured() const {
    return kind_ == SurfaceKind::PuncturedPlane || kind_ == SurfaceKind::PuncturedDisc ||
           kind_ == SurfaceKind::PuncturedClosedDisc;
  }

  /// Excluded isolated points of the chart.
  std::vector<Complex> punctures() const {
    if (is_punctured()) return {Complex{0.0, 0.0}};
    return {};
  }

  /// Whether the unbounded end of the chart is part of the surface.
  bool contains_infinity() const { return kind_ == SurfaceKind::RiemannSphere; }

  /// Whether Re(z) is identified modulo 2*pi (cylinder) or the plane modulo a lattice (torus).
  bool is_periodic() const { return kind_ == SurfaceKind::Cylinder || kind_ == SurfaceKind::Torus; }

  /// Canonical representative of a chart point (identity unless periodic).
  Complex reduce(Complex z) const {
    if (kind_ == SurfaceKind::Cylinder) {
      double x = std::fmod(z.real(), kTwoPi);
      if (x < 0.0) x += kTwoPi;
      if (x >= kTwoPi - 1e-12) x = 0.0;
      return {x, z.imag()};
    }
    if (kind_ == SurfaceKind::Torus) return lattice_.reduce(z);
    return z;
  }

  /// Shortest representative of a difference of chart points.
  Complex difference(Complex z, Complex w) const {
    const Complex dz = z - w;
    if (kind_ == SurfaceKind::Cylinder) {
      const double x = dz.real() - kTwoPi * std::round(dz.real() / kTwoPi);
      return {x, dz.imag()};
    }
    if (kind_ == SurfaceKind::Torus) return lattice_.nearest_image(dz);
    return dz;
  }

  std::vector<BoundaryCurve> boundary_components() const {
    using T = BoundaryCurve::Type;
    switch (kind_) {
      case SurfaceKind::ClosedDisc:
      case SurfaceKind::PuncturedClosedDisc:
      case SurfaceKind::SemiClosedAnnulus:
        return {{T::Circle, 1.0, -1}};
      case SurfaceKind::ClosedAnnulus:
        return {{T::Circle, rho_, +1}, {T::Circle, 1.0, -1}};
      case SurfaceKind::HalfPlaneClosed:
      case SurfaceKind::ChannelSemiClosed:
        return {{T::VerticalLine, 0.0, +1}};
      case SurfaceKind::ChannelClosed:
        return {{T::VerticalLine, 0.0, +1}, {T::VerticalLine, kTwoPi, -1}};
      default:
        return {};
    }
  }

  /// Set membership. `edge_tol` widens closed edges only; open edges stay strict.
  bool contains(const ExtendedPoint& p, double edge_tol = kEdgeTol) const {
    if (p.is_infinity()) return kind_ == SurfaceKind::RiemannSphere;
    const Complex z = p.value();
    const double r = std::abs(z), x = z.real();
    auto closed_le = [&](double v, double bound) { return v <= bound + edge_tol; };
    auto closed_ge = [&](double v, double bound) { return v >= bound - edge_tol; };
    auto open_lt = [&](double v, double bound) { return v < bound - kEdgeTol; };
    auto open_gt = [&](double v, double bound) { return v > bound + kEdgeTol; };
    const bool nonzero = z != Complex{0.0, 0.0};
    switch (kind_) {
      case SurfaceKind::RiemannSphere:
      case SurfaceKind::Plane:
      case SurfaceKind::Cylinder:
      case SurfaceKind::Torus:
        return true;
      case SurfaceKind::PuncturedPlane: return nonzero;
      case SurfaceKind::Disc: return open_lt(r, 1.0);
      case SurfaceKind::PuncturedDisc: return nonzero && open_lt(r, 1.0);
      case SurfaceKind::Annulus: return open_gt(r, rho_) && open_lt(r, 1.0);
      case SurfaceKind::ClosedDisc: return closed_le(r, 1.0);
      case SurfaceKind::PuncturedClosedDisc: return nonzero && closed_le(r, 1.0);
      case SurfaceKind::ClosedAnnulus: return closed_ge(r, rho_) && closed_le(r, 1.0);
      case SurfaceKind::SemiClosedAnnulus: return open_gt(r, rho_) && closed_le(r, 1.0);
      case SurfaceKind::HalfPlaneOpen: return open_gt(x, 0.0);
      case SurfaceKind::HalfPlaneClosed: return closed_ge(x, 0.0);
      case SurfaceKind::ChannelOpen: return open_gt(x, 0.0) && open_lt(x, kTwoPi);
      case SurfaceKind::ChannelSemiClosed: return closed_ge(x, 0.0) && open_lt(x, kTwoPi);
      case SurfaceKind::ChannelClosed: return closed_ge(x, 0.0) && closed_le(x, kTwoPi);
    }
    return false;
  }

  /// Interior membership at distance >= margin from every edge and puncture.
  bool contains_interior(Complex z, double margin) const {
    if (!contains(ExtendedPoint(z))) return false;
    for (const Complex p : punctures())
      if (std::abs(z - p) < margin) return false;
    for (const BoundaryCurve& c : boundary_components())
      if (c.distance(z) < margin) return false;
    const double r = std::abs(z), x = z.real();
    switch (kind_) {
      case SurfaceKind::Disc:
      case SurfaceKind::PuncturedDisc: return r < 1.0 - margin;
      case SurfaceKind::Annulus: return r > rho_ + margin && r < 1.0 - margin;
      case SurfaceKind::SemiClosedAnnulus: return r > rho_ + margin;
      case SurfaceKind::HalfPlaneOpen: return x > margin;
      case SurfaceKind::ChannelOpen: return x > margin && x < kTwoPi - margin;
      case SurfaceKind::ChannelSemiClosed: return x < kTwoPi - margin;
      default: return true;
    }
  }

  /// Chart rectangle used for sampling grids: (xmin, xmax, ymin, ymax).
  std::array<double, 4> bounding_box() const {
    switch (kind_) {
      case SurfaceKind::RiemannSphere:
      case SurfaceKind::Plane:
      case SurfaceKind::PuncturedPlane: return {-2.0, 2.0, -2.0, 2.0};
      case SurfaceKind::HalfPlaneOpen:
      case SurfaceKind::HalfPlaneClosed: return {0.0, 4.0, -2.0, 2.0};
      case SurfaceKind::ChannelOpen:
      case SurfaceKind::ChannelSemiClosed:
      case SurfaceKind::ChannelClosed:
      case SurfaceKind::Cylinder: return {0.0, kTwoPi, -2.0, 2.0};
      case SurfaceKind::Torus: {
        const Complex c[4] = {0.0, lattice_.pi1, lattice_.pi2, lattice_.pi1 + lattice_.pi2};
        std::array<double, 4> box{c[0].real(), c[0].real(), c[0].imag(), c[0].imag()};
        for (const Complex& v : c) {
          box[0] = std::min(box[0], v.real());
          box[1] = std::max(box[1], v.real());
          box[2] = std::min(box[2], v.imag());
          box[3] = std::max(box[3], v.imag());
        }
        return box;
      }
      default: return {-1.0, 1.0, -1.0, 1.0};
    }
  }

  bool operator==(const CanonicalSurface& o) const {
    return kind_ == o.kind_ && rho_ == o.rho_ && lattice_.pi1 == o.lattice_.pi1 &&
           lattice_.pi2 == o.lattice_.pi2;
  }

 private:
  SurfaceKind kind_ = SurfaceKind::Plane;
  double rho_ = 0.0;
  Lattice lattice_{};
};

inline bool contains(const CanonicalSurface& s, const ExtendedPoint& z) { return s.contains(z); }
inline std::vector<BoundaryCurve> boundary_components(const CanonicalSurface& s) {
  return s.boundary_components();
}

}  // namespace hkvf
