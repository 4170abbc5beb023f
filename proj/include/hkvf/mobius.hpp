#pragma once

// Möbius transformations z -> (az+b)/(cz+d) on the extended complex plane.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include "hkvf/errors.hpp"

namespace hkvf {

using Complex = std::complex<double>;

/// Tolerance for algebraic coincidence tests (double roots, identity detection).
inline constexpr double kTolAlg = 1e-9;
inline constexpr Complex kI{0.0, 1.0};

struct Infinity {
  bool operator==(const Infinity&) const = default;
};

/// A point of the Riemann sphere: a finite complex value or the point at infinity.
class ExtendedPoint {
 public:
  ExtendedPoint() : value_(Complex{0.0, 0.0}) {}
  ExtendedPoint(Complex z) : value_(z) {  // NOLINT(google-explicit-constructor)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::invalid_argument("ExtendedPoint: finite value has non-finite component");
  }
  ExtendedPoint(double re, double im = 0.0) : ExtendedPoint(Complex{re, im}) {}
  ExtendedPoint(Infinity) : value_(Infinity{}) {}  // NOLINT(google-explicit-constructor)

  static ExtendedPoint infinity() { return ExtendedPoint(Infinity{}); }

  bool is_infinity() const noexcept { return std::holds_alternative<Infinity>(value_); }
  bool is_finite() const noexcept { return !is_infinity(); }

  /// Finite value; throws std::logic_error for infinity.
  Complex value() const {
    if (is_infinity()) throw std::logic_error("ExtendedPoint::value() on infinity");
    return std::get<Complex>(value_);
  }

  bool operator==(const ExtendedPoint& other) const = default;

  std::string to_string() const {
    if (is_infinity()) return "inf";
    const Complex z = value();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.12g%+.12gi", z.real(), z.imag());
    return buf;
  }

 private:
  std::variant<Complex, Infinity> value_;
};

/// Deterministic total order: lexicographic on (Re, Im), infinity last.
inline bool point_less(const ExtendedPoint& p, const ExtendedPoint& q) {
  if (p.is_infinity()) return false;
  if (q.is_infinity()) return true;
  const Complex a = p.value(), b = q.value();
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Chordal distance on the Riemann sphere (diameter 2 normalization).
inline double chordal_distance(const ExtendedPoint& p, const ExtendedPoint& q) {
  if (p.is_infinity() && q.is_infinity()) return 0.0;
  if (p.is_infinity() || q.is_infinity()) {
    const Complex z = p.is_infinity() ? q.value() : p.value();
    return 2.0 / std::sqrt(1.0 + std::norm(z));
  }
  const Complex a = p.value(), b = q.value();
  return 2.0 * std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

/// Element of PSL(2,C) acting as z -> (az+b)/(cz+d).
///
/// Constructed transforms are normalized to ad - bc = 1 with the sign chosen so
/// that Re(a+d) >= 0, ties broken by Im(a+d) >= 0 and then Re(a) >= 0.
class MobiusTransform {
 public:
  MobiusTransform() : a_(1.0), b_(0.0), c_(0.0), d_(1.0) {}

  /// Normalizing constructor. Throws SingularMatrix when ad - bc vanishes.
  MobiusTransform(Complex a, Complex b, Complex c, Complex d) {
    const Complex det = a * d - b * c;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (!(scale > 0.0) || std::abs(det) <= 1e-14 * scale * scale)
      throw SingularMatrix("ad - bc = 0");
    const Complex s = std::sqrt(det);
    a_ = a / s;
    b_ = b / s;
    c_ = c / s;
    d_ = d / s;
    fix_sign();
  }

  static MobiusTransform identity() { return {}; }
  static MobiusTransform translation(Complex shift) { return {1.0, shift, 0.0, 1.0}; }
  /// z -> k z for k != 0.
  static MobiusTransform scaling(Complex k) { return {k, 0.0, 0.0, 1.0}; }
  static MobiusTransform rotation(double angle) { return scaling(std::polar(1.0, angle)); }

  Complex a() const noexcept { return a_; }
  Complex b() const noexcept { return b_; }
  Complex c() const noexcept { return c_; }
  Complex d() const noexcept { return d_; }
  Complex trace() const noexcept { return a_ + d_; }
  Complex determinant() const noexcept { return a_ * d_ - b_ * c_; }
  bool normalized() const noexcept { return std::abs(determinant() - 1.0) < 1e-12; }

  /// Serialized as (a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im).
  std::array<double, 8> to_reals() const {
    return {a_.real(), a_.imag(), b_.real(), b_.imag(), c_.real(), c_.imag(), d_.real(), d_.imag()};
  }
  static MobiusTransform from_reals(const std::array<double, 8>& r) {
    return {{r[0], r[1]}, {r[2], r[3]}, {r[4], r[5]}, {r[6], r[7]}};
  }

  ExtendedPoint operator()(const ExtendedPoint& z) const { return apply(z); }

  /// Projective evaluation: cz+d = 0 maps to infinity; infinity maps to a/c.
  ExtendedPoint apply(const ExtendedPoint& z) const {
    if (z.is_infinity()) {
      if (c_ == Complex{0.0, 0.0}) return ExtendedPoint::infinity();
      return ExtendedPoint(a_ / c_);
    }
    const Complex w = z.value();
    const Complex den = c_ * w + d_;
    if (den == Complex{0.0, 0.0}) return ExtendedPoint::infinity();
    const Complex r = (a_ * w + b_) / den;
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return ExtendedPoint::infinity();
    return ExtendedPoint(r);
  }

  /// Finite-valued evaluation for callers that know the pole is avoided.
  Complex apply_finite(Complex z) const { return (a_ * z + b_) / (c_ * z + d_); }

  /// Derivative 1/(cz+d)^2 of the normalized map.
  Complex derivative(Complex z) const {
    const Complex den = c_ * z + d_;
    return 1.0 / (den * den);
  }

  MobiusTransform inverse() const { return {d_, -b_, -c_, a_}; }

  /// Matrix product realizing (*this) o g.
  MobiusTransform compose(const MobiusTransform& g) const {
    return {a_ * g.a_ + b_ * g.c_, a_ * g.b_ + b_ * g.d_, c_ * g.a_ + d_ * g.c_,
            c_ * g.b_ + d_ * g.d_};
  }

  /// h o this o h^{-1}
  MobiusTransform conjugated_by(const MobiusTransform& h) const {
    return h.compose(compose(h.inverse()));
  }

  /// True when the map is the identity up to the projective sign.
  bool is_identity(double tol = kTolAlg) const {
    return std::abs(b_) < tol && std::abs(c_) < tol && std::abs(a_ - d_) < tol;
  }

  /// Entry-wise distance modulo the projective sign.
  double distance(const MobiusTransform& o) const {
    auto dist = [&](double sign) {
      return std::max({std::abs(a_ - sign * o.a_), std::abs(b_ - sign * o.b_),
                       std::abs(c_ - sign * o.c_), std::abs(d_ - sign * o.d_)});
    };
    return std::min(dist(1.0), dist(-1.0));
  }

  std::string to_string() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "[(%.10g%+.10gi) (%.10g%+.10gi); (%.10g%+.10gi) (%.10g%+.10gi)]",
                  a_.real(), a_.imag(), b_.real(), b_.imag(), c_.real(), c_.imag(), d_.real(),
                  d_.imag());
    return buf;
  }

 private:
  void fix_sign() {
    constexpr double tie = 1e-14;
    const Complex tr = a_ + d_;
    bool flip = false;
    if (std::abs(tr.real()) > tie) {
      flip = tr.real() < 0.0;
    } else if (std::abs(tr.imag()) > tie) {
      flip = tr.imag() < 0.0;
    } else if (std::abs(a_.real()) > tie) {
      flip = a_.real() < 0.0;
    } else {
      flip = a_.imag() < 0.0;
    }
    if (flip) {
      a_ = -a_;
      b_ = -b_;
      c_ = -c_;
      d_ = -d_;
    }
  }

  Complex a_, b_, c_, d_;
};

inline MobiusTransform compose(const MobiusTransform& f, const MobiusTransform& g) {
  return f.compose(g);
}
inline ExtendedPoint apply(const MobiusTransform& f, const ExtendedPoint& z) { return f.apply(z); }
inline MobiusTransform inverse(const MobiusTransform& f) { return f.inverse(); }

enum class MobiusKind { Identity, Elliptic, Parabolic, Hyperbolic, Loxodromic };

inline const char* to_string(MobiusKind k) {
  switch (k) {
    case MobiusKind::Identity: return "identity";
    case MobiusKind::Elliptic: return "elliptic";
    case MobiusKind::Parabolic: return "parabolic";
    case MobiusKind::Hyperbolic: return "hyperbolic";
    case MobiusKind::Loxodromic: return "loxodromic";
  }
  return "?";
}

struct MobiusClass {
  MobiusKind kind = MobiusKind::Identity;
  /// Empty for the identity, otherwise one (parabolic) or two points in point_less order.
  std::vector<ExtendedPoint> fixed_points;
  Complex trace{2.0, 0.0};

  bool is_identity() const { return kind == MobiusKind::Identity; }
};

/// Fixed points from the quadratic cz^2 + (d-a)z - b = 0.
///
/// A double root is declared when the discriminant (d-a)^2 + 4bc is below
/// kTolAlg in modulus. Roots of modulus above 1/kTolAlg are reported as infinity.
inline std::vector<ExtendedPoint> fixed_points(const MobiusTransform& f) {
  if (f.is_identity()) throw IdentityInput("fixed_points of the identity");
  const Complex a = f.a(), b = f.b(), c = f.c(), d = f.d();
  const Complex amd = a - d;
  const Complex disc = (d - a) * (d - a) + 4.0 * b * c;
  const double huge = 1.0 / kTolAlg;

  auto finite_or_inf = [&](Complex num, Complex den) -> ExtendedPoint {
    if (std::abs(den) * huge <= std::abs(num) || den == Complex{0.0, 0.0})
      return ExtendedPoint::infinity();
    return ExtendedPoint(num / den);
  };

  std::vector<ExtendedPoint> pts;
  if (std::abs(disc) < kTolAlg) {
    pts.push_back(finite_or_inf(amd, 2.0 * c));
    return pts;
  }
  // Stable pair: q has the larger modulus, roots q/(2c) and -2b/q.
  const Complex s = std::sqrt(disc);
  const Complex q = std::abs(amd + s) >= std::abs(amd - s) ? amd + s : amd - s;
  pts.push_back(finite_or_inf(q, 2.0 * c));
  pts.push_back(finite_or_inf(-2.0 * b, q));
  std::sort(pts.begin(), pts.end(), point_less);
  return pts;
}

/// Trace-based classification of a normalized transform.
inline MobiusClass classify(const MobiusTransform& f) {
  MobiusClass out;
  out.trace = f.trace();
  if (f.is_identity()) {
    out.kind = MobiusKind::Identity;
    return out;
  }
  const Complex tr = out.trace;
  if (std::abs(tr - 2.0) < kTolAlg || std::abs(tr + 2.0) < kTolAlg) {
    out.kind = MobiusKind::Parabolic;
  } else if (std::abs(tr.imag()) < kTolAlg) {
    out.kind = std::abs(tr.real()) < 2.0 ? MobiusKind::Elliptic : MobiusKind::Hyperbolic;
  } else {
    out.kind = MobiusKind::Loxodromic;
  }
  out.fixed_points = fixed_points(f);
  return out;
}

namespace detail {

/// Matrix of the map sending (z1, z2, z3) to (0, 1, infinity).
inline MobiusTransform to_zero_one_infinity(const ExtendedPoint& z1, const ExtendedPoint& z2,
                                            const ExtendedPoint& z3) {
  if (z1.is_infinity()) {
    const Complex p2 = z2.value(), p3 = z3.value();
    return {0.0, p2 - p3, 1.0, -p3};
  }
  if (z2.is_infinity()) {
    const Complex p1 = z1.value(), p3 = z3.value();
    return {1.0, -p1, 1.0, -p3};
  }
  if (z3.is_infinity()) {
    const Complex p1 = z1.value(), p2 = z2.value();
    return {1.0, -p1, 0.0, p2 - p1};
  }
  const Complex p1 = z1.value(), p2 = z2.value(), p3 = z3.value();
  return {p2 - p3, -p1 * (p2 - p3), p2 - p1, -p3 * (p2 - p1)};
}

inline bool coincide(const ExtendedPoint& p, const ExtendedPoint& q) {
  if (p.is_infinity() || q.is_infinity()) return p.is_infinity() && q.is_infinity();
  return std::abs(p.value() - q.value()) < kTolAlg;
}

inline void require_distinct(const ExtendedPoint& p1, const ExtendedPoint& p2,
                             const ExtendedPoint& p3, const char* which) {
  if (coincide(p1, p2) || coincide(p1, p3) || coincide(p2, p3))
    throw DegenerateTriple(std::string(which) + " points are not pairwise distinct");
}

}  // namespace detail

/// The unique transform with zk -> wk for k = 1, 2, 3 (cross-ratio construction).
inline MobiusTransform from_three_points(const ExtendedPoint& z1, const ExtendedPoint& z2,
                                         const ExtendedPoint& z3, const ExtendedPoint& w1,
                                         const ExtendedPoint& w2, const ExtendedPoint& w3) {
  detail::require_distinct(z1, z2, z3, "source");
  detail::require_distinct(w1, w2, w3, "target");
  const MobiusTransform s = detail::to_zero_one_infinity(z1, z2, z3);
  const MobiusTransform t = detail::to_zero_one_infinity(w1, w2, w3);
  return t.inverse().compose(s);
}

}  // namespace hkvf
