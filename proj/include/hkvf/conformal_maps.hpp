#pragma once

// Explicit conformal model maps and chains of them.
//
//   F_p(z) = (1 - z)/(1 + z)            disc -> right half-plane
//   F_h(z) = -2i log(i(1 - z)/(1 + z))  disc -> channel (0, 2pi) x R
//   F_l(z) = -i log z                   C*   -> cylinder, Re taken mod 2pi
//   F_c(z) = (i/v) log z                C*   -> C / (-2pi/v)Z
//
// All logs are principal. For z in the disc, i(1 - z)/(1 + z) lies in the
// upper half-plane, so the principal log already puts Re F_h in (0, 2pi) and
// no rotated cut is needed.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hkvf/errors.hpp"
#include "hkvf/mobius.hpp"
#include "hkvf/surfaces.hpp"

namespace hkvf {


namespace detail {
inline std::string cstr(Complex z) { return ExtendedPoint(z).to_string(); }
inline double wrap_two_pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// The named maps with their stated domains

inline Complex f_p(Complex z) {
  if (!(std::abs(z) < 1.0)) throw OutsideDomain("f_p needs |z| < 1, got " + detail::cstr(z));
  return (1.0 - z) / (1.0 + z);
}

inline Complex f_p_inv(Complex w) {
  if (!(w.real() > 0.0)) throw OutsideDomain("f_p_inv needs Re(w) > 0, got " + detail::cstr(w));
  return (1.0 - w) / (1.0 + w);
}

inline Complex f_h(Complex z) {
  if (!(std::abs(z) < 1.0)) throw OutsideDomain("f_h needs |z| < 1, got " + detail::cstr(z));
  const Complex w = -2.0 * kI * std::log(kI * (1.0 - z) / (1.0 + z));
  if (!(w.real() > 0.0 && w.real() < kTwoPi))
    throw BranchViolation("f_h image " + detail::cstr(w) + " left the channel");
  return w;
}

inline Complex f_h_inv(Complex w) {
  if (!(w.real() > 0.0 && w.real() < kTwoPi))
    throw OutsideDomain("f_h_inv needs 0 < Re(w) < 2pi, got " + detail::cstr(w));
  const Complex s = kI * std::exp(kI * w / 2.0);
  return (1.0 + s) / (1.0 - s);
}

inline Complex f_l(Complex z) {
  if (z == Complex{0.0, 0.0}) throw OutsideDomain("f_l undefined at 0");
  const Complex w = -kI * std::log(z);
  return {detail::wrap_two_pi(w.real()), w.imag()};
}

inline Complex f_l_inv(Complex w) { return std::exp(kI * w); }

inline Complex f_c(Complex v, Complex z) {
  if (z == Complex{0.0, 0.0}) throw OutsideDomain("f_c undefined at 0");
  if (std::abs(std::abs(v) - 1.0) > 1e-12) throw OutsideDomain("f_c needs |v| = 1");
  return kI / v * std::log(z);
}

inline Complex f_c_inv(Complex v, Complex w) { return std::exp(-kI * v * w); }

// ---------------------------------------------------------------------------
// Atoms

enum class AtomKind { Mobius, Fp, FpInv, Fh, FhInv, Fl, FlInv, Fc, FcInv, Scale, Shift, Log, Exp, Conj };

inline const char* to_string(AtomKind k) {
  switch (k) {
    case AtomKind::Mobius: return "mobius";
    case AtomKind::Fp: return "fp";
    case AtomKind::FpInv: return "fp_inv";
    case AtomKind::Fh: return "fh";
    case AtomKind::FhInv: return "fh_inv";
    case AtomKind::Fl: return "fl";
    case AtomKind::FlInv: return "fl_inv";
    case AtomKind::Fc: return "fc";
    case AtomKind::FcInv: return "fc_inv";
    case AtomKind::Scale: return "scale";
    case AtomKind::Shift: return "shift";
    case AtomKind::Log: return "log";
    case AtomKind::Exp: return "exp";
    case AtomKind::Conj: return "conj";
  }
  return "?";
}

inline std::optional<AtomKind> atom_kind_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(AtomKind::Conj); ++i)
    if (s == to_string(static_cast<AtomKind>(i))) return static_cast<AtomKind>(i);
  return std::nullopt;
}

/// One elementary map. `param` is v for Fc/FcInv, k for Scale, c for Shift.
struct Atom {
  AtomKind kind = AtomKind::Mobius;
  MobiusTransform mobius{};
  Complex param{1.0, 0.0};

  static Atom make(AtomKind k) { return Atom{k, {}, {1.0, 0.0}}; }
  static Atom from_mobius(const MobiusTransform& m) { return Atom{AtomKind::Mobius, m, {1.0, 0.0}}; }
  static Atom fc(Complex v) { return Atom{AtomKind::Fc, {}, v}; }
  static Atom scale(Complex k) {
    if (k == Complex{0.0, 0.0}) throw SingularMatrix("scale factor 0");
    return Atom{AtomKind::Scale, {}, k};
  }
  static Atom shift(Complex c) { return Atom{AtomKind::Shift, {}, c}; }

  bool holomorphic() const { return kind != AtomKind::Conj; }

  /// Mobius form when the atom is one.
  std::optional<MobiusTransform> as_mobius() const {
    switch (kind) {
      case AtomKind::Mobius: return mobius;
      case AtomKind::Fp:
      case AtomKind::FpInv: return MobiusTransform(-1.0, 1.0, 1.0, 1.0);
      case AtomKind::Scale: return MobiusTransform::scaling(param);
      case AtomKind::Shift: return MobiusTransform::translation(param);
      default: return std::nullopt;
    }
  }

  Complex apply(Complex z) const {
    switch (kind) {
      case AtomKind::Mobius: {
        const Complex den = mobius.c() * z + mobius.d();
        if (den == Complex{0.0, 0.0}) throw OutsideDomain("mobius pole at " + detail::cstr(z));
        return (mobius.a() * z + mobius.b()) / den;
      }
      case AtomKind::Fp:
      case AtomKind::FpInv:
        if (z == Complex{-1.0, 0.0}) throw OutsideDomain("fp pole at -1");
        return (1.0 - z) / (1.0 + z);
      case AtomKind::Fh: {
        if (std::abs(z) > 1.0 + 1e-12 || std::abs(z - 1.0) < 1e-300 || std::abs(z + 1.0) < 1e-300)
          throw OutsideDomain("fh needs |z| <= 1, z != +-1, got " + detail::cstr(z));
        return -2.0 * kI * std::log(kI * (1.0 - z) / (1.0 + z));
      }
      case AtomKind::FhInv: {
        const Complex s = kI * std::exp(kI * z / 2.0);
        if (s == Complex{1.0, 0.0}) throw OutsideDomain("fh_inv pole");
        return (1.0 + s) / (1.0 - s);
      }
      case AtomKind::Fl:
        if (z == Complex{0.0, 0.0}) throw OutsideDomain("fl undefined at 0");
        return f_l(z);
      case AtomKind::FlInv: return f_l_inv(z);
      case AtomKind::Fc:
        if (z == Complex{0.0, 0.0}) throw OutsideDomain("fc undefined at 0");
        return kI / param * std::log(z);
      case AtomKind::FcInv: return f_c_inv(param, z);
      case AtomKind::Scale: return param * z;
      case AtomKind::Shift: return z + param;
      case AtomKind::Log:
        if (z == Complex{0.0, 0.0}) throw OutsideDomain("log undefined at 0");
        return std::log(z);
      case AtomKind::Exp: return std::exp(z);
      case AtomKind::Conj: return std::conj(z);
    }
    return z;
  }

  /// Complex derivative (for Conj: the d-bar derivative, which is 1).
  Complex derivative(Complex z) const {
    switch (kind) {
      case AtomKind::Mobius: return mobius.derivative(z);
      case AtomKind::Fp:
      case AtomKind::FpInv: return -2.0 / ((1.0 + z) * (1.0 + z));
      case AtomKind::Fh: return 4.0 * kI / (1.0 - z * z);
      case AtomKind::FhInv: {
        const Complex s = kI * std::exp(kI * z / 2.0);
        // dz/dw = (ds/dw) * 2/(1-s)^2 with ds/dw = i s / 2
        return kI * s / ((1.0 - s) * (1.0 - s));
      }
      case AtomKind::Fl: return -kI / z;
      case AtomKind::FlInv: return kI * std::exp(kI * z);
      case AtomKind::Fc: return kI / (param * z);
      case AtomKind::FcInv: return -kI * param * std::exp(-kI * param * z);
      case AtomKind::Scale: return param;
      case AtomKind::Shift: return 1.0;
      case AtomKind::Log: return 1.0 / z;
      case AtomKind::Exp: return std::exp(z);
      case AtomKind::Conj: return 0.0;
    }
    return 1.0;
  }

  Atom inverse() const {
    switch (kind) {
      case AtomKind::Mobius: return from_mobius(mobius.inverse());
      case AtomKind::Fp: return make(AtomKind::FpInv);
      case AtomKind::FpInv: return make(AtomKind::Fp);
      case AtomKind::Fh: return make(AtomKind::FhInv);
      case AtomKind::FhInv: return make(AtomKind::Fh);
      case AtomKind::Fl: return make(AtomKind::FlInv);
      case AtomKind::FlInv: return make(AtomKind::Fl);
      case AtomKind::Fc: return Atom{AtomKind::FcInv, {}, param};
      case AtomKind::FcInv: return Atom{AtomKind::Fc, {}, param};
      case AtomKind::Scale: return scale(1.0 / param);
      case AtomKind::Shift: return shift(-param);
      case AtomKind::Log: return make(AtomKind::Exp);
      case AtomKind::Exp: return make(AtomKind::Log);
      case AtomKind::Conj: return make(AtomKind::Conj);
    }
    return *this;
  }

  bool is_inverse_of(const Atom& o) const {
    const Atom inv = o.inverse();
    if (inv.kind != kind) return false;
    if (kind == AtomKind::Mobius) return mobius.distance(inv.mobius) < 1e-14;
    return std::abs(param - inv.param) < 1e-14;
  }

  bool is_identity() const {
    switch (kind) {
      case AtomKind::Mobius: return mobius.is_identity(1e-14);
      case AtomKind::Scale: return param == Complex{1.0, 0.0};
      case AtomKind::Shift: return param == Complex{0.0, 0.0};
      default: return false;
    }
  }

  std::string to_string() const {
    std::string s = hkvf::to_string(kind);
    switch (kind) {
      case AtomKind::Mobius: return s + mobius.to_string();
      case AtomKind::Fc:
      case AtomKind::FcInv:
      case AtomKind::Scale:
      case AtomKind::Shift: return s + "(" + detail::cstr(param) + ")";
      default: return s;
    }
  }

  bool operator==(const Atom& o) const {
    return kind == o.kind && param == o.param && mobius.distance(o.mobius) == 0.0;
  }
};

// ---------------------------------------------------------------------------
// Chains

/// atoms[0] is applied first.
class MapChain {
 public:
  MapChain() = default;
  explicit MapChain(std::vector<Atom> atoms, std::optional<CanonicalSurface> source = std::nullopt,
                    std::optional<CanonicalSurface> target = std::nullopt)
      : atoms_(std::move(atoms)), source_(std::move(source)), target_(std::move(target)) {}

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::optional<CanonicalSurface>& source() const noexcept { return source_; }
  const std::optional<CanonicalSurface>& target() const noexcept { return target_; }
  void set_source(CanonicalSurface s) { source_ = std::move(s); }
  void set_target(CanonicalSurface s) { target_ = std::move(s); }
  bool empty() const noexcept { return atoms_.empty(); }

  MapChain& then(const Atom& a) {
    atoms_.push_back(a);
    return *this;
  }

  /// this followed by `next`.
  MapChain then(const MapChain& next) const {
    MapChain out = *this;
    out.atoms_.insert(out.atoms_.end(), next.atoms_.begin(), next.atoms_.end());
    out.target_ = next.target_;
    return out;
  }

  Complex apply(Complex z) const {
    for (const Atom& a : atoms_) z = a.apply(z);
    return z;
  }
  Complex operator()(Complex z) const { return apply(z); }

  Complex derivative(Complex z) const {
    Complex d{1.0, 0.0};
    for (const Atom& a : atoms_) {
      d *= a.derivative(z);
      z = a.apply(z);
    }
    return d;
  }

  MapChain inverse() const {
    std::vector<Atom> inv;
    for (auto it = atoms_.rbegin(); it != atoms_.rend(); ++it) inv.push_back(it->inverse());
    return MapChain(std::move(inv), target_, source_);
  }

  /// Single Mobius transform when every atom is one.
  std::optional<MobiusTransform> as_mobius() const {
    MobiusTransform m = MobiusTransform::identity();
    for (const Atom& a : atoms_) {
      const auto am = a.as_mobius();
      if (!am) return std::nullopt;
      m = am->compose(m);
    }
    return m;
  }

  bool holomorphic() const {
    for (const Atom& a : atoms_)
      if (!a.holomorphic()) return false;
    return true;
  }

  /// Cancels adjacent inverse pairs, merges Mobius neighbours, drops identities.
  MapChain simplified() const {
    std::vector<Atom> out;
    for (const Atom& a : atoms_) {
      if (a.is_identity()) continue;
      if (!out.empty() && out.back().is_inverse_of(a)) {
        out.pop_back();
        continue;
      }
      if (!out.empty() && out.back().kind == AtomKind::Mobius && a.kind == AtomKind::Mobius) {
        const MobiusTransform m = a.mobius.compose(out.back().mobius);
        out.pop_back();
        if (!m.is_identity(1e-14)) out.push_back(Atom::from_mobius(m));
        continue;
      }
      out.push_back(a);
    }
    return MapChain(std::move(out), source_, target_);
  }

  std::string to_string() const {
    if (atoms_.empty()) return "[identity]";
    std::string s = "[";
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += (i ? ", " : "") + atoms_[i].to_string();
    return s + "]";
  }

 private:
  std::vector<Atom> atoms_;
  std::optional<CanonicalSurface> source_;
  std::optional<CanonicalSurface> target_;
};

// ---------------------------------------------------------------------------
// Conjugation

/// Pointwise representation of a conjugated map.
struct SampledMap {
  std::function<Complex(Complex)> eval;
  std::vector<Complex> grid;
  std::vector<Complex> values;

  /// Max |values - h(grid)| for a reference map h.
  template <class F>
  double deviation(F&& h) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(values[i] - h(grid[i])));
    return worst;
  }
};

using ConjugatedMap = std::variant<MobiusTransform, SampledMap>;

/// chain o f o chain^{-1}. Mobius-only chains give a transform; otherwise the
/// composition is sampled on `grid` (points of the chain's target).
inline ConjugatedMap conjugate_flow(const MapChain& chain, const MobiusTransform& f,
                                    const std::vector<Complex>& grid = {}) {
  if (const auto m = chain.as_mobius()) return f.conjugated_by(*m);
  const MapChain inv = chain.inverse();
  SampledMap out;
  out.eval = [chain, inv, f](Complex w) {
    try {
      const Complex z = inv.apply(w);
      const Complex fz = f.apply_finite(z);
      if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag()))
        throw DomainEscape("flow sent " + detail::cstr(z) + " to infinity");
      return chain.apply(fz);
    } catch (const OutsideDomain& e) {
      throw DomainEscape(e.what());
    } catch (const BranchViolation& e) {
      throw DomainEscape(e.what());
    }
  };
  out.grid = grid;
  for (const Complex& w : grid) out.values.push_back(out.eval(w));
  return out;
}

// ---------------------------------------------------------------------------
// Conformality check

struct ConformalReport {
  double max_dbar = 0.0;
  Complex worst_point{};
  double min_abs_derivative = std::numeric_limits<double>::infinity();
  Complex min_derivative_point{};
  std::size_t points = 0;
  bool holomorphic = true;      // max_dbar below tol
  bool nondegenerate = true;    // |df| > 1e-8 everywhere
  bool ok() const { return holomorphic && nondegenerate; }
};

/// Finite-difference d-bar residual and |df| over a grid in the chain's source.
inline ConformalReport check_conformal(const MapChain& chain, const std::vector<Complex>& grid,
                                       double h = 1e-6, double tol = 1e-7) {
  ConformalReport rep;
  for (const Complex& z : grid) {
    const Complex fx = (chain.apply(z + h) - chain.apply(z - h)) / (2.0 * h);
    const Complex fy = (chain.apply(z + Complex(0, h)) - chain.apply(z - Complex(0, h))) / (2.0 * h);
    const double dbar = std::abs(0.5 * (fx + kI * fy));
    const double d = std::abs(0.5 * (fx - kI * fy));
    ++rep.points;
    if (dbar > rep.max_dbar) {
      rep.max_dbar = dbar;
      rep.worst_point = z;
    }
    if (d < rep.min_abs_derivative) {
      rep.min_abs_derivative = d;
      rep.min_derivative_point = z;
    }
  }
  rep.holomorphic = rep.max_dbar < tol;
  rep.nondegenerate = rep.min_abs_derivative > 1e-8;
  return rep;
}

/// n x n grid in the disc |z| <= r.
inline std::vector<Complex> disc_grid(int n, double r) {
  std::vector<Complex> g;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Complex z{-r + 2.0 * r * i / (n - 1), -r + 2.0 * r * j / (n - 1)};
      if (std::abs(z) <= r) g.push_back(z);
    }
  return g;
}

}  // namespace hkvf
