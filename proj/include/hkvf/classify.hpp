#pragma once

// Reduction of a verified HKVF to one of the canonical normal forms: a
// rotation e^{it} z or a translation z + it on a canonical surface.
//
// The surface chart is first moved to a Mobius model (disc, closed disc,
// punctured plane or itself) where the pushed field is a quadratic
// a + b z + c z^2, i.e. the generator of a one-parameter Mobius group. Its
// fixed points fix the normalizing map; the flow samples from integrated
// trajectories are fitted with the flow-group machinery and cross-checked
// against the generator. The final chain is verified numerically on a grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hkvf/conformal_maps.hpp"
#include "hkvf/errors.hpp"
#include "hkvf/flowgroup.hpp"
#include "hkvf/geometry.hpp"
#include "hkvf/mobius.hpp"
#include "hkvf/surfaces.hpp"
#include "hkvf/trajectory.hpp"
#include "hkvf/verify.hpp"

namespace hkvf {

enum class NormalForm { Rotation, Translation };

inline const char* to_string(NormalForm n) { return n == NormalForm::Rotation ? "rotation" : "translation"; }

struct ClassifyOptions {
  int grid_n = 21;
  std::vector<double> check_times{0.3, 1.0};
  std::vector<double> sample_times{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  double tol_nf = 1e-6;
  double tol_sym = 1e-6;
  double tol_kind = 1e-8;  // relative, on the generator discriminant
  int profile_n = 21;
  FlowOptions flow = [] {
    FlowOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-12;
    return o;
  }();
};

struct ClassificationResult {
  CanonicalSurface source;
  CanonicalSurface target;
  MapChain chain;  // source chart -> target chart
  NormalForm normal_form = NormalForm::Rotation;
  MobiusKind model_kind = MobiusKind::Elliptic;
  double time_scale = 1.0;    // normalized time s is original time time_scale * s
  Complex period{kTwoPi, 0.0};  // Re-period of a cylinder target
  std::array<Complex, 3> generator{};  // a + b z + c z^2 in the model chart
  GeneratorData fit;                   // affine fit in the normalizing chart
  double sample_residual = 0.0;        // fitted samples vs exp(tM)
  double conditioning = 0.0;           // min pairwise chordal distance of tracked points
  std::vector<std::pair<double, double>> lambda_profile;
  double pushed_flow_residual = 0.0;
  double symmetry_residual = 0.0;
  std::size_t grid_points = 0;
  bool periodic_branch = false;
  double horizon = 0.0;
  std::vector<std::string> notes;

  Complex normal_flow(Complex w, double s) const {
    return normal_form == NormalForm::Rotation ? std::exp(Complex(0.0, s)) * w : w + Complex(0.0, s);
  }
};

namespace detail {

struct MobiusModel {
  std::vector<Atom> prefix;
  SurfaceKind kind;
};

inline MobiusModel model_for(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::HalfPlaneOpen: return {{Atom::make(AtomKind::FpInv)}, SurfaceKind::Disc};
    case SurfaceKind::HalfPlaneClosed: return {{Atom::make(AtomKind::FpInv)}, SurfaceKind::ClosedDisc};
    case SurfaceKind::ChannelOpen: return {{Atom::make(AtomKind::FhInv)}, SurfaceKind::Disc};
    case SurfaceKind::ChannelSemiClosed:
    case SurfaceKind::ChannelClosed: return {{Atom::make(AtomKind::FhInv)}, SurfaceKind::ClosedDisc};
    case SurfaceKind::Cylinder: return {{Atom::make(AtomKind::FlInv)}, SurfaceKind::PuncturedPlane};
    default: return {{}, k};
  }
}

inline double model_radius(const CanonicalSurface& S, SurfaceKind model) {
  switch (model) {
    case SurfaceKind::Disc:
    case SurfaceKind::ClosedDisc:
    case SurfaceKind::PuncturedDisc:
    case SurfaceKind::PuncturedClosedDisc: return 0.5;
    case SurfaceKind::Annulus:
    case SurfaceKind::ClosedAnnulus:
    case SurfaceKind::SemiClosedAnnulus: return 0.5 * (1.0 + S.rho());
    default: return 1.0;
  }
}

/// Quadratic a + b z + c z^2 through three samples (divided differences).
inline std::array<Complex, 3> quadratic_through(const std::array<Complex, 3>& z, const std::array<Complex, 3>& f) {
  const Complex d01 = (f[1] - f[0]) / (z[1] - z[0]);
  const Complex d12 = (f[2] - f[1]) / (z[2] - z[1]);
  const Complex c = (d12 - d01) / (z[2] - z[0]);
  const Complex b = d01 - c * (z[0] + z[1]);
  const Complex a = f[0] - b * z[0] - c * z[0] * z[0];
  return {a, b, c};
}

struct GeneratorKind {
  MobiusKind kind;
  std::vector<ExtendedPoint> fixed;
};

/// Type and zeros of the generator a + b z + c z^2 (infinity counts as a zero
/// when c = 0).
inline GeneratorKind generator_kind(const std::array<Complex, 3>& q, double tol) {
  const auto [a, b, c] = q;
  const double scale = std::abs(a) + std::abs(b) + std::abs(c);
  if (!(scale > 0.0)) throw ZeroGenerator("the field vanishes in the model chart");
  const Complex D = b * b - 4.0 * a * c;
  const double s = std::max(std::norm(b), 4.0 * std::abs(a * c));
  GeneratorKind out;
  if (std::abs(D) <= tol * s || s == 0.0) {
    out.kind = MobiusKind::Parabolic;
  } else if (std::abs(D.imag()) <= tol * s) {
    out.kind = D.real() < 0.0 ? MobiusKind::Elliptic : MobiusKind::Hyperbolic;
  } else {
    out.kind = MobiusKind::Loxodromic;
  }
  const bool c_zero = std::abs(c) <= tol * scale;
  if (c_zero) {
    if (std::abs(b) <= tol * scale) {
      out.fixed = {ExtendedPoint::infinity()};
    } else {
      out.fixed = {ExtendedPoint(-a / b), ExtendedPoint::infinity()};
    }
  } else if (out.kind == MobiusKind::Parabolic) {
    out.fixed = {ExtendedPoint(-b / (2.0 * c))};
  } else {
    const Complex sq = std::sqrt(D);
    const Complex qq = -0.5 * (b + (std::real(std::conj(b) * sq) >= 0.0 ? sq : -sq));
    out.fixed = {ExtendedPoint(qq / c), ExtendedPoint(a / qq)};
  }
  std::sort(out.fixed.begin(), out.fixed.end(), point_less);
  return out;
}

/// exp(t M) for the sl2 generator of a + b z + c z^2.
inline MobiusTransform generator_flow(const std::array<Complex, 3>& q, double t) {
  const Complex m11 = 0.5 * q[1], m12 = q[0], m21 = -q[2];
  const Complex mu = std::sqrt(m11 * m11 + m12 * m21);
  Complex ch{1.0, 0.0}, sh{t, 0.0};
  if (std::abs(mu * t) > 1e-8) {
    ch = std::cosh(mu * t);
    sh = std::sinh(mu * t) / mu;
  } else {
    ch = 1.0 + 0.5 * (mu * t) * (mu * t);
    sh = t * (1.0 + (mu * t) * (mu * t) / 6.0);
  }
  return {ch + sh * m11, sh * m12, sh * m21, ch - sh * m11};
}

inline bool near_zero(const ExtendedPoint& p, double tol = 1e-6) {
  return p.is_finite() && std::abs(p.value()) < tol;
}

inline bool fixes_zero_and_infinity(const GeneratorKind& gk) {
  return gk.fixed.size() == 2 && near_zero(gk.fixed[0]) && gk.fixed[1].is_infinity();
}

inline Complex periodic_difference(Complex d, Complex period) {
  const double k = std::round((d / period).real());
  return d - k * period;
}

struct Affine {
  MobiusTransform A = MobiusTransform::identity();  // model -> affine chart
  std::vector<Atom> tail;                            // atoms after the prefix
  NormalForm form = NormalForm::Rotation;
  SurfaceKind target = SurfaceKind::Plane;
  double rescale = 1.0;
  Complex period{kTwoPi, 0.0};
  GeneratorData fit;
};

inline FlowSample conjugate_samples(const FlowSample& fs, const MobiusTransform& A) {
  FlowSample out;
  const MobiusTransform Ai = A.inverse();
  for (const auto& s : fs.samples) out.samples.push_back({s.t, A.compose(s.f).compose(Ai)});
  return out;
}

/// Time rescale for a translation with velocity b'(0); reverses time when the
/// direction points into the lower half, so that the direction becomes +i
/// after multiplying by the returned rotation.
inline std::pair<double, Complex> translation_normalization(Complex b_dot) {
  const double m = std::abs(b_dot);
  if (!(m > kTolAlg)) throw ZeroGenerator("translation speed vanishes");
  Complex v = b_dot / m;
  double rescale = 1.0 / m;
  if (v.imag() < 0.0 || (v.imag() == 0.0 && v.real() < 0.0)) {
    v = -v;
    rescale = -rescale;
  }
  Complex rot = kI / v;
  if (std::abs(rot.real()) < 1e-14) rot.real(0.0);
  if (std::abs(rot.imag()) < 1e-14) rot.imag(0.0);
  if (std::abs(rot - 1.0) < 1e-12) rot = 1.0;
  return {rescale, rot};
}

[[noreturn]] inline void mismatch(const std::string& what) { throw ReductionMismatch(what); }

inline double rotation_rescale(const GeneratorData& fit, double tol) {
  if (fit.kind != FamilyKind::RotationLike) mismatch("expected a rotation-like family in the affine chart");
  const Complex u = fit.a_dot0;
  if (std::abs(u.real()) > tol * std::abs(u))
    mismatch("non-isometric family: Re(a'(0)) = " + std::to_string(u.real()));
  return 1.0 / u.imag();
}

}  // namespace detail

/// Classifies a verified HKVF. Throws NotHkvf unless `report.is_hkvf()`.
inline ClassificationResult classify_flow(const ConformalMetric& g, const VectorField& X, const HkvfReport& report,
                                          const ClassifyOptions& opt = {}) {
  if (!report.is_hkvf())
    throw NotHkvf(std::string("verification verdict is ") + report.verdict() + "; classification needs pass");
  using detail::mismatch;
  const CanonicalSurface& S = g.surface();
  const SurfaceKind sk = S.kind();
  ClassificationResult res;
  res.source = S;
  res.horizon = report.complete.horizon;
  res.periodic_branch = report.periodic.found;

  const detail::MobiusModel model = detail::model_for(sk);
  const MapChain prefix(model.prefix);
  const MapChain prefix_inv = prefix.inverse();

  // Base points in the model chart and the pushed field there.
  const double r0 = detail::model_radius(S, model.kind);
  std::array<Complex, 3> base{};
  for (int k = 0; k < 3; ++k) base[k] = std::polar(r0, std::numbers::pi / 6.0 + 2.0 * std::numbers::pi * k / 3.0);
  auto model_field = [&](Complex m) {
    const Complex z = prefix_inv.apply(m);
    return prefix.derivative(z) * X.at(z);
  };
  std::array<Complex, 3> fb{};
  for (int k = 0; k < 3; ++k) fb[k] = model_field(base[k]);
  res.generator = detail::quadratic_through(base, fb);
  for (int k = 0; k < 3; ++k) {
    const Complex m = std::polar(0.8 * r0, 0.4 + 2.0 * std::numbers::pi * k / 3.0);
    const Complex f = model_field(m);
    const Complex q = res.generator[0] + res.generator[1] * m + res.generator[2] * m * m;
    if (std::abs(f - q) > 1e-8 * (1.0 + std::abs(f)))
      mismatch("the field is not a Mobius generator in the " + std::string(to_string(model.kind)) + " chart");
  }

  // Flow samples from three tracked trajectories.
  std::vector<std::array<ExtendedPoint, 3>> images;
  std::array<ExtendedPoint, 3> base_pts{ExtendedPoint(base[0]), ExtendedPoint(base[1]), ExtendedPoint(base[2])};
  res.conditioning = 2.0;
  for (double t : opt.sample_times) {
    std::array<ExtendedPoint, 3> im{};
    for (int k = 0; k < 3; ++k) {
      const ExtendedPoint e = flow_map(S, X, ExtendedPoint(prefix_inv.apply(base[k])), t, opt.flow);
      im[k] = e.is_infinity() ? e : ExtendedPoint(prefix.apply(e.value()));
    }
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) res.conditioning = std::min(res.conditioning, chordal_distance(im[i], im[j]));
    images.push_back(im);
  }
  if (res.conditioning < 1e-3) res.notes.push_back("tracked points nearly coincide; fit is ill-conditioned");
  const FlowSample fs = FlowSample::from_tracks(opt.sample_times, base_pts, images);
  for (const auto& s : fs.samples)
    res.sample_residual = std::max(res.sample_residual, s.f.distance(detail::generator_flow(res.generator, s.t)));
  if (res.sample_residual > opt.tol_nf)
    mismatch("integrated flow disagrees with the Mobius generator by " + std::to_string(res.sample_residual));

  detail::Affine af;
  if (sk == SurfaceKind::Torus) {
    af.fit = fit_family(fs);
    if (af.fit.kind == FamilyKind::RotationLike)
      throw TorusFixedPoint("lifted flow is rotation-like; its fixed point descends to a zero on the torus");
    auto [rs, rot] = detail::translation_normalization(af.fit.b_dot0);
    af.form = NormalForm::Translation;
    af.rescale = rs;
    if (rot != Complex(1.0)) af.tail.push_back(Atom::scale(rot));
    af.target = SurfaceKind::Torus;
    res.model_kind = MobiusKind::Parabolic;
  } else {
    const detail::GeneratorKind gk = detail::generator_kind(res.generator, opt.tol_kind);
    res.model_kind = gk.kind;
    const SurfaceKind mk = model.kind;
    const bool disc_model = mk == SurfaceKind::Disc || mk == SurfaceKind::ClosedDisc;
    const std::string where = std::string(to_string(gk.kind)) + " flow on " + std::string(to_string(sk));

    if (gk.kind == MobiusKind::Elliptic && mk != SurfaceKind::PuncturedPlane) {
      const auto& fx = gk.fixed;
      switch (mk) {
        case SurfaceKind::RiemannSphere: {
          const Complex p = fx[0].value();
          af.A = fx[1].is_infinity() ? MobiusTransform::translation(-p)
                                     : MobiusTransform(1.0, -p, 1.0, -fx[1].value());
          break;
        }
        case SurfaceKind::Plane:
          if (fx.size() != 2 || !fx[1].is_infinity()) mismatch(where + ": fixed points leave the plane");
          af.A = MobiusTransform::translation(-fx[0].value());
          break;
        case SurfaceKind::Disc:
        case SurfaceKind::ClosedDisc: {
          std::optional<Complex> p;
          for (const auto& f : fx)
            if (f.is_finite() && std::abs(f.value()) < 1.0 - 1e-9) p = f.value();
          if (!p) mismatch(where + ": no interior fixed point");
          if (std::abs(*p) > 1e-12) af.A = MobiusTransform(1.0, -*p, -std::conj(*p), 1.0);
          if (sk != SurfaceKind::Disc && sk != SurfaceKind::ClosedDisc && sk != SurfaceKind::HalfPlaneOpen &&
              sk != SurfaceKind::ChannelOpen)
            mismatch(where + ": a rotation cannot preserve the closed edge");
          break;
        }
        case SurfaceKind::PuncturedDisc:
        case SurfaceKind::PuncturedClosedDisc:
        case SurfaceKind::Annulus:
        case SurfaceKind::ClosedAnnulus:
        case SurfaceKind::SemiClosedAnnulus:
          if (!detail::fixes_zero_and_infinity(gk)) mismatch(where + ": rotation centre is not the origin");
          break;
        default: mismatch(where);
      }
      af.fit = fit_family(detail::conjugate_samples(fs, af.A));
      af.rescale = detail::rotation_rescale(af.fit, kTolFit);
      af.form = NormalForm::Rotation;
      af.target = mk;
      if (af.A.distance(MobiusTransform::identity()) > 0.0) af.tail.push_back(Atom::from_mobius(af.A));
    } else if (mk == SurfaceKind::PuncturedPlane) {
      if (!detail::fixes_zero_and_infinity(gk)) mismatch(where + ": fixed points are not {0, inf}");
      af.fit = fit_family(fs);
      if (af.fit.kind != FamilyKind::RotationLike) mismatch(where + ": expected z -> e^{ut} z");
      const Complex u = af.fit.a_dot0;
      if (gk.kind == MobiusKind::Elliptic || std::abs(u.real()) <= kTolFit * std::abs(u)) {
        af.rescale = detail::rotation_rescale(af.fit, kTolFit);
        af.form = NormalForm::Rotation;
        af.target = SurfaceKind::PuncturedPlane;
      } else {
        const double m = std::abs(u);
        const Complex v = u / m;
        af.rescale = 1.0 / m;
        af.form = NormalForm::Translation;
        af.target = SurfaceKind::Cylinder;
        if (std::abs(v + 1.0) < 1e-9) {
          af.tail.push_back(Atom::make(AtomKind::Fl));
        } else if (std::abs(v - 1.0) < 1e-9) {
          af.tail.push_back(Atom::make(AtomKind::Fl));
          af.tail.push_back(Atom::scale(-1.0));
        } else {
          af.tail.push_back(Atom::fc(v));
          af.period = -kTwoPi / v;
          res.notes.push_back("spiral flow: the cylinder chart has period " + ExtendedPoint(af.period).to_string());
        }
      }
    } else if (gk.kind == MobiusKind::Parabolic && mk == SurfaceKind::Plane) {
      if (!gk.fixed[0].is_infinity()) mismatch(where + ": parabolic point is finite");
      af.fit = fit_family(fs);
      if (af.fit.kind != FamilyKind::TranslationLike) mismatch(where + ": expected a translation");
      auto [rs, rot] = detail::translation_normalization(af.fit.b_dot0);
      af.rescale = rs;
      if (rot != Complex(1.0)) af.tail.push_back(Atom::scale(rot));
      af.form = NormalForm::Translation;
      af.target = SurfaceKind::Plane;
    } else if (gk.kind == MobiusKind::Parabolic && disc_model) {
      if (sk == SurfaceKind::ClosedDisc || sk == SurfaceKind::ChannelSemiClosed || sk == SurfaceKind::ChannelClosed)
        mismatch(where + ": the parabolic point lies on the surface");
      Complex zeta = gk.fixed[0].value();
      if (std::abs(std::abs(zeta) - 1.0) > 1e-6) mismatch(where + ": parabolic point off the unit circle");
      zeta /= std::abs(zeta);
      const MobiusTransform rot = MobiusTransform::scaling(-std::conj(zeta));
      af.A = MobiusTransform(-1.0, 1.0, 1.0, 1.0).compose(rot);
      af.fit = fit_family(detail::conjugate_samples(fs, af.A));
      if (af.fit.kind != FamilyKind::TranslationLike) mismatch(where + ": expected a translation in the half-plane");
      const Complex v = af.fit.b_dot0 / std::abs(af.fit.b_dot0);
      if (std::abs(v.real()) > kTolFit) mismatch(where + ": translation is not vertical");
      af.rescale = detail::translation_normalization(af.fit.b_dot0).first;
      if (rot.distance(MobiusTransform::identity()) > 0.0) af.tail.push_back(Atom::from_mobius(rot));
      af.tail.push_back(Atom::make(AtomKind::Fp));
      af.form = NormalForm::Translation;
      af.target = mk == SurfaceKind::Disc ? SurfaceKind::HalfPlaneOpen : SurfaceKind::HalfPlaneClosed;
    } else if (gk.kind == MobiusKind::Hyperbolic && disc_model) {
      if (sk == SurfaceKind::ClosedDisc || sk == SurfaceKind::HalfPlaneClosed)
        mismatch(where + ": a fixed point lies on the surface");
      const auto& fx = gk.fixed;
      if (fx.size() != 2 || !fx[0].is_finite() || !fx[1].is_finite()) mismatch(where);
      Complex z1 = fx[0].value(), z2 = fx[1].value();
      if (std::abs(std::abs(z1) - 1.0) > 1e-6 || std::abs(std::abs(z2) - 1.0) > 1e-6)
        mismatch(where + ": fixed points off the unit circle");
      z1 /= std::abs(z1);
      z2 /= std::abs(z2);
      const double a1 = std::arg(z1);
      const double da = std::fmod(std::arg(z2) - a1 + 2.0 * kTwoPi, kTwoPi);
      const Complex mid = std::polar(1.0, a1 + 0.5 * da);
      const MobiusTransform N = from_three_points(z1, mid, z2, Complex(-1.0), Complex(0.0, -1.0), Complex(1.0));
      const MobiusTransform K(1.0, 1.0, -1.0, 1.0);
      af.A = K.compose(N);
      af.fit = fit_family(detail::conjugate_samples(fs, af.A));
      if (af.fit.kind != FamilyKind::RotationLike) mismatch(where + ": expected a dilation");
      const Complex kappa = af.fit.a_dot0;
      if (std::abs(kappa.imag()) > kTolFit * std::abs(kappa)) mismatch(where + ": dilation has a rotation part");
      af.rescale = 1.0 / (2.0 * kappa.real());
      af.tail.push_back(Atom::from_mobius(N));
      af.tail.push_back(Atom::make(AtomKind::Fh));
      af.form = NormalForm::Translation;
      af.target = sk == SurfaceKind::ChannelSemiClosed ? SurfaceKind::ChannelSemiClosed
                  : sk == SurfaceKind::ChannelClosed   ? SurfaceKind::ChannelClosed
                                                       : SurfaceKind::ChannelOpen;
    } else if (mk == SurfaceKind::Plane && gk.fixed.size() == 2 && gk.fixed[1].is_infinity()) {
      const MobiusTransform A = MobiusTransform::translation(-gk.fixed[0].value());
      const GeneratorData fit = fit_family(detail::conjugate_samples(fs, A));
      const IsometryVerdict iv = isometry_screen(fit, ConformalMetric(CanonicalSurface::make(SurfaceKind::Plane), "1"));
      mismatch(where + ": " + (iv.pass ? std::string("not a rotation") : iv.reason));
    } else {
      mismatch(where + " has no canonical reduction");
    }
  }

  // Assemble the chain and target.
  std::vector<Atom> atoms = model.prefix;
  atoms.insert(atoms.end(), af.tail.begin(), af.tail.end());
  double rescale = af.rescale;
  if (af.target == SurfaceKind::Torus) {
    const Complex rot = af.tail.empty() ? Complex(1.0) : af.tail.back().param;
    res.target = CanonicalSurface::torus(rot * S.lattice().pi1, rot * S.lattice().pi2);
  } else if (has_rho(af.target)) {
    res.target = CanonicalSurface::with_rho(af.target, S.rho());
  } else {
    res.target = CanonicalSurface::make(af.target);
  }
  if (af.target == SurfaceKind::ChannelSemiClosed) {
    const Complex w = MapChain(atoms).apply(Complex(0.0, 0.0));
    if (std::abs(w.real() - kTwoPi) < 1e-6) {
      atoms.push_back(Atom::scale(-1.0));
      atoms.push_back(Atom::shift(kTwoPi));
      rescale = -rescale;
    }
  }
  res.chain = MapChain(atoms, S, res.target).simplified();
  res.normal_form = af.form;
  res.time_scale = rescale;
  res.period = af.period;
  res.fit = af.fit;

  if (res.normal_form == NormalForm::Rotation && !res.periodic_branch)
    res.notes.push_back("rotation normal form but no periodic orbit was detected within the horizon");
  if (res.normal_form == NormalForm::Translation && res.periodic_branch && af.target != SurfaceKind::Torus)
    res.notes.push_back("periodic orbit detected on a translation normal form");

  // Numerical verification of the chain.
  const MapChain inv = res.chain.inverse();
  const auto mob = res.chain.as_mobius();
  auto to_target = [&](const ExtendedPoint& z) -> std::optional<Complex> {
    if (mob) {
      const ExtendedPoint w = mob->apply(z);
      if (w.is_infinity()) return std::nullopt;
      return w.value();
    }
    if (z.is_infinity()) return std::nullopt;
    return res.chain.apply(z.value());
  };
  auto to_source = [&](Complex w) -> ExtendedPoint {
    if (mob) return mob->inverse().apply(ExtendedPoint(w));
    return ExtendedPoint(inv.apply(w));
  };
  auto diff = [&](Complex a, Complex b) {
    if (res.target.kind() == SurfaceKind::Cylinder) return detail::periodic_difference(a - b, res.period);
    return res.target.difference(a, b);
  };

  const auto grid = surface_grid(res.target, opt.grid_n);
  for (double s : opt.check_times)
    for (const Complex& w : grid) {
      const ExtendedPoint z = to_source(w);
      if (z.is_infinity()) continue;
      const ExtendedPoint zt = flow_map(S, X, z, rescale * s, opt.flow);
      const auto wt = to_target(zt);
      if (!wt) continue;
      res.pushed_flow_residual = std::max(res.pushed_flow_residual, std::abs(diff(*wt, res.normal_flow(w, s))));
      ++res.grid_points;
    }
  if (res.pushed_flow_residual > opt.tol_nf)
    mismatch("pushed flow differs from the normal form by " + std::to_string(res.pushed_flow_residual));

  auto lambda_tilde = [&](Complex w) -> std::optional<double> {
    const ExtendedPoint z = to_source(w);
    if (z.is_infinity() || std::abs(z.value()) > kFarThreshold) return std::nullopt;
    return g.lambda(z.value()) / std::abs(res.chain.derivative(z.value()));
  };
  auto profile_point = [&](Complex w) {
    return res.normal_form == NormalForm::Rotation ? Complex(std::abs(w), 0.0) : Complex(w.real(), 0.0);
  };
  for (const Complex& w : grid) {
    const Complex ref = profile_point(w);
    if (!res.target.contains(ExtendedPoint(ref))) continue;
    const auto l0 = lambda_tilde(w), l1 = lambda_tilde(ref);
    if (!l0 || !l1) continue;
    res.symmetry_residual = std::max(res.symmetry_residual, std::abs(*l0 - *l1));
  }
  if (res.symmetry_residual > opt.tol_sym)
    throw SymmetryMismatch("pulled-back metric depends on the flow variable: residual " +
                           std::to_string(res.symmetry_residual));

  const auto [x0, x1, y0, y1] = res.target.bounding_box();
  const double hi = res.normal_form == NormalForm::Rotation ? std::max(std::abs(x0), std::abs(x1)) : x1;
  const double lo = res.normal_form == NormalForm::Rotation ? 0.0 : x0;
  const int n = std::max(2, opt.profile_n);
  for (int k = 0; k < n; ++k) {
    const double sk_ = lo + (hi - lo) * (0.01 + 0.98 * k / (n - 1));
    const Complex w(sk_, 0.0);
    if (!res.target.contains(ExtendedPoint(w))) continue;
    if (const auto l = lambda_tilde(w)) res.lambda_profile.emplace_back(sk_, *l);
  }
  return res;
}

/// Verifies then classifies.
inline ClassificationResult classify_flow(const ConformalMetric& g, const VectorField& X,
                                          const VerifyOptions& vopt = {}, const ClassifyOptions& opt = {}) {
  return classify_flow(g, X, verify(g, X, vopt), opt);
}

// ---------------------------------------------------------------------------
// Canonical coordinates

struct ProfileSample {
  double x1;
  double lambda;   // lambda(x1) from the pulled-back metric
  double x_norm;   // |X|_g at the preimage, in normalized time
};

struct CanonicalCoordinates {
  MapChain chain;  // source chart -> (x1, x2) chart
  double lo = 0.0;
  double hi = 0.0;
  std::vector<ProfileSample> profile;
  double max_residual = 0.0;
};

/// Coordinates in which X is d/dx2 and g = lambda(x1)^2 (dx1^2 + dx2^2); the
/// profile is compared with |X|_g on 101 points of B.
inline CanonicalCoordinates canonical_coordinates(const ClassificationResult& res, const ConformalMetric& g,
                                                  const VectorField& X, double tol = 1e-6, double tol_zero = 1e-10) {
  CanonicalCoordinates cc;
  const CanonicalSurface& T = res.target;
  cc.chain = res.chain;
  const bool rot = res.normal_form == NormalForm::Rotation;
  if (rot) cc.chain.then(Atom::make(AtomKind::Log));
  cc.chain = MapChain(cc.chain.atoms(), res.source, std::nullopt);
  double lo = 0.0, hi = 0.0;
  if (rot) {
    switch (T.kind()) {
      case SurfaceKind::Disc:
      case SurfaceKind::ClosedDisc:
      case SurfaceKind::PuncturedDisc:
      case SurfaceKind::PuncturedClosedDisc: lo = -4.0, hi = 0.0; break;
      case SurfaceKind::Annulus:
      case SurfaceKind::ClosedAnnulus:
      case SurfaceKind::SemiClosedAnnulus: lo = std::log(T.rho()), hi = 0.0; break;
      default: lo = -3.0, hi = 3.0;
    }
  } else {
    const auto box = T.bounding_box();
    lo = box[0];
    hi = box[1];
  }
  cc.lo = lo;
  cc.hi = hi;
  const MapChain inv = cc.chain.inverse();
  for (int k = 0; k <= 100; ++k) {
    const double x1 = lo + (hi - lo) * (0.005 + 0.99 * k / 100.0);
    const Complex c(x1, 0.3);
    const Complex z = inv.apply(c);
    const double speed = std::abs(X.at(z));
    if (speed < tol_zero) throw FixedPointInDomain("X vanishes at the preimage of x1 = " + std::to_string(x1));
    const double lam = g.lambda(z) / std::abs(cc.chain.derivative(z));
    const double xn = std::abs(res.time_scale) * g.lambda(z) * speed;
    cc.profile.push_back({x1, lam, xn});
    cc.max_residual = std::max(cc.max_residual, std::abs(lam - xn));
  }
  if (cc.max_residual > tol)
    throw SymmetryMismatch("profile differs from |X|_g by " + std::to_string(cc.max_residual));
  return cc;
}

}  // namespace hkvf
