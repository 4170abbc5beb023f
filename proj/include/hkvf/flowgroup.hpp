#pragma once

// One-parameter groups of affine maps z -> a(t) z + b(t). Group law
// a(t+s) = a(t) a(s), b(t+s) = a(t) b(s) + b(t) gives a(t) = exp(a'(0) t) and,
// for the families that occur as Killing flows, either b = 0 or a = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "hkvf/errors.hpp"
#include "hkvf/geometry.hpp"
#include "hkvf/mobius.hpp"

namespace hkvf {

inline constexpr double kTolGroup = 1e-7;
inline constexpr double kTolFit = 1e-6;

struct TimedTransform {
  double t;
  MobiusTransform f;
};

/// Flow samples (t, Phi_t), times strictly increasing and including 0.
struct FlowSample {
  std::vector<TimedTransform> samples;

  FlowSample() = default;
  explicit FlowSample(std::vector<TimedTransform> s) : samples(std::move(s)) {}

  /// Fits Phi_t from three tracked points and their images at each time.
  static FlowSample from_tracks(const std::vector<double>& times, const std::array<ExtendedPoint, 3>& base,
                                const std::vector<std::array<ExtendedPoint, 3>>& images) {
    FlowSample fs;
    for (std::size_t i = 0; i < times.size(); ++i)
      fs.samples.push_back({times[i], from_three_points(base[0], base[1], base[2], images[i][0],
                                                        images[i][1], images[i][2])});
    return fs;
  }
};

enum class FamilyKind { RotationLike, TranslationLike };

inline const char* to_string(FamilyKind k) {
  return k == FamilyKind::RotationLike ? "rotation_like" : "translation_like";
}

struct GeneratorData {
  Complex a_dot0{};
  Complex b_dot0{};
  FamilyKind kind = FamilyKind::TranslationLike;
  double fit_residual = 0.0;
  double group_residual = 0.0;

  Complex a(double t) const { return kind == FamilyKind::RotationLike ? std::exp(a_dot0 * t) : Complex(1.0); }
  Complex b(double t) const { return kind == FamilyKind::RotationLike ? Complex(0.0) : b_dot0 * t; }
  Complex apply(double t, Complex z) const { return a(t) * z + b(t); }
  MobiusTransform transform(double t) const {
    const Complex al = std::sqrt(a(t));
    return MobiusTransform(al, b(t) / al, 0.0, 1.0 / al);
  }
};

namespace detail {

struct AffineSample {
  double t;
  Complex A;
  Complex B;
};

inline std::vector<AffineSample> to_affine(const FlowSample& fs) {
  std::vector<AffineSample> out;
  for (const auto& [t, f] : fs.samples) {
    const double scale = std::max({std::abs(f.a()), std::abs(f.b()), std::abs(f.d()), 1.0});
    if (std::abs(f.c()) > kTolAlg * scale)
      throw NotAffine("sample at t=" + std::to_string(t) + " moves infinity (c=" + ExtendedPoint(f.c()).to_string() + ")");
    out.push_back({t, f.a() / f.d(), f.b() / f.d()});
  }
  return out;
}

inline void validate(const FlowSample& fs) {
  if (fs.samples.size() < 4) throw InsufficientSamples("need at least 4 sample times");
  bool has_zero = false;
  for (std::size_t i = 0; i < fs.samples.size(); ++i) {
    if (i > 0 && !(fs.samples[i].t > fs.samples[i - 1].t))
      throw InsufficientSamples("sample times must be strictly increasing");
    if (fs.samples[i].t == 0.0) {
      has_zero = true;
      if (!fs.samples[i].f.is_identity(kTolAlg))
        throw GroupLawViolation("Phi_0 is not the identity");
    }
  }
  if (!has_zero) throw InsufficientSamples("samples must include t = 0");
}

}  // namespace detail

/// Max residual of Phi_{t_i} o Phi_{t_j} = Phi_{t_i + t_j} over all in-range
/// pairs; `worst` receives the offending (t_i, t_j).
inline double group_law_residual(const FlowSample& fs, std::pair<double, double>* worst = nullptr) {
  const auto aff = detail::to_affine(fs);
  double res = 0.0;
  for (std::size_t i = 0; i < aff.size(); ++i)
    for (std::size_t j = i; j < aff.size(); ++j)
      for (std::size_t k = 0; k < aff.size(); ++k) {
        if (std::abs(aff[i].t + aff[j].t - aff[k].t) > 1e-9) continue;
        const double scale = std::max({1.0, std::abs(aff[k].A), std::abs(aff[k].B)});
        const double r = (std::abs(aff[i].A * aff[j].A - aff[k].A) +
                          std::abs(aff[i].A * aff[j].B + aff[i].B - aff[k].B)) / scale;
        if (r > res) {
          res = r;
          if (worst) *worst = {aff[i].t, aff[j].t};
        }
      }
  return res;
}

/// Recovers a'(0), b'(0) from affine flow samples.
inline GeneratorData fit_family(const FlowSample& fs, double tol_group = kTolGroup, double tol_fit = kTolFit) {
  detail::validate(fs);
  auto aff = detail::to_affine(fs);
  std::pair<double, double> worst{};
  const double gres = group_law_residual(fs, &worst);
  if (gres > tol_group)
    throw GroupLawViolation("pair (" + std::to_string(worst.first) + ", " + std::to_string(worst.second) +
                            ") residual " + std::to_string(gres));

  // Richardson-extrapolated one-sided differences at the two nearest times to 0.
  std::vector<detail::AffineSample> nz;
  for (const auto& s : aff)
    if (s.t != 0.0) nz.push_back(s);
  std::sort(nz.begin(), nz.end(), [](const auto& p, const auto& q) { return std::abs(p.t) < std::abs(q.t); });
  auto diff_a = [](const detail::AffineSample& s) { return (s.A - 1.0) / s.t; };
  auto diff_b = [](const detail::AffineSample& s) { return s.B / s.t; };
  Complex a_est = diff_a(nz[0]), b_est = diff_b(nz[0]);
  if (nz.size() >= 2 && std::abs(nz[1].t - 2.0 * nz[0].t) < 1e-12 * std::abs(nz[1].t)) {
    a_est = 2.0 * diff_a(nz[0]) - diff_a(nz[1]);
    b_est = 2.0 * diff_b(nz[0]) - diff_b(nz[1]);
  }

  // Least squares on log a(t) = a'(0) t, unwrapping the branch sample by sample.
  double stt = 0.0;
  Complex stl{};
  for (const auto& s : nz) {
    Complex L = std::log(s.A);
    const double k = std::round(((a_est * s.t).imag() - L.imag()) / (2.0 * std::numbers::pi));
    L += Complex(0.0, 2.0 * std::numbers::pi * k);
    stt += s.t * s.t;
    stl += s.t * L;
    a_est = stl / stt;
  }
  const Complex a_dot = stl / stt;

  Complex stb{};
  for (const auto& s : nz) stb += s.t * s.B;
  const Complex b_dot = stb / stt;

  double rot_res = 0.0, tra_res = 0.0;
  for (const auto& s : aff) {
    const double scale = std::max(1.0, std::abs(s.A));
    rot_res = std::max(rot_res, (std::abs(s.A - std::exp(a_dot * s.t)) + std::abs(s.B)) / scale);
    tra_res = std::max(tra_res, std::abs(s.A - 1.0) + std::abs(s.B - b_dot * s.t));
  }

  GeneratorData gen;
  gen.group_residual = gres;
  if (tra_res < tol_fit && std::abs(a_dot) < tol_fit) {
    gen.kind = FamilyKind::TranslationLike;
    gen.b_dot0 = b_dot;
    gen.fit_residual = tra_res;
  } else if (rot_res < tol_fit) {
    gen.kind = FamilyKind::RotationLike;
    gen.a_dot0 = a_dot;
    gen.fit_residual = rot_res;
  } else {
    throw InconsistentFamily("rotation residual " + std::to_string(rot_res) + ", translation residual " +
                             std::to_string(tra_res) + " (b'(0) estimate " + ExtendedPoint(b_est).to_string() + ")");
  }
  return gen;
}

struct IsometryVerdict {
  bool pass = true;
  std::string reason;
  double radius = 1.0;
  double area0 = 0.0;
  double area_t1 = 0.0;
  double area_t5 = 0.0;
  double ratio_t5 = 1.0;           // area_t5 / area0
  double expected_ratio_t5 = 1.0;  // exp(2 Re(a'(0)) 5)
};

/// Rejects dilating families; the area of the image of B_r(center) under the
/// fitted flow at t = 1 and t = 5 documents the contraction or expansion.
inline IsometryVerdict isometry_screen(const GeneratorData& gen, const ConformalMetric& g, double r = 1.0,
                                       Complex center = 0.0) {
  IsometryVerdict v;
  v.radius = r;
  v.area0 = area(g, center, r);
  // the fitted flow is affine, so B_r(center) maps to a disc; no matrix is
  // formed since exp(5 a'(0)) can be far outside a well-conditioned range
  auto image = [&](double t) { return area(g, gen.apply(t, center), std::abs(gen.a(t)) * r); };
  v.area_t1 = image(1.0);
  v.area_t5 = image(5.0);
  v.ratio_t5 = v.area0 > 0.0 ? v.area_t5 / v.area0 : 1.0;
  const double re = gen.kind == FamilyKind::RotationLike ? gen.a_dot0.real() : 0.0;
  v.expected_ratio_t5 = std::exp(2.0 * re * 5.0);
  if (std::abs(re) > kTolAlg) {
    v.pass = false;
    v.reason = std::string(re < 0.0 ? "contracting" : "expanding") + " family: Re(a'(0)) = " + std::to_string(re);
  }
  return v;
}

struct NormalizedGenerator {
  GeneratorData gen;
  double rescale = 1.0;          // normalized time s is original time rescale * s
  Complex rotation{1.0, 0.0};    // R(z) = rotation * z
};

/// Rescales time so the generator has unit size and, for translations,
/// conjugates by R(z) = iz/v so the direction is +i. `rescale` multiplies the
/// original time: the normalized flow at time s is the original at rescale * s.
inline NormalizedGenerator normalize_time(const GeneratorData& gen) {
  NormalizedGenerator out;
  out.gen = gen;
  if (gen.kind == FamilyKind::TranslationLike) {
    const double m = std::abs(gen.b_dot0);
    if (!(m > kTolAlg)) throw ZeroGenerator("b'(0) vanishes for a translation-like family");
    const Complex v = gen.b_dot0 / m;
    out.rescale = 1.0 / m;
    out.rotation = kI / v;
    out.gen.b_dot0 = Complex(0.0, 1.0);
  } else {
    const double w = gen.a_dot0.imag();
    if (!(std::abs(gen.a_dot0) > kTolAlg)) throw ZeroGenerator("a'(0) vanishes");
    if (!(std::abs(w) > kTolAlg)) throw ZeroGenerator("rotation-like family without rotation part");
    out.rescale = 1.0 / w;
    out.gen.a_dot0 = Complex(gen.a_dot0.real() / w, 1.0);
  }
  out.gen.fit_residual = gen.fit_residual;
  return out;
}

struct AdditivityResult {
  double theta_dot0 = 0.0;
  double max_residual = 0.0;
  std::size_t pairs = 0;
};

/// theta(t + s) = theta(t) + theta(s) on all in-range sample pairs; then
/// theta(t) = theta'(0) t.
inline AdditivityResult theta_additivity_check(const std::vector<std::pair<double, double>>& samples,
                                               double tol_group = kTolGroup) {
  AdditivityResult res;
  for (const auto& [t, th] : samples)
    if (t == 0.0 && std::abs(th) > tol_group) throw AdditivityViolation("theta(0) != 0");
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i; j < samples.size(); ++j)
      for (std::size_t k = 0; k < samples.size(); ++k) {
        if (std::abs(samples[i].first + samples[j].first - samples[k].first) > 1e-9) continue;
        if (samples[i].first == 0.0 || samples[j].first == 0.0) continue;
        const double r = std::abs(samples[i].second + samples[j].second - samples[k].second);
        res.max_residual = std::max(res.max_residual, r);
        ++res.pairs;
      }
  if (res.pairs == 0) throw InsufficientSamples("no sample pairs with t_i + t_j = t_k");
  if (res.max_residual > tol_group)
    throw AdditivityViolation("max residual " + std::to_string(res.max_residual));
  double stt = 0.0, sth = 0.0;
  for (const auto& [t, th] : samples) {
    stt += t * t;
    sth += t * th;
  }
  res.theta_dot0 = sth / stt;
  return res;
}

}  // namespace hkvf
