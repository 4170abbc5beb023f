#pragma once

// The four axioms of a hydrodynamic Killing vector field, checked numerically:
// Killing equation on a grid, X not identically zero, slip on the boundary,
// completeness of X and of its restriction to the boundary (horizon-limited).
// Also detects periodic orbits with a Poincare section.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hkvf/geometry.hpp"
#include "hkvf/ode.hpp"
#include "hkvf/surfaces.hpp"
#include "hkvf/trajectory.hpp"

namespace hkvf {

struct VerifyOptions {
  int grid_n = 41;
  double tol_killing = 1e-6;
  double tol_slip = 1e-8;
  double tol_zero = 1e-10;
  double tol_return = 1e-7;
  double horizon = 50.0;
  int slip_samples = 64;
  std::vector<ExtendedPoint> seeds;  // empty selects default_seeds()
  bool check_complete = true;
  bool check_periodic = true;
  FlowOptions flow{};
};

enum class CheckStatus { Pass, Fail, NotApplicable };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not_applicable";
  }
  return "?";
}

struct KillingCheck {
  CheckStatus status = CheckStatus::Pass;
  double max_residual = 0.0;
  Complex worst_point{};
  std::size_t points = 0;
};

struct NonzeroCheck {
  CheckStatus status = CheckStatus::Fail;
  std::optional<Complex> witness;
  double witness_norm = 0.0;
  std::string warning;
};

struct SlipCheck {
  CheckStatus status = CheckStatus::NotApplicable;
  Complex worst_point{};
  double product = 0.0;
  std::size_t samples = 0;
};

enum class Completeness { NoEscapeWithinHorizon, Escape, NotChecked, Inconclusive, NotApplicable };

inline const char* to_string(Completeness c) {
  switch (c) {
    case Completeness::NoEscapeWithinHorizon: return "no_escape_within_horizon";
    case Completeness::Escape: return "escape";
    case Completeness::NotChecked: return "not_checked";
    case Completeness::Inconclusive: return "inconclusive";
    case Completeness::NotApplicable: return "not_applicable";
  }
  return "?";
}

struct CompletenessCheck {
  Completeness verdict = Completeness::NotChecked;
  double horizon = 0.0;
  std::size_t seeds = 0;
  // escape details
  ExtendedPoint seed{};
  ExtendedPoint point{};
  double time = 0.0;
  std::string reason;
};

struct PeriodicCheck {
  bool checked = false;
  bool found = false;
  ExtendedPoint point{};
  double period = 0.0;
  double horizon = 0.0;
};

struct HkvfReport {
  KillingCheck killing;
  NonzeroCheck nonzero;
  SlipCheck slip;
  CompletenessCheck complete;
  CompletenessCheck boundary_complete;
  PeriodicCheck periodic;
  std::vector<std::string> notes;

  bool failed() const {
    return killing.status == CheckStatus::Fail || nonzero.status == CheckStatus::Fail ||
           slip.status == CheckStatus::Fail || complete.verdict == Completeness::Escape ||
           boundary_complete.verdict == Completeness::Escape;
  }

  bool is_hkvf() const {
    auto ok = [](Completeness c, bool allow_na) {
      return c == Completeness::NoEscapeWithinHorizon || (allow_na && c == Completeness::NotApplicable);
    };
    return !failed() && ok(complete.verdict, false) && ok(boundary_complete.verdict, true);
  }

  /// 0 pass, 2 fail, 3 inconclusive.
  int exit_code() const {
    if (failed()) return 2;
    return is_hkvf() ? 0 : 3;
  }

  const char* verdict() const {
    switch (exit_code()) {
      case 0: return "pass";
      case 2: return "fail";
      default: return "inconclusive";
    }
  }
};

// ---------------------------------------------------------------------------

inline KillingCheck verify_killing(const ConformalMetric& g, const VectorField& X, const std::vector<Complex>& grid,
                                   double tol = 1e-6) {
  KillingCheck k;
  for (const Complex& p : grid) {
    const double r = killing_residual(g, X, p).frobenius();
    if (k.points++ == 0 || r > k.max_residual) {
      k.max_residual = r;
      k.worst_point = p;
    }
  }
  k.status = k.max_residual < tol ? CheckStatus::Pass : CheckStatus::Fail;
  return k;
}

inline NonzeroCheck verify_nonzero(const VectorField& X, const std::vector<Complex>& grid, double tol = 1e-10) {
  NonzeroCheck n;
  for (const Complex& p : grid) {
    const double m = std::abs(X.at(p));
    if (m > tol) {
      n.status = CheckStatus::Pass;
      n.witness = p;
      n.witness_norm = m;
      return n;
    }
  }
  n.status = CheckStatus::Fail;
  n.warning = "X vanished at all " + std::to_string(grid.size()) +
              " grid points; a sparse grid cannot certify X == 0";
  return n;
}

/// Points along each boundary component: circles at equal angles, lines over
/// the chart's vertical extent.
inline std::vector<Complex> boundary_samples(const CanonicalSurface& S, const BoundaryCurve& c, int n) {
  std::vector<Complex> pts;
  const auto box = S.bounding_box();
  for (int i = 0; i < n; ++i) {
    if (c.type == BoundaryCurve::Type::Circle)
      pts.push_back(c.point(kTwoPi * i / n));
    else
      pts.push_back(c.point(box[2] + (box[3] - box[2]) * i / (n - 1)));
  }
  return pts;
}

inline SlipCheck verify_slip(const ConformalMetric& g, const VectorField& X, int samples = 64, double tol = 1e-8) {
  SlipCheck s;
  const auto comps = g.surface().boundary_components();
  if (comps.empty()) return s;
  for (const BoundaryCurve& c : comps)
    for (const Complex& q : boundary_samples(g.surface(), c, samples)) {
      const double p = slip_product(g, X, q);
      if (s.samples == 0 || std::abs(p) > std::abs(s.product)) {
        s.product = p;
        s.worst_point = q;
      }
      ++s.samples;
    }
  s.status = std::abs(s.product) < tol ? CheckStatus::Pass : CheckStatus::Fail;
  return s;
}

/// Deterministic interior seeds: up to `count` points of a coarse grid, kept
/// away from edges and punctures.
inline std::vector<ExtendedPoint> default_seeds(const CanonicalSurface& S, std::size_t count = 6) {
  std::vector<Complex> cand;
  for (const Complex& z : surface_grid(S, 9))
    if (S.contains_interior(z, 0.05)) cand.push_back(z);
  std::vector<ExtendedPoint> seeds;
  if (cand.empty()) return seeds;
  const std::size_t stride = std::max<std::size_t>(1, cand.size() / count);
  for (std::size_t i = stride / 2; i < cand.size() && seeds.size() < count; i += stride)
    seeds.emplace_back(cand[i]);
  return seeds;
}

inline CompletenessCheck verify_complete(const CanonicalSurface& S, const VectorField& X,
                                         const std::vector<ExtendedPoint>& seeds, double T,
                                         const FlowOptions& opt = {}) {
  CompletenessCheck c;
  c.horizon = T;
  c.seeds = seeds.size();
  bool stalled = false;
  for (const ExtendedPoint& seed : seeds)
    for (const double dir : {1.0, -1.0}) {
      const FlowResult r = integrate_flow(S, X, seed, dir * T, opt);
      if (r.status == FlowStatus::Escape) {
        c.verdict = Completeness::Escape;
        c.seed = seed;
        c.point = r.end;
        c.time = r.t;
        c.reason = r.reason;
        return c;
      }
      if (r.status == FlowStatus::Stalled && !stalled) {
        stalled = true;
        c.seed = seed;
        c.time = r.t;
        c.reason = "integrator stalled";
      }
    }
  c.verdict = seeds.empty() ? Completeness::NotChecked
              : stalled     ? Completeness::Inconclusive
                            : Completeness::NoEscapeWithinHorizon;
  return c;
}

/// Completeness of the tangential restriction of X to each boundary component.
inline CompletenessCheck verify_boundary_complete(const CanonicalSurface& S, const VectorField& X, double T,
                                                  int seeds_per_component = 4) {
  CompletenessCheck c;
  c.horizon = T;
  const auto comps = S.boundary_components();
  if (comps.empty()) {
    c.verdict = Completeness::NotApplicable;
    return c;
  }
  ode::Options o;
  o.rtol = o.atol = 1e-10;
  for (const BoundaryCurve& bc : comps) {
    const auto pts = boundary_samples(S, bc, seeds_per_component + (bc.type == BoundaryCurve::Type::Circle ? 0 : 1));
    for (const Complex& q : pts) {
      ++c.seeds;
      // Circle: parameter is the angle. Line: parameter is Im(z).
      const bool circle = bc.type == BoundaryCurve::Type::Circle;
      const double s0 = circle ? std::arg(q) : q.imag();
      for (const double dir : {1.0, -1.0}) {
        bool escaped = false;
        double t_esc = 0.0, s_esc = 0.0;
        auto rhs = [&](double, const ode::Vec<1>& s) -> ode::Vec<1> {
          const Complex z = bc.point(s[0]);
          const Complex tau = bc.tangent(z);
          const Complex xv = X.at(z);
          const double along = xv.real() * tau.real() + xv.imag() * tau.imag();
          return {dir * (circle ? along / bc.level : along)};
        };
        auto obs = [&](const ode::DenseStep<1>& st) {
          if (!circle && std::abs(st.y1[0]) > kFarThreshold) {
            escaped = true;
            t_esc = dir * st.t1;
            s_esc = st.y1[0];
            return false;
          }
          return true;
        };
        ode::Result<1> r;
        try {
          r = ode::integrate<1>(rhs, 0.0, {s0}, T, o, obs);
        } catch (const EvalDomainError&) {
          escaped = true;
          t_esc = dir * r.t;
        }
        if (escaped) {
          c.verdict = Completeness::Escape;
          c.seed = ExtendedPoint(q);
          c.point = ExtendedPoint(bc.point(s_esc));
          c.time = t_esc;
          c.reason = "boundary flow left every bounded set";
          return c;
        }
        if (r.status != ode::Status::Completed && r.status != ode::Status::Stopped) {
          c.verdict = Completeness::Inconclusive;
          c.seed = ExtendedPoint(q);
          c.reason = "integrator stalled";
          return c;
        }
      }
    }
  }
  c.verdict = Completeness::NoEscapeWithinHorizon;
  return c;
}

/// First return to the seed through the section <z - p, X(p)> = 0, crossed
/// from negative to positive, within |z - p| < tol_return.
inline PeriodicCheck detect_periodic(const CanonicalSurface& S, const VectorField& X,
                                     const std::vector<ExtendedPoint>& seeds, double T, double tol_return = 1e-7,
                                     const FlowOptions& opt = {}) {
  PeriodicCheck pc;
  pc.checked = true;
  pc.horizon = T;
  for (const ExtendedPoint& seed : seeds) {
    if (seed.is_infinity()) continue;
    const Complex p = seed.value();
    const Complex xp = X.at(p);
    if (std::abs(xp) < 1e-12) continue;
    auto section = [&](const ode::Vec<2>& y, Chart ch) -> std::optional<std::pair<double, double>> {
      const ExtendedPoint q = detail::chart_point(ch, y);
      if (q.is_infinity()) return std::nullopt;
      const Complex d = S.difference(q.value(), p);
      return std::make_pair(d.real() * xp.real() + d.imag() * xp.imag(), std::abs(d));
    };
    double found_t = -1.0;
    double far = 0.0;  // largest distance from p reached so far
    auto on_step = [&](const ode::DenseStep<2>& st, Chart ch) {
      const auto s0 = section(st.y0, ch), s1 = section(st.y1, ch);
      // Rounding can put the seed itself just behind the section; ignore
      // crossings before the orbit has left the return neighbourhood.
      if (s0) far = std::max(far, s0->second);
      if (far < 100.0 * tol_return) return true;
      if (!s0 || !s1 || !(s0->first < 0.0 && s1->first >= 0.0)) return true;
      double lo = st.t0, hi = st.t1;
      for (int i = 0; i < 100 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto sm = section(st.at(mid), ch);
        if (!sm) return true;
        (sm->first < 0.0 ? lo : hi) = mid;
      }
      const auto sh = section(st.at(hi), ch);
      if (sh && sh->second < tol_return) {
        found_t = hi;
        return false;
      }
      return true;
    };
    // Short steps so a step never spans a whole period.
    FlowOptions o = opt;
    o.max_step = std::min(opt.max_step, 0.05);
    (void)integrate_flow(S, X, seed, T, o, on_step);
    if (found_t > 0.0) {
      pc.found = true;
      pc.point = seed;
      pc.period = found_t;
      return pc;
    }
  }
  return pc;
}

/// Full check with the given options.
inline HkvfReport verify(const ConformalMetric& g, const VectorField& X, const VerifyOptions& opt = {}) {
  const CanonicalSurface& S = g.surface();
  HkvfReport rep;
  const auto grid = surface_grid(S, opt.grid_n);
  g.check_positive(grid);
  if (g.lambda_expr().uses_abs() || X.uses_abs())
    rep.notes.push_back("abs/sign in an expression: derivatives use sign(0) = 0");
  rep.killing = verify_killing(g, X, grid, opt.tol_killing);
  rep.nonzero = verify_nonzero(X, grid, opt.tol_zero);
  rep.slip = verify_slip(g, X, opt.slip_samples, opt.tol_slip);
  const auto seeds = opt.seeds.empty() ? default_seeds(S) : opt.seeds;
  if (opt.check_complete) {
    rep.complete = verify_complete(S, X, seeds, opt.horizon, opt.flow);
    rep.boundary_complete = verify_boundary_complete(S, X, opt.horizon);
  } else {
    rep.complete.verdict = Completeness::NotChecked;
    rep.boundary_complete.verdict =
        S.has_boundary() ? Completeness::NotChecked : Completeness::NotApplicable;
  }
  if (opt.check_periodic) rep.periodic = detect_periodic(S, X, seeds, opt.horizon, opt.tol_return, opt.flow);
  return rep;
}

}  // namespace hkvf
