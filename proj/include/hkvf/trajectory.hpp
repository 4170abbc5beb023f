#pragma once

// Flow integration on canonical surfaces with escape detection.
//
// Escapes: reaching a puncture or an open edge in finite time, crossing a
// closed edge, or |z| > 1e6 moving outward. On the sphere the chart swaps to
// w = 1/z (with hysteresis) so flows pass through infinity. Cylinder and torus
// trajectories are tracked in lifted coordinates.

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "hkvf/geometry.hpp"
#include "hkvf/ode.hpp"
#include "hkvf/surfaces.hpp"

namespace hkvf {

enum class Chart { Z, W };

/// Chart radius treated as infinity regardless of the growth rate.
inline constexpr double kOverflowRadius = 1e150;

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double closed_edge_slack = 1e-7;
  double hit_distance = 1e-9;
  double hit_time = 1e-3;  // distance / approach speed below which a hit is imminent
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2000000;
  bool record = false;
};

enum class FlowStatus { NoEscape, Escape, Stalled };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::NoEscape: return "no_escape";
    case FlowStatus::Escape: return "escape";
    case FlowStatus::Stalled: return "stalled";
  }
  return "?";
}

struct FlowPoint {
  double t;
  ExtendedPoint z;
};

struct FlowResult {
  FlowStatus status = FlowStatus::NoEscape;
  double t = 0.0;         // time reached (escape time when status == Escape)
  ExtendedPoint end{};    // lifted coordinates on periodic kinds
  std::string reason;     // puncture | infinity | edge | field | stalled | asymptotic
  std::vector<FlowPoint> samples;
};

namespace detail {

inline ExtendedPoint chart_point(Chart c, const ode::Vec<2>& y) {
  const Complex v{y[0], y[1]};
  if (c == Chart::Z) return ExtendedPoint(v);
  if (std::abs(v) < 1e-300) return ExtendedPoint::infinity();
  return ExtendedPoint(1.0 / v);
}

/// Open edges as boundary curves oriented into the surface.
inline std::vector<BoundaryCurve> open_edges(const CanonicalSurface& S) {
  using T = BoundaryCurve::Type;
  switch (S.kind()) {
    case SurfaceKind::Disc:
    case SurfaceKind::PuncturedDisc: return {{T::Circle, 1.0, -1}};
    case SurfaceKind::Annulus: return {{T::Circle, S.rho(), +1}, {T::Circle, 1.0, -1}};
    case SurfaceKind::SemiClosedAnnulus: return {{T::Circle, S.rho(), +1}};
    case SurfaceKind::HalfPlaneOpen: return {{T::VerticalLine, 0.0, +1}};
    case SurfaceKind::ChannelOpen: return {{T::VerticalLine, 0.0, +1}, {T::VerticalLine, kTwoPi, -1}};
    case SurfaceKind::ChannelSemiClosed: return {{T::VerticalLine, kTwoPi, -1}};
    default: return {};
  }
}

struct Obstacle {
  double distance;
  double approach;  // rate of decrease of distance
  bool puncture;
};

inline std::vector<Obstacle> obstacles(const CanonicalSurface& S, const std::vector<BoundaryCurve>& edges,
                                       Complex z, Complex xv) {
  std::vector<Obstacle> out;
  for (const Complex q : S.punctures()) {
    const Complex d = z - q;
    const double r = std::abs(d);
    out.push_back({r, r > 0.0 ? -(d.real() * xv.real() + d.imag() * xv.imag()) / r : 0.0, true});
  }
  for (const BoundaryCurve& c : edges) {
    const Complex n = c.inward_normal(z);
    out.push_back({c.distance(z), -(n.real() * xv.real() + n.imag() * xv.imag()), false});
  }
  return out;
}

}  // namespace detail

/// Integrates z' = X(z) from `seed` for time T (negative T runs backward).
/// `on_step(const ode::DenseStep<2>&, Chart)` sees every accepted step and may
/// return false to stop early (status NoEscape, t = stop time). Step times are
/// |t|, so the clock runs forward for backward flows too.
template <class OnStep>
FlowResult integrate_flow(const CanonicalSurface& S, const VectorField& X, const ExtendedPoint& seed,
                          double T, const FlowOptions& opt, OnStep&& on_step) {
  const bool sphere = S.kind() == SurfaceKind::RiemannSphere;
  const bool cylinder = S.kind() == SurfaceKind::Cylinder;
  const bool torus = S.kind() == SurfaceKind::Torus;
  const auto edges = detail::open_edges(S);
  const double dir = T >= 0.0 ? 1.0 : -1.0;

  FlowResult res;
  res.end = seed;
  if (!S.contains(seed, opt.closed_edge_slack)) {
    res.status = FlowStatus::Escape;
    res.reason = "edge";
    return res;
  }

  Chart chart = Chart::Z;
  ode::Vec<2> y{};
  if (seed.is_infinity()) {
    chart = Chart::W;
  } else if (sphere && std::abs(seed.value()) > 2.0) {
    chart = Chart::W;
    const Complex w = 1.0 / seed.value();
    y = {w.real(), w.imag()};
  } else {
    y = {seed.value().real(), seed.value().imag()};
  }
  if (opt.record) res.samples.push_back({0.0, seed});

  auto field_w = [&](Complex w) {
    auto f = [&](Complex u) { return -u * u * X.at(1.0 / u); };
    if (std::abs(w) < 1e-12) return 0.5 * (f(w + 1e-9) + f(w - 1e-9));
    return f(w);
  };

  double t = 0.0;
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_steps = opt.max_steps;
  o.max_step = opt.max_step;
  std::size_t steps_used = 0;

  while (dir * (T - t) > 1e-15 * std::max(1.0, std::abs(T))) {
    const Chart cur = chart;
    bool swap = false, escaped = false, crossed = false, user_stop = false, asymptotic = false;
    auto rhs = [&](double, const ode::Vec<2>& s) -> ode::Vec<2> {
      const Complex z{s[0], s[1]};
      const Complex v = cur == Chart::Z ? X.at(z) : field_w(z);
      return {dir * v.real(), dir * v.imag()};
    };
    auto step_limit = [&](double, const ode::Vec<2>& s) {
      if (cur == Chart::W) return std::numeric_limits<double>::infinity();
      const Complex z{s[0], s[1]};
      const Complex xv = dir * X.at(z);
      double lim = std::numeric_limits<double>::infinity();
      for (const auto& ob : detail::obstacles(S, edges, z, xv))
        if (ob.approach > 0.0) lim = std::min(lim, 0.5 * ob.distance / ob.approach);
      return std::max(lim, 1e-13);
    };
    auto observer = [&](const ode::DenseStep<2>& st) {
      if (!on_step(st, cur)) {
        user_stop = true;
        return false;
      }
      const Complex p{st.y1[0], st.y1[1]};
      if (cur == Chart::W) {
        if (std::abs(p) > 2.0) swap = true;
      } else if (sphere) {
        if (std::abs(p) > 2.0) swap = true;
      } else {
        const Complex xv = dir * X.at(p);
        // far field
        if (!torus) {
          const double r = cylinder ? std::abs(p.imag()) : std::abs(p);
          const double outward = cylinder ? p.imag() * xv.imag()
                                          : p.real() * xv.real() + p.imag() * xv.imag();
          // r / (dr/dt) estimates the time left before reaching infinity;
          // exponential growth keeps it bounded below and never escapes
          const double radial = outward / std::max(r, 1e-300);
          const bool blowup = radial > 0.0 && r / radial < opt.hit_time;
          if (r > kFarThreshold && outward > 0.0 && (blowup || r > kOverflowRadius)) {
            escaped = true;
            res.reason = "infinity";
          }
        }
        // imminent hit of a puncture or an open edge
        for (const auto& ob : detail::obstacles(S, edges, p, xv)) {
          if (ob.distance >= opt.hit_distance) continue;
          if (ob.approach > 0.0 && ob.distance < opt.hit_time * ob.approach) {
            escaped = true;
            res.reason = ob.puncture ? "puncture" : "edge";
          } else if (!escaped) {
            // exponential approach to a fixed point on the obstacle: the rest of
            // the orbit stays within hit_distance of it
            asymptotic = true;
          }
        }
        // crossing a closed edge (or overshooting an open one)
        if (!escaped && !asymptotic && !S.contains(ExtendedPoint(p), opt.closed_edge_slack)) {
          double lo = st.t0, hi = st.t1;
          for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            const auto q = st.at(mid);
            (S.contains(ExtendedPoint(Complex{q[0], q[1]})) ? lo : hi) = mid;
          }
          crossed = true;
          res.reason = "edge";
          res.t = dir * lo;
          res.end = ExtendedPoint(Complex{st.at(lo)[0], st.at(lo)[1]});
          return false;
        }
      }
      if (opt.record) res.samples.push_back({dir * st.t1, detail::chart_point(cur, st.y1)});
      return !(swap || escaped || asymptotic);
    };

    // The ODE clock is tau = dir * t, offset so every segment starts at tau = |t|.
    const double tau0 = dir * t;
    ode::Options seg = o;
    seg.max_steps = opt.max_steps > steps_used ? opt.max_steps - steps_used : 1;
    ode::Result<2> r;
    try {
      r = ode::integrate<2>(rhs, tau0, y, dir * T, seg, observer, step_limit);
    } catch (const EvalDomainError&) {
      res.status = FlowStatus::Escape;
      res.reason = "field";
      res.t = t;
      res.end = detail::chart_point(chart, y);
      return res;
    }
    steps_used += r.steps;
    if (crossed) {
      res.status = FlowStatus::Escape;
      return res;
    }
    t = dir * r.t;
    y = r.y;
    res.t = t;
    res.end = detail::chart_point(chart, y);
    if (escaped) {
      res.status = FlowStatus::Escape;
      return res;
    }
    if (user_stop) return res;
    if (asymptotic) {
      res.status = FlowStatus::NoEscape;
      res.reason = "asymptotic";
      res.t = T;
      return res;
    }
    if (r.status == ode::Status::StepLimit || r.status == ode::Status::StepTooSmall) {
      res.status = FlowStatus::Stalled;
      res.reason = "stalled";
      return res;
    }
    if (swap) {
      const Complex v = Complex{y[0], y[1]};
      const Complex w = 1.0 / v;
      y = {w.real(), w.imag()};
      chart = chart == Chart::Z ? Chart::W : Chart::Z;
    }
  }
  res.status = FlowStatus::NoEscape;
  res.t = T;
  return res;
}

inline FlowResult integrate_flow(const CanonicalSurface& S, const VectorField& X, const ExtendedPoint& seed,
                                 double T, const FlowOptions& opt = {}) {
  return integrate_flow(S, X, seed, T, opt, [](const ode::DenseStep<2>&, Chart) { return true; });
}

/// X_t(z); throws DomainEscape when the trajectory does not survive to t.
inline ExtendedPoint flow_map(const CanonicalSurface& S, const VectorField& X, const ExtendedPoint& z,
                              double t, const FlowOptions& opt = {}) {
  FlowOptions o = opt;
  o.record = false;
  const FlowResult r = integrate_flow(S, X, z, t, o);
  if (r.status != FlowStatus::NoEscape)
    throw DomainEscape("flow from " + z.to_string() + " stopped at t=" + std::to_string(r.t) + " (" +
                       r.reason + ")");
  return r.end;
}

}  // namespace hkvf
