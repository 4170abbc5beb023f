#pragma once

// JSON and text rendering of library results. Key order is fixed so repeated
// runs give byte-identical output.

#include <ostream>
#include <string>

#include <json.hpp>

#include "hkvf/classify.hpp"
#include "hkvf/collar.hpp"
#include "hkvf/mobius.hpp"
#include "hkvf/trajectory.hpp"
#include "hkvf/verify.hpp"

namespace hkvf::report {

using Json = nlohmann::ordered_json;

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ExtendedPoint& p) { return p.is_infinity() ? Json("inf") : to_json(p.value()); }

inline Json to_json(const MobiusTransform& m) {
  Json a = Json::array();
  for (double r : m.to_reals()) a.push_back(r);
  return a;
}

inline Json to_json(const CanonicalSurface& s) {
  Json j;
  j["kind"] = to_string(s.kind());
  if (has_rho(s.kind())) j["rho"] = s.rho();
  if (s.kind() == SurfaceKind::Torus) {
    j["pi1"] = to_json(s.lattice().pi1);
    j["pi2"] = to_json(s.lattice().pi2);
  }
  return j;
}

inline Json to_json(const MapChain& c) {
  Json a = Json::array();
  for (const Atom& at : c.atoms()) a.push_back(at.to_string());
  return a;
}

inline Json to_json(const MobiusClass& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["trace"] = to_json(c.trace);
  Json fp = Json::array();
  for (const auto& p : c.fixed_points) fp.push_back(to_json(p));
  j["fixed_points"] = fp;
  return j;
}

inline Json to_json(const CompletenessCheck& c) {
  Json j;
  j["verdict"] = to_string(c.verdict);
  j["horizon"] = c.horizon;
  j["seeds"] = c.seeds;
  if (c.verdict == Completeness::Escape) {
    j["seed"] = to_json(c.seed);
    j["point"] = to_json(c.point);
    j["time"] = c.time;
    j["reason"] = c.reason;
  } else if (!c.reason.empty()) {
    j["reason"] = c.reason;
  }
  return j;
}

inline Json to_json(const HkvfReport& r) {
  Json j;
  j["verdict"] = r.verdict();
  j["exit_code"] = r.exit_code();
  Json k;
  k["status"] = to_string(r.killing.status);
  k["max_residual"] = r.killing.max_residual;
  k["worst_point"] = to_json(r.killing.worst_point);
  k["points"] = r.killing.points;
  j["killing"] = k;
  Json n;
  n["status"] = to_string(r.nonzero.status);
  n["witness"] = r.nonzero.witness ? to_json(*r.nonzero.witness) : Json(nullptr);
  n["witness_norm"] = r.nonzero.witness_norm;
  if (!r.nonzero.warning.empty()) n["warning"] = r.nonzero.warning;
  j["nonzero"] = n;
  Json s;
  s["status"] = to_string(r.slip.status);
  s["product"] = r.slip.product;
  s["worst_point"] = to_json(r.slip.worst_point);
  s["samples"] = r.slip.samples;
  j["slip"] = s;
  j["complete"] = to_json(r.complete);
  j["boundary_complete"] = to_json(r.boundary_complete);
  Json p;
  p["checked"] = r.periodic.checked;
  p["found"] = r.periodic.found;
  if (r.periodic.found) {
    p["point"] = to_json(r.periodic.point);
    p["period"] = r.periodic.period;
  }
  p["horizon"] = r.periodic.horizon;
  j["periodic"] = p;
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const ClassificationResult& r) {
  Json j;
  j["source"] = to_json(r.source);
  j["target"] = to_json(r.target);
  j["chain"] = to_json(r.chain);
  j["normal_form"] = to_string(r.normal_form);
  j["model_kind"] = to_string(r.model_kind);
  j["time_scale"] = r.time_scale;
  if (r.target.kind() == SurfaceKind::Cylinder) j["period"] = to_json(r.period);
  j["generator"] = Json::array({to_json(r.generator[0]), to_json(r.generator[1]), to_json(r.generator[2])});
  Json fit;
  fit["family"] = to_string(r.fit.kind);
  fit["a_dot0"] = to_json(r.fit.a_dot0);
  fit["b_dot0"] = to_json(r.fit.b_dot0);
  fit["fit_residual"] = r.fit.fit_residual;
  fit["group_residual"] = r.fit.group_residual;
  j["fit"] = fit;
  j["periodic_branch"] = r.periodic_branch;
  j["horizon"] = r.horizon;
  Json res;
  res["pushed_flow"] = r.pushed_flow_residual;
  res["symmetry"] = r.symmetry_residual;
  res["generator_samples"] = r.sample_residual;
  res["conditioning"] = r.conditioning;
  res["grid_points"] = r.grid_points;
  j["residuals"] = res;
  Json prof = Json::array();
  for (const auto& [x, l] : r.lambda_profile) prof.push_back(Json::array({x, l}));
  j["lambda_profile"] = prof;
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const CollarChart& c) {
  Json j;
  j["base"] = to_json(c.base);
  j["component"] = c.component.to_string();
  j["eps"] = c.eps;
  j["strip"] = c.strip;
  j["conformality_residual"] = c.conformality_residual;
  j["orthogonality"] = c.orthogonality;
  Json f = Json::array();
  for (const auto& [t, v] : c.f_table) f.push_back(Json::array({t, v}));
  j["f"] = f;
  Json s = Json::array();
  for (const CollarSample& q : c.samples) {
    Json e;
    e["x"] = q.x;
    e["y"] = q.y;
    e["point"] = to_json(q.point);
    e["mu"] = q.mu;
    s.push_back(e);
  }
  j["samples"] = s;
  return j;
}

inline Json to_json(const FlowResult& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["t"] = r.t;
  j["end"] = to_json(r.end);
  j["reason"] = r.reason;
  return j;
}

/// Trajectory table with columns t,x,y,lambda,speed_g. Samples at infinity are skipped.
inline void write_flow_csv(std::ostream& os, const ConformalMetric& g, const VectorField& X,
                           const std::vector<FlowPoint>& samples) {
  os << "t,x,y,lambda,speed_g\n";
  char buf[160];
  for (const FlowPoint& p : samples) {
    if (p.z.is_infinity()) continue;
    const Complex z = p.z.value();
    const double lam = g.lambda(z);
    const double speed = lam * std::abs(X(z));
    std::snprintf(buf, sizeof buf, "%.10g,%.15g,%.15g,%.15g,%.15g\n", p.t, z.real(), z.imag(), lam, speed);
    os << buf;
  }
}

inline std::string check_line(const char* name, const char* status, const std::string& detail) {
  std::string s = std::string(name) + ": " + status;
  if (!detail.empty()) s += " (" + detail + ")";
  return s;
}

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline void write_text(std::ostream& os, const HkvfReport& r) {
  os << check_line("killing", to_string(r.killing.status), "max residual " + fmt(r.killing.max_residual)) << "\n";
  os << check_line("nonzero", to_string(r.nonzero.status),
                   r.nonzero.witness ? "witness " + ExtendedPoint(*r.nonzero.witness).to_string() : "")
     << "\n";
  os << check_line("slip", to_string(r.slip.status),
                   r.slip.samples ? "max |g(X,n)| " + fmt(r.slip.product) : "")
     << "\n";
  auto comp = [&](const char* name, const CompletenessCheck& c) {
    std::string d;
    if (c.verdict == Completeness::Escape)
      d = "seed " + c.seed.to_string() + " escapes at t=" + fmt(c.time) + " via " + c.reason;
    else if (c.verdict == Completeness::NoEscapeWithinHorizon)
      d = "horizon " + fmt(c.horizon) + ", " + std::to_string(c.seeds) + " seeds";
    os << check_line(name, to_string(c.verdict), d) << "\n";
  };
  comp("complete", r.complete);
  comp("boundary_complete", r.boundary_complete);
  if (r.periodic.checked)
    os << check_line("periodic", r.periodic.found ? "found" : "none",
                     r.periodic.found ? "period " + fmt(r.periodic.period) : "")
       << "\n";
  for (const auto& n : r.notes) os << "note: " << n << "\n";
  os << "verdict: " << r.verdict() << "\n";
}

inline void write_text(std::ostream& os, const ClassificationResult& r) {
  os << "source: " << r.source.name() << "\n";
  os << "target: " << r.target.name() << "\n";
  os << "normal form: " << to_string(r.normal_form) << " (model " << to_string(r.model_kind) << ")\n";
  os << "chain: " << r.chain.to_string() << "\n";
  os << "time scale: " << fmt(r.time_scale) << "\n";
  os << "pushed flow residual: " << fmt(r.pushed_flow_residual) << "\n";
  os << "symmetry residual: " << fmt(r.symmetry_residual) << "\n";
  os << "periodic branch: " << (r.periodic_branch ? "yes" : "no") << "\n";
  for (const auto& n : r.notes) os << "note: " << n << "\n";
}

}  // namespace hkvf::report
