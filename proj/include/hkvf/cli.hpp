#pragma once

// Command-line front end. run() never calls exit(); it returns the process
// status: 0 pass, 1 usage/config/syntax error, 2 failure, 3 inconclusive.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hkvf/classify.hpp"
#include "hkvf/collar.hpp"
#include "hkvf/config.hpp"
#include "hkvf/report.hpp"

namespace hkvf::cli {

namespace detail {

/// Splits at commas outside parentheses.
inline std::vector<std::string> split_top(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  out.push_back(cur);
  for (auto& t : out) {
    const auto b = t.find_first_not_of(" \t");
    const auto e = t.find_last_not_of(" \t");
    t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(d)) throw CLI::ValidationError(what, "bad number '" + s + "'");
  return d;
}

/// "x,y" or "inf".
inline ExtendedPoint parse_point(const std::string& s, const std::string& what) {
  if (s == "inf" || s == "infinity") return ExtendedPoint::infinity();
  const auto parts = split_top(s);
  if (parts.size() != 2) throw CLI::ValidationError(what, "expected x,y but got '" + s + "'");
  return Complex{to_double(parts[0], what), to_double(parts[1], what)};
}

inline Complex finite_point(const std::string& s, const std::string& what) {
  const ExtendedPoint p = parse_point(s, what);
  if (p.is_infinity()) throw CLI::ValidationError(what, "point must be finite");
  return p.value();
}

class Emitter {
 public:
  Emitter(std::ostream& out, bool json) : out_(out), json_(json) {}
  bool json() const { return json_; }
  void emit(const report::Json& j, const std::string& path = "") {
    const std::string text = j.dump(2) + "\n";
    if (json_) out_ << text;
    if (!path.empty()) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw ConfigError(0, 0, "cannot write " + path);
      f << text;
    }
  }

 private:
  std::ostream& out_;
  bool json_;
};

}  // namespace detail

/// Parses "fp_inv,fh,scale(re,im),mobius(8 reals)".
inline MapChain parse_chain(std::string_view text) {
  std::vector<Atom> atoms;
  for (const std::string& tok : detail::split_top(text)) {
    if (tok.empty()) throw SyntaxError(0, "an atom name in the chain");
    const auto open = tok.find('(');
    const std::string name = tok.substr(0, open);
    const auto kind = atom_kind_from_string(name);
    if (!kind) throw UnknownIdentifier(0, name);
    std::vector<double> args;
    if (open != std::string::npos) {
      if (tok.back() != ')') throw SyntaxError(open, "')' closing '" + tok + "'");
      for (const std::string& a : detail::split_top(tok.substr(open + 1, tok.size() - open - 2)))
        args.push_back(detail::to_double(a, "--chain"));
    }
    auto complex_arg = [&]() -> Complex {
      if (args.size() == 1) return {args[0], 0.0};
      if (args.size() == 2) return {args[0], args[1]};
      throw SyntaxError(0, "(re) or (re,im) after " + name);
    };
    switch (*kind) {
      case AtomKind::Mobius: {
        if (args.size() != 8) throw SyntaxError(0, "8 reals after mobius");
        std::array<double, 8> r{};
        std::copy(args.begin(), args.end(), r.begin());
        atoms.push_back(Atom::from_mobius(MobiusTransform::from_reals(r)));
        break;
      }
      case AtomKind::Fc:
      case AtomKind::FcInv: {
        Atom a = Atom::fc(complex_arg());
        a.kind = *kind;
        atoms.push_back(a);
        break;
      }
      case AtomKind::Scale: atoms.push_back(Atom::scale(complex_arg())); break;
      case AtomKind::Shift: atoms.push_back(Atom::shift(complex_arg())); break;
      default:
        if (!args.empty()) throw SyntaxError(0, "no arguments after " + name);
        atoms.push_back(Atom::make(*kind));
    }
  }
  return MapChain(std::move(atoms));
}

/// Flags shared by the job-based subcommands; set values override the config.
struct JobFlags {
  std::string config;
  std::string surface;
  std::optional<double> rho;
  std::string pi1, pi2;
  std::string lambda;
  std::string field;
  std::string tag;
  std::vector<std::string> seeds;
  std::optional<double> horizon;
  std::optional<double> grid;
  std::optional<double> tol_killing, tol_slip, tol_zero, tol_return;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "TOML job file");
    app->add_option("--surface", surface, "canonical surface kind");
    app->add_option("--rho", rho, "inner radius for annular kinds");
    app->add_option("--pi1", pi1, "torus period x,y");
    app->add_option("--pi2", pi2, "torus period x,y");
    app->add_option("--lambda", lambda, "conformal factor expression");
    app->add_option("--field", field, "vector field \"u,v\"");
    app->add_option("--tag", tag, "rotational | translational");
    app->add_option("--seed", seeds, "seed point x,y (repeatable)");
    app->add_option("--horizon", horizon, "integration horizon");
    app->add_option("--grid", grid, "grid size per axis");
    app->add_option("--tol-killing", tol_killing);
    app->add_option("--tol-slip", tol_slip);
    app->add_option("--tol-zero", tol_zero);
    app->add_option("--tol-return", tol_return);
  }

  /// Merged document: config file first, then flags.
  config::JobConfig job(bool flow_mode) const {
    config::Document doc;
    if (!config.empty()) doc = config::parse_file(config);
    auto put = [&](const std::string& key, config::Value v) {
      const auto sec = key.substr(0, key.find('.'));
      if (!doc.sections.count(sec)) doc.sections[sec] = {0, 0};
      doc.entries[key] = std::move(v);
    };
    auto str = [](std::string s) { return config::Value{std::move(s)}; };
    auto num = [](double d) { return config::Value{d}; };
    auto pt = [&](const std::string& s, const char* what) {
      const Complex z = detail::finite_point(s, what);
      return config::Value{config::Array{num(z.real()), num(z.imag())}};
    };
    if (!surface.empty()) {
      // a new kind invalidates parameters of the old one
      for (const char* k : {"surface.rho", "surface.pi1", "surface.pi2"}) doc.entries.erase(k);
      put("surface.kind", str(surface));
    }
    if (rho) put("surface.rho", num(*rho));
    if (!pi1.empty()) put("surface.pi1", pt(pi1, "--pi1"));
    if (!pi2.empty()) put("surface.pi2", pt(pi2, "--pi2"));
    if (!lambda.empty()) put("metric.lambda", str(lambda));
    if (!field.empty()) {
      const auto uv = detail::split_top(field);
      if (uv.size() != 2) throw CLI::ValidationError("--field", "expected \"u,v\"");
      doc.entries.erase("field.tag");
      put("field.u", str(uv[0]));
      put("field.v", str(uv[1]));
    }
    if (!tag.empty()) {
      doc.entries.erase("field.u");
      doc.entries.erase("field.v");
      put("field.tag", str(tag));
    }
    if (!seeds.empty()) {
      if (flow_mode) {
        put("flow.seed", pt(seeds.front(), "--seed"));
      } else {
        config::Array arr;
        for (const auto& s : seeds) arr.push_back(pt(s, "--seed"));
        put("checks.seeds", config::Value{std::move(arr)});
      }
    }
    if (horizon) put(flow_mode ? "flow.horizon" : "checks.horizon", num(*horizon));
    if (grid) put("checks.grid", num(*grid));
    if (tol_killing) put("tolerances.killing", num(*tol_killing));
    if (tol_slip) put("tolerances.slip", num(*tol_slip));
    if (tol_zero) put("tolerances.zero", num(*tol_zero));
    if (tol_return) put("tolerances.return", num(*tol_return));
    return config::to_job(doc);
  }
};

namespace detail {

inline int cmd_verify(const JobFlags& flags, Emitter& em, std::ostream& out) {
  const config::JobConfig job = flags.job(false);
  const ConformalMetric g = job.metric();
  const VectorField X = job.field();
  HkvfReport rep = verify(g, X, job.verify);
  report::Json j;
  j["surface"] = report::to_json(job.surface);
  j["lambda"] = g.lambda_expr().to_string();
  j["field"] = report::Json::array({X.u().to_string(), X.v().to_string()});
  j["report"] = report::to_json(rep);
  em.emit(j, job.json_path);
  if (!em.json()) report::write_text(out, rep);
  return rep.exit_code();
}

inline int cmd_classify(const JobFlags& flags, bool coords, Emitter& em, std::ostream& out) {
  const config::JobConfig job = flags.job(false);
  const ConformalMetric g = job.metric();
  const VectorField X = job.field();
  const HkvfReport rep = verify(g, X, job.verify);
  if (!rep.is_hkvf()) {
    if (!em.json()) report::write_text(out, rep);
    else em.emit(report::Json{{"report", report::to_json(rep)}});
    return rep.exit_code();
  }
  const ClassificationResult res = classify_flow(g, X, rep);
  report::Json j = report::to_json(res);
  std::optional<CanonicalCoordinates> cc;
  if (coords) {
    cc = canonical_coordinates(res, g, X);
    report::Json c;
    c["chain"] = report::to_json(cc->chain);
    c["range"] = report::Json::array({cc->lo, cc->hi});
    c["max_residual"] = cc->max_residual;
    report::Json prof = report::Json::array();
    for (const auto& p : cc->profile) prof.push_back(report::Json::array({p.x1, p.lambda, p.x_norm}));
    c["profile"] = prof;
    j["canonical_coordinates"] = c;
  }
  em.emit(j, job.json_path);
  if (!em.json()) {
    report::write_text(out, res);
    if (cc)
      out << "canonical coordinates: " << cc->chain.to_string() << ", max residual "
          << report::fmt(cc->max_residual) << "\n";
  }
  return 0;
}

inline int cmd_flow(const JobFlags& flags, double dt, const std::string& csv_flag, Emitter& em, std::ostream& out,
                    std::ostream& err) {
  const config::JobConfig job = flags.job(true);
  if (!job.flow_seed) throw CLI::ValidationError("--seed", "flow needs a seed");
  const double step = dt > 0.0 ? dt : job.flow_dt;
  const ConformalMetric g = job.metric();
  const VectorField X = job.field();
  const CanonicalSurface& S = g.surface();
  const double T = job.flow_horizon;

  std::vector<FlowPoint> samples{{0.0, ExtendedPoint(*job.flow_seed)}};
  std::size_t next = 1;
  FlowOptions fo = job.verify.flow;
  const FlowResult r = integrate_flow(S, X, *job.flow_seed, T, fo, [&](const ode::DenseStep<2>& st, Chart c) {
    while (next * step <= st.t1 + 1e-12 * std::max(1.0, T)) {
      const double tk = std::min(next * step, st.t1);
      samples.push_back({tk, hkvf::detail::chart_point(c, st.at(tk))});
      ++next;
    }
    return true;
  });
  // drop samples past the stopping time (edge crossings are bisected inside a step)
  const double stop = r.status == FlowStatus::NoEscape ? T : r.t;
  while (samples.size() > 1 && samples.back().t > stop + 1e-12) samples.pop_back();
  if (r.status == FlowStatus::Escape) samples.push_back({r.t, r.end});

  const std::string csv = csv_flag.empty() ? job.csv_path : csv_flag;
  if (!csv.empty()) {
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw ConfigError(0, 0, "cannot write " + csv);
    report::write_flow_csv(f, g, X, samples);
  }
  report::Json j = report::to_json(r);
  j["seed"] = report::to_json(*job.flow_seed);
  j["horizon"] = T;
  j["samples"] = samples.size();
  em.emit(j, job.json_path);
  if (!em.json()) {
    if (csv.empty()) report::write_flow_csv(out, g, X, samples);
    char buf[160];
    if (r.status == FlowStatus::Escape)
      std::snprintf(buf, sizeof buf, "escape at t=%.6f (%s)", r.t, r.reason.c_str());
    else if (r.status == FlowStatus::Stalled)
      std::snprintf(buf, sizeof buf, "stalled at t=%.6f", r.t);
    else
      std::snprintf(buf, sizeof buf, "no escape within t=%.6g", T);
    (csv.empty() ? err : out) << buf << "\n";
  }
  switch (r.status) {
    case FlowStatus::NoEscape: return 0;
    case FlowStatus::Escape: return 2;
    default: return 3;
  }
}

inline int cmd_collar(const JobFlags& flags, const std::string& point, std::optional<double> eps, Emitter& em,
                      std::ostream& out) {
  const config::JobConfig job = flags.job(false);
  std::optional<Complex> p = job.collar_point;
  if (!point.empty()) p = finite_point(point, "--point");
  if (!p) throw CLI::ValidationError("--point", "collar needs a boundary point");
  const ConformalMetric g = job.metric();
  const VectorField X = job.field();
  const CollarChart c = collar_extend(g, X, *p, eps ? *eps : job.collar_eps);
  em.emit(report::to_json(c), job.json_path);
  if (!em.json()) {
    out << "component: " << c.component.to_string() << "\n";
    out << "eps: " << report::fmt(c.eps) << ", strip: " << report::fmt(c.strip) << "\n";
    out << "conformality residual: " << report::fmt(c.conformality_residual) << "\n";
    out << "orthogonality: " << report::fmt(c.orthogonality) << "\n";
  }
  return 0;
}

inline int cmd_mobius(const std::vector<double>& matrix, const std::vector<std::string>& points,
                      const std::vector<std::string>& images, Emitter& em, std::ostream& out) {
  MobiusTransform f;
  if (!matrix.empty()) {
    std::array<double, 8> r{};
    std::copy(matrix.begin(), matrix.end(), r.begin());
    f = MobiusTransform::from_reals(r);
  } else {
    if (points.size() != 3 || images.size() != 3)
      throw CLI::ValidationError("mobius", "give --matrix or both --points and --images");
    f = from_three_points(parse_point(points[0], "--points"), parse_point(points[1], "--points"),
                          parse_point(points[2], "--points"), parse_point(images[0], "--images"),
                          parse_point(images[1], "--images"), parse_point(images[2], "--images"));
  }
  const MobiusClass c = classify(f);
  report::Json j;
  j["transform"] = report::to_json(f);
  const report::Json cj = report::to_json(c);
  for (auto it = cj.begin(); it != cj.end(); ++it) j[it.key()] = it.value();
  em.emit(j);
  if (!em.json()) {
    out << to_string(c.kind) << "\n";
    for (const auto& p : c.fixed_points) out << "fixed point: " << p.to_string() << "\n";
  }
  return 0;
}

inline int cmd_map(const std::string& chain_text, const std::vector<std::string>& points, bool check,
                   Emitter& em, std::ostream& out) {
  const MapChain chain = parse_chain(chain_text);
  if (points.empty()) throw CLI::ValidationError("--point", "map needs at least one point");
  report::Json arr = report::Json::array();
  bool ok = true;
  for (const auto& s : points) {
    const Complex z = finite_point(s, "--point");
    const Complex w = chain.apply(z);
    report::Json e;
    e["z"] = report::to_json(z);
    e["w"] = report::to_json(w);
    e["derivative"] = report::to_json(chain.derivative(z));
    std::string line = ExtendedPoint(z).to_string() + " -> " + ExtendedPoint(w).to_string();
    if (check) {
      const double round_trip = std::abs(chain.inverse().apply(w) - z);
      std::vector<Complex> nb;
      for (int i = -1; i <= 1; ++i)
        for (int k = -1; k <= 1; ++k) nb.push_back(z + 1e-3 * Complex(i, k));
      const ConformalReport cr = check_conformal(chain, nb);
      const bool pass = round_trip < 1e-9 * std::max(1.0, std::abs(z)) && (cr.ok() || !chain.holomorphic());
      ok = ok && pass;
      e["round_trip"] = round_trip;
      e["dbar"] = cr.max_dbar;
      e["check"] = pass ? "pass" : "fail";
      line += "  round trip " + report::fmt(round_trip) + ", dbar " + report::fmt(cr.max_dbar) +
              (pass ? ", pass" : ", FAIL");
    }
    arr.push_back(e);
    if (!em.json()) out << line << "\n";
  }
  report::Json j;
  j["chain"] = report::to_json(chain);
  j["points"] = arr;
  em.emit(j);
  return ok ? 0 : 2;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app("Hydrodynamic Killing vector fields on canonical surfaces", "hkvf");
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "machine-readable output");

  JobFlags vflags, cflags, fflags, kflags;
  CLI::App* verify_cmd = app.add_subcommand("verify", "check the HKVF axioms");
  vflags.attach(verify_cmd);
  CLI::App* classify_cmd = app.add_subcommand("classify", "reduce to a normal form");
  cflags.attach(classify_cmd);
  bool coords = false;
  classify_cmd->add_flag("--coordinates", coords, "also build canonical coordinates");
  CLI::App* flow_cmd = app.add_subcommand("flow", "integrate a trajectory to CSV");
  fflags.attach(flow_cmd);
  double dt = 0.0;
  std::string csv;
  flow_cmd->add_option("--dt", dt, "sample spacing");
  flow_cmd->add_option("--csv", csv, "CSV output path");
  CLI::App* collar_cmd = app.add_subcommand("collar", "boundary collar chart");
  kflags.attach(collar_cmd);
  std::string collar_point;
  std::optional<double> collar_eps;
  collar_cmd->add_option("--point", collar_point, "boundary point x,y");
  collar_cmd->add_option("--eps", collar_eps, "collar depth");

  CLI::App* mobius_cmd = app.add_subcommand("mobius", "classify a Mobius transformation");
  std::vector<double> matrix;
  std::vector<std::string> mpoints, mimages;
  mobius_cmd->add_option("--matrix", matrix, "a_re a_im b_re b_im c_re c_im d_re d_im")->expected(8);
  mobius_cmd->add_option("--points", mpoints, "three source points x,y or inf")->expected(3);
  mobius_cmd->add_option("--images", mimages, "three image points")->expected(3);

  CLI::App* map_cmd = app.add_subcommand("map", "evaluate a map chain");
  std::string chain;
  std::vector<std::string> map_points;
  bool check = false;
  map_cmd->add_option("--chain", chain, "atoms, e.g. fp_inv,fh,scale(0,1)")->required();
  map_cmd->add_option("--point", map_points, "point x,y (repeatable)");
  map_cmd->add_flag("--check", check, "round-trip and conformality check");

  for (CLI::App* sub : {verify_cmd, classify_cmd, flow_cmd, collar_cmd, mobius_cmd, map_cmd})
    sub->add_flag("--json", json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  detail::Emitter em(out, json);
  try {
    if (*verify_cmd) return detail::cmd_verify(vflags, em, out);
    if (*classify_cmd) return detail::cmd_classify(cflags, coords, em, out);
    if (*flow_cmd) return detail::cmd_flow(fflags, dt, csv, em, out, err);
    if (*collar_cmd) return detail::cmd_collar(kflags, collar_point, collar_eps, em, out);
    if (*mobius_cmd) return detail::cmd_mobius(matrix, mpoints, mimages, em, out);
    if (*map_cmd) return detail::cmd_map(chain, map_points, check, em, out);
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const SyntaxError& e) {
    err << "syntax error: " << e.what() << "\n";
    return 1;
  } catch (const UnknownIdentifier& e) {
    err << "syntax error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace hkvf::cli
