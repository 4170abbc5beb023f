// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the hkvf binary.

#include <array>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hkvf/hkvf.hpp"

using namespace hkvf;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(e_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(e_); }
  Complex complex(double r) { return {uniform(-r, r), uniform(-r, r)}; }
  MobiusTransform mobius(double r) {
    while (true) {
      const Complex a = complex(r), b = complex(r), c = complex(r);
      if (std::abs(a) < 0.2) continue;
      return {a, b, c, (1.0 + b * c) / a};
    }
  }

 private:
  std::mt19937_64 e_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::vector<Complex> box(double x0, double x1, double y0, double y1) {
  std::vector<Complex> g;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) g.emplace_back(x0 + (x1 - x0) * i / 4.0, y0 + (y1 - y0) * j / 4.0);
  return g;
}

double sampled_deviation(const ConjugatedMap& m, const std::vector<Complex>& grid,
                         const std::function<Complex(Complex)>& h) {
  if (const auto* s = std::get_if<SampledMap>(&m)) return s->deviation(h);
  const auto& f = std::get<MobiusTransform>(m);
  double worst = 0.0;
  for (Complex w : grid) worst = std::max(worst, std::abs(f.apply_finite(w) - h(w)));
  return worst;
}

// 1 -------------------------------------------------------------------------
Outcome conjugation_identities() {
  Rng rng(1001);
  double wp = 0, wh = 0, wc = 0;
  for (int k = 0; k < 10; ++k) {
    const double theta = rng.uniform(-2.0, 2.0);
    const MobiusTransform fp(Complex(1.0, theta), Complex(0.0, theta), Complex(0.0, -theta), Complex(1.0, -theta));
    const auto gp = box(-1.0, 1.0, 0.2, 2.0);
    wp = std::max(wp, sampled_deviation(conjugate_flow(MapChain({Atom::make(AtomKind::Fp)}), fp, gp), gp,
                                        [&](Complex w) { return w - Complex(0, 2 * theta); }));

    const double c = rng.uniform(-0.9, 0.9);
    const double th = -2.0 * std::log((1 - c) / (1 + c));
    const auto gh = box(0.3, 2 * kPi - 0.3, -3.0, 3.0);
    wh = std::max(wh, sampled_deviation(conjugate_flow(MapChain({Atom::make(AtomKind::Fh)}),
                                                       MobiusTransform(1.0, c, c, 1.0), gh),
                                        gh, [&](Complex w) { return w + Complex(0, th); }));

    const Complex v = std::polar(1.0, rng.uniform(0.0, 2 * kPi));
    const double t = rng.uniform(-0.5, 0.5);
    std::vector<Complex> gc;
    for (Complex L : box(-1.0, 1.0, -1.0, 1.0)) gc.push_back(Complex(0, 1) / v * L);
    wc = std::max(wc, sampled_deviation(conjugate_flow(MapChain({Atom::fc(v)}), MobiusTransform::scaling(std::exp(v * t)),
                                                       gc),
                                        gc, [&](Complex w) { return w + Complex(0, t); }));
  }
  const double worst = std::max({wp, wh, wc});
  return {worst < 1e-9, "Fp " + num(wp) + ", Fh " + num(wh) + ", Fc " + num(wc) + " (tol 1e-9)"};
}

// 2 -------------------------------------------------------------------------
// Fixed points from a stable quadratic solve of c z^2 + (d - a) z - b = 0.
std::size_t distinct_roots(const MobiusTransform& f) {
  const Complex A = f.c(), B = f.d() - f.a(), C = -f.b();
  const double scale = std::abs(f.a()) + std::abs(f.b()) + std::abs(f.c()) + std::abs(f.d());
  if (std::abs(A) < 1e-14 * scale) return std::abs(B) < 1e-7 * scale ? 1 : 2;  // one root at infinity
  const Complex s = std::sqrt(B * B - 4.0 * A * C);
  const Complex q = -0.5 * (B + (std::real(std::conj(B) * s) >= 0 ? s : -s));
  const ExtendedPoint r1(q / A);
  const ExtendedPoint r2 = std::abs(q) > 0 ? ExtendedPoint(C / q) : r1;
  return chordal_distance(r1, r2) < 3e-5 ? 1 : 2;
}

Outcome mobius_classifier() {
  Rng rng(2002);
  const std::array<MobiusTransform, 4> models = {MobiusTransform::rotation(0.9), MobiusTransform::translation(1.0),
                                                 MobiusTransform::scaling(2.5),
                                                 MobiusTransform::scaling(std::polar(1.7, 0.4))};
  int disagreements = 0, conj_fail = 0, sign_fail = 0, parabolic = 0;
  for (int i = 0; i < 10000; ++i) {
    const MobiusTransform h = rng.mobius(1.5);
    const MobiusTransform f = i % 2 ? rng.mobius(2.0) : models[(i / 2) % 4].conjugated_by(h);
    const MobiusClass c = classify(f);
    if (c.kind == MobiusKind::Identity) continue;
    const std::size_t roots = distinct_roots(f);
    if ((c.kind == MobiusKind::Parabolic) != (roots == 1)) ++disagreements;
    parabolic += c.kind == MobiusKind::Parabolic;
    const MobiusTransform g = rng.mobius(1.5);
    if (classify(f.conjugated_by(g)).kind != c.kind) ++conj_fail;
    if (classify(MobiusTransform(-f.a(), -f.b(), -f.c(), -f.d())).kind != c.kind) ++sign_fail;
  }
  return {disagreements == 0 && conj_fail == 0 && sign_fail == 0,
          std::to_string(disagreements) + " trace/root disagreements, " + std::to_string(conj_fail) +
              " conjugation and " + std::to_string(sign_fail) + " sign changes (" + std::to_string(parabolic) +
              " parabolic)"};
}

// 3 -------------------------------------------------------------------------
Complex rk4(const VectorField& X, Complex z, double t) {
  const int n = 64;
  const double h = t / n;
  for (int i = 0; i < n; ++i) {
    const Complex k1 = X.at(z), k2 = X.at(z + 0.5 * h * k1), k3 = X.at(z + 0.5 * h * k2), k4 = X.at(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

std::array<double, 3> pullback(const ConformalMetric& g, const VectorField& X, Complex p, double t) {
  const double d = 1e-6;
  const Complex ex = (rk4(X, p + d, t) - rk4(X, p - d, t)) / (2 * d);
  const Complex ey = (rk4(X, p + Complex(0, d), t) - rk4(X, p - Complex(0, d), t)) / (2 * d);
  const Complex q = rk4(X, p, t);
  const double l2 = std::pow(g.lambda_expr().eval(q.real(), q.imag()), 2);
  return {l2 * std::norm(ex), l2 * (ex.real() * ey.real() + ex.imag() * ey.imag()), l2 * std::norm(ey)};
}

std::array<double, 3> lie_oracle(const ConformalMetric& g, const VectorField& X, Complex p) {
  auto c = [&](double h) {
    const auto a = pullback(g, X, p, h), b = pullback(g, X, p, -h);
    return std::array<double, 3>{(a[0] - b[0]) / (2 * h), (a[1] - b[1]) / (2 * h), (a[2] - b[2]) / (2 * h)};
  };
  const auto d1 = c(2e-3), d2 = c(1e-3);
  return {(4 * d2[0] - d1[0]) / 3, (4 * d2[1] - d1[1]) / 3, (4 * d2[2] - d1[2]) / 3};
}

struct Pair {
  CanonicalSurface S;
  const char* lambda;
  const char* u;
  const char* v;
};

std::vector<Pair> canonical_pairs() {
  auto m = [](SurfaceKind k) { return CanonicalSurface::make(k); };
  auto r = [](SurfaceKind k) { return CanonicalSurface::with_rho(k, 0.5); };
  return {
      {m(SurfaceKind::RiemannSphere), "2/(1+r^2)", "-y", "x"},
      {m(SurfaceKind::Plane), "1", "-y", "x"},
      {m(SurfaceKind::Disc), "2/(1-r^2)", "-y", "x"},
      {m(SurfaceKind::PuncturedPlane), "1/r", "-y", "x"},
      {m(SurfaceKind::PuncturedDisc), "1", "-y", "x"},
      {r(SurfaceKind::Annulus), "1", "-y", "x"},
      {m(SurfaceKind::ClosedDisc), "1", "-y", "x"},
      {m(SurfaceKind::PuncturedClosedDisc), "1", "-y", "x"},
      {r(SurfaceKind::ClosedAnnulus), "1", "-y", "x"},
      {r(SurfaceKind::SemiClosedAnnulus), "1", "-y", "x"},
      {m(SurfaceKind::Plane), "1", "0", "1"},
      {m(SurfaceKind::HalfPlaneOpen), "1/x", "0", "1"},
      {m(SurfaceKind::ChannelOpen), "1/sin(x/2)", "0", "1"},
      {m(SurfaceKind::Cylinder), "1", "0", "1"},
      {CanonicalSurface::torus(Complex(0, 1), 1.0), "1", "0", "1"},
      {m(SurfaceKind::HalfPlaneClosed), "exp(-x)", "0", "1"},
      {m(SurfaceKind::ChannelSemiClosed), "1", "0", "1"},
      {m(SurfaceKind::ChannelClosed), "2+cos(x)", "0", "1"},
  };
}

VerifyOptions job_options() {
  VerifyOptions o;
  o.grid_n = 21;
  o.horizon = 20.0;
  return o;
}

Outcome killing_oracle() {
  Rng rng(3003);
  const char* lambdas[] = {"exp(x)", "2/(1+r^2)", "1+0.3*sin(x)*cos(y)", "sqrt(2+x^2)", "1/(1+0.2*y^2)"};
  const std::array<std::array<const char*, 2>, 5> fields = {
      {{"-y", "x"}, {"0", "1"}, {"1-x^2+y^2", "-2*x*y"}, {"x", "y"}, {"sin(y)", "cos(x)"}}};
  const CanonicalSurface plane = CanonicalSurface::make(SurfaceKind::Plane);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const ConformalMetric g(plane, lambdas[rng.integer(0, 4)]);
    const auto& f = fields[rng.integer(0, 4)];
    const VectorField X(f[0], f[1]);
    const Complex p = rng.complex(1.0);
    const Sym2 s = killing_residual(g, X, p);
    const auto o = lie_oracle(g, X, p);
    worst = std::max({worst, std::abs(s.r11 - o[0]), std::abs(s.r12 - o[1]), std::abs(s.r22 - o[2])});
  }
  int admissible = 0;
  const auto pairs = canonical_pairs();
  for (const Pair& p : pairs)
    admissible += verify(ConformalMetric(p.S, p.lambda), VectorField(p.u, p.v), job_options()).is_hkvf();

  // exterior of the unit disc with the flat metric and d/dx, in the chart w = 1/z
  const HkvfReport m1 = verify(ConformalMetric(CanonicalSurface::make(SurfaceKind::PuncturedClosedDisc), "1/r^2"),
                               VectorField("-(x^2-y^2)", "-2*x*y"), job_options());
  const bool m1_ok = m1.killing.status == CheckStatus::Pass && m1.nonzero.status == CheckStatus::Pass &&
                     m1.slip.status == CheckStatus::Fail;
  VerifyOptions o2 = job_options();
  o2.seeds = {ExtendedPoint(-1.0)};
  const HkvfReport m2 =
      verify(ConformalMetric(CanonicalSurface::make(SurfaceKind::PuncturedPlane), "1"), VectorField("1", "0"), o2);
  const bool m2_ok = m2.killing.status == CheckStatus::Pass && m2.nonzero.status == CheckStatus::Pass &&
                     m2.complete.verdict == Completeness::Escape && std::abs(m2.complete.time - 1.0) < 1e-3;
  return {worst < 1e-5 && admissible == static_cast<int>(pairs.size()) && m1_ok && m2_ok,
          "oracle gap " + num(worst) + " (tol 1e-5), " + std::to_string(admissible) + "/" +
              std::to_string(pairs.size()) + " admissible pairs pass, exterior disc slip " +
              to_string(m1.slip.status) + ", punctured plane escape at t=" + std::to_string(m2.complete.time)};
}

// 4 -------------------------------------------------------------------------
Outcome group_recovery() {
  Rng rng(4004);
  const ConformalMetric flat(CanonicalSurface::make(SurfaceKind::Plane), "1");
  double worst = 0.0, worst_ratio = 0.0;
  int rejected = 0, nonisometric = 0, failures = 0;
  for (int i = 0; i < 50; ++i) {
    const bool rotation = i % 2 == 0;
    Complex d = rng.complex(10.0);
    if (rotation && i % 4 == 0) d.real(0.0);
    std::vector<TimedTransform> s;
    for (int k = 0; k <= 8; ++k) {
      const double t = 0.02 * k;
      s.push_back({t, rotation ? MobiusTransform(std::exp(d * t), 0.0, 0.0, 1.0)
                               : MobiusTransform(1.0, d * t, 0.0, 1.0)});
    }
    try {
      const GeneratorData g = fit_family(FlowSample(s));
      worst = std::max(worst, std::abs((rotation ? g.a_dot0 : g.b_dot0) - d));
      const IsometryVerdict v = isometry_screen(g, flat);
      const bool dilating = rotation && d.real() != 0.0;
      nonisometric += dilating;
      if (dilating && !v.pass) ++rejected;
      if (!dilating && !v.pass) ++failures;
      if (dilating) worst_ratio = std::max(worst_ratio, std::abs(v.ratio_t5 / v.expected_ratio_t5 - 1.0));
    } catch (const Error&) {
      ++failures;
    }
  }
  return {worst < 1e-7 && rejected == nonisometric && failures == 0 && worst_ratio < 0.01,
          "generator error " + num(worst) + " (tol 1e-7), rejected " + std::to_string(rejected) + "/" +
              std::to_string(nonisometric) + " dilating, area ratio error " + num(worst_ratio) + " (tol 1%)"};
}

// 5 -------------------------------------------------------------------------
Outcome round_trip() {
  double nf = 0.0, sym = 0.0;
  int same = 0;
  const auto pairs = canonical_pairs();
  std::string bad;
  for (const Pair& p : pairs) {
    try {
      const ClassificationResult r = classify_flow(ConformalMetric(p.S, p.lambda), VectorField(p.u, p.v), job_options());
      const NormalForm want = std::string(p.u) == "-y" ? NormalForm::Rotation : NormalForm::Translation;
      if (r.target.kind() == p.S.kind() && r.normal_form == want) ++same;
      else bad += " " + std::string(p.S.name());
      nf = std::max(nf, r.pushed_flow_residual);
      sym = std::max(sym, r.symmetry_residual);
    } catch (const Error& e) {
      bad += " " + std::string(p.S.name());
    }
  }
  bool torus_rejected = false;
  HkvfReport forged;
  forged.killing.status = CheckStatus::Pass;
  forged.nonzero.status = CheckStatus::Pass;
  forged.slip.status = CheckStatus::NotApplicable;
  forged.complete.verdict = Completeness::NoEscapeWithinHorizon;
  forged.boundary_complete.verdict = Completeness::NotApplicable;
  try {
    (void)classify_flow(ConformalMetric(CanonicalSurface::torus(Complex(0, 1), 1.0), "1"), VectorField("-y", "x"),
                        forged);
  } catch (const TorusFixedPoint&) {
    torus_rejected = true;
  }
  return {same == static_cast<int>(pairs.size()) && nf < 1e-6 && sym < 1e-6 && torus_rejected,
          std::to_string(same) + "/" + std::to_string(pairs.size()) + " instances classify to themselves" + bad +
              ", pushed flow " + num(nf) + ", symmetry " + num(sym) + " (tol 1e-6), torus fixed point " +
              (torus_rejected ? "rejected" : "NOT rejected")};
}

// 6 -------------------------------------------------------------------------
Outcome canonical_coords() {
  struct Case {
    CanonicalSurface S;
    const char* lambda;
    VectorField X;
    std::function<double(double)> closed;
  };
  const std::vector<Case> cases = {
      {CanonicalSurface::make(SurfaceKind::RiemannSphere), "2/(1+r^2)", VectorField::rotational(),
       [](double x) { return 2 * std::exp(x) / (1 + std::exp(2 * x)); }},
      {CanonicalSurface::make(SurfaceKind::Cylinder), "1", VectorField::translational(), [](double) { return 1.0; }},
      {CanonicalSurface::make(SurfaceKind::PuncturedDisc), "1", VectorField::rotational(),
       [](double x) { return std::exp(x); }},
  };
  double worst = 0.0, closed = 0.0;
  std::size_t points = 0;
  bool ok = true;
  for (const Case& c : cases) {
    try {
      const ConformalMetric g(c.S, c.lambda);
      const CanonicalCoordinates cc = canonical_coordinates(classify_flow(g, c.X, job_options()), g, c.X);
      const MapChain inv = cc.chain.inverse();
      for (const ProfileSample& p : cc.profile) {
        // |X| o phi^{-1} recomputed here from the raw metric and field
        const Complex z = inv.apply(Complex(p.x1, 0.3));
        worst = std::max(worst, std::abs(p.lambda - g.lambda(z) * std::abs(c.X.at(z))));
        closed = std::max(closed, std::abs(p.lambda - c.closed(p.x1)));
      }
      points += cc.profile.size();
      ok = ok && cc.profile.size() == 101;
    } catch (const Error&) {
      ok = false;
    }
  }
  return {ok && worst < 1e-6 && closed < 1e-6, "max |lambda - |X| o phi^-1| " + num(worst) + ", closed form " +
                                                   num(closed) + " over " + std::to_string(points) + " points (tol 1e-6)"};
}

// 7 -------------------------------------------------------------------------
Outcome collar() {
  try {
    const CollarChart h = collar_extend(ConformalMetric(CanonicalSurface::make(SurfaceKind::HalfPlaneClosed), "1"),
                                        VectorField::translational(), 0.0, 1.0);
    const CollarChart a =
        collar_extend(ConformalMetric(CanonicalSurface::with_rho(SurfaceKind::ClosedAnnulus, 0.5), "1"),
                      VectorField::rotational(), 1.0, 0.45);
    double ferr = 0.0;
    for (const auto& [t, f] : a.f_table) ferr = std::max(ferr, std::abs(f + std::log(1.0 - t)));
    const double conf = std::max(h.conformality_residual, a.conformality_residual);
    const double orth = std::max(h.orthogonality, a.orthogonality);
    return {conf < 1e-5 && orth < 1e-8 && ferr < 1e-8,
            "conformality " + num(conf) + " (tol 1e-5), orthogonality " + num(orth) + " (tol 1e-8), f error " +
                num(ferr) + " (tol 1e-8)"};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

// 8 -------------------------------------------------------------------------
Outcome annulus_alpha() {
  const auto a = annulus_alpha_constraint(0.5);
  const bool values = std::abs(a[0]) < 1e-12 && std::abs(a[1] - 0.8) < 1e-12;
  int accepted = 0;
  bool zero_ok = false;
  for (const double mag : {a[0], a[1]})
    for (int k = 0; k < 8; ++k) {
      const AlphaCheck c = annulus_alpha_check(0.5, std::polar(mag, 2 * kPi * k / 8), 0.3 * k);
      accepted += c.accepted();
      if (mag == 0.0) zero_ok = zero_ok || c.accepted();
    }
  return {values && zero_ok && accepted == 8,
          "roots {" + num(a[0]) + ", " + num(a[1]) + "}, accepted " + std::to_string(accepted) +
              "/16 candidates (all with alpha = 0)"};
}

// 9 -------------------------------------------------------------------------
Outcome curvature() {
  Rng rng(9009);
  const CanonicalSurface sphere = CanonicalSurface::make(SurfaceKind::RiemannSphere);
  const ConformalMetric g(sphere, "2/(1+r^2)");
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) worst = std::max(worst, std::abs(gauss_curvature(g, rng.complex(3.0)) - 1.0));
  // orbit check on a non-radial metric so the test is not vacuous
  const ConformalMetric h(CanonicalSurface::make(SurfaceKind::Plane), "exp(-r^2)");
  double drift = 0.0;
  for (const auto& [metric, seed] : {std::pair{&g, Complex(0.6, 0.1)}, std::pair{&h, Complex(0.7, 0.2)}}) {
    FlowOptions o;
    o.record = true;
    o.max_step = 0.05;
    const FlowResult r = integrate_flow(metric->surface(), VectorField::rotational(), seed, 2 * kPi, o);
    const double k0 = gauss_curvature(*metric, seed);
    for (const auto& s : r.samples)
      drift = std::max(drift, std::abs(gauss_curvature(*metric, s.z.value()) - k0));
  }
  return {worst < 1e-6 && drift < 1e-5,
          "|K - 1| " + num(worst) + " (tol 1e-6), orbit drift " + num(drift) + " (tol 1e-5)"};
}

// 10 ------------------------------------------------------------------------
std::string capture(const std::string& cmd, int* status) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    *status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  *status = pclose(p);
  return out;
}

Outcome determinism(const std::string& cli) {
  std::vector<std::string> configs;
  for (const auto& e : std::filesystem::directory_iterator(std::string(HKVF_SOURCE_DIR) + "/configs"))
    if (e.path().extension() == ".toml") configs.push_back(e.path().string());
  std::sort(configs.begin(), configs.end());
  auto suite = [&](int* failures) {
    std::string all;
    for (const auto& c : configs)
      for (const char* cmd : {"verify", "classify"}) {
        int status = 0;
        all += capture("'" + cli + "' " + cmd + " --json --config '" + c + "' 2>/dev/null", &status);
        if (status != 0) ++*failures;
      }
    return all;
  };
  int f1 = 0, f2 = 0;
  const std::string a = suite(&f1), b = suite(&f2);
  return {!configs.empty() && a == b && f1 == 0 && f2 == 0,
          std::to_string(configs.size()) + " configs x {verify, classify}, " + std::to_string(a.size()) + " bytes, " +
              (a == b ? "identical" : "DIFFERENT") + ", nonzero exits " + std::to_string(f1 + f2)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to hkvf>\n");
    return 1;
  }
  const std::string cli = argv[1];
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"conjugation identities", conjugation_identities},
      {"mobius classifier", mobius_classifier},
      {"killing oracle and examples", killing_oracle},
      {"one-parameter group recovery", group_recovery},
      {"normal form round trip", round_trip},
      {"canonical coordinates", canonical_coords},
      {"boundary collar", collar},
      {"annulus constraint", annulus_alpha},
      {"curvature", curvature},
      {"determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %-30s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
