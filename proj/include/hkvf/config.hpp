#pragma once

// Job configuration: a TOML subset (dotted [sections], key = value, quoted
// strings, numbers, booleans, single-line arrays, # comments) and the schema
// that turns it into a JobConfig. Unknown keys are errors.

#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hkvf/errors.hpp"
#include "hkvf/geometry.hpp"
#include "hkvf/surfaces.hpp"
#include "hkvf/verify.hpp"

namespace hkvf::config {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, bool, std::string, Array> data;
  std::size_t line = 0;
  std::size_t column = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

/// Flat table keyed by "section.key".
struct Document {
  std::map<std::string, Value> entries;
  std::map<std::string, std::pair<std::size_t, std::size_t>> sections;  // name -> position
  std::map<std::string, std::pair<std::size_t, std::size_t>> keys;      // full key -> position
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Document parse() {
    Document doc;
    std::string section;
    while (pos_ < text_.size()) {
      skip_blank();
      if (at_end_of_line()) {
        next_line();
        continue;
      }
      const std::size_t col = column();
      if (peek() == '[') {
        ++pos_;
        skip_blank();
        std::string name = dotted_key();
        skip_blank();
        expect(']');
        skip_blank();
        if (!at_end_of_line()) fail("trailing characters after section header");
        if (doc.sections.count(name)) fail_at(line_, col, "duplicate section [" + name + "]");
        doc.sections[name] = {line_, col};
        section = std::move(name);
        next_line();
        continue;
      }
      std::string key = dotted_key();
      skip_blank();
      expect('=');
      skip_blank();
      Value v = value();
      skip_blank();
      if (!at_end_of_line()) fail("trailing characters after value");
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.entries.count(full)) fail_at(line_, col, "duplicate key '" + full + "'");
      doc.entries[full] = std::move(v);
      doc.keys[full] = {line_, col};
      next_line();
    }
    return doc;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\n'; }
  std::size_t column() const { return pos_ - line_start_ + 1; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line_, column(), what); }
  [[noreturn]] void fail_at(std::size_t l, std::size_t c, const std::string& what) const {
    throw ConfigError(l, c, what);
  }

  void skip_blank() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '#')
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }
  bool at_end_of_line() const { return pos_ >= text_.size() || text_[pos_] == '\n'; }
  void next_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    if (pos_ < text_.size()) ++pos_;
    ++line_;
    line_start_ = pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                                   text_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }
  std::string dotted_key() {
    std::string k = bare_key();
    while (peek() == '.') {
      ++pos_;
      k += "." + bare_key();
    }
    return k;
  }

  Value value() {
    Value v;
    v.line = line_;
    v.column = column();
    const char c = peek();
    if (c == '"') {
      v.data = string_literal();
    } else if (c == '[') {
      ++pos_;
      Array arr;
      while (true) {
        skip_blank();
        if (at_end_of_line()) fail("arrays must close on the same line");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        arr.push_back(value());
        skip_blank();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      v.data = std::move(arr);
    } else if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.data = true;
    } else if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.data = false;
    } else {
      v.data = number();
    }
    return v;
  }

  std::string string_literal() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end_of_line()) fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end_of_line()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: --pos_, fail(std::string("unknown escape \\") + e);
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  double number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || std::string_view("+-._").find(text_[pos_]) != std::string_view::npos))
      ++pos_;
    std::string tok(text_.substr(start, pos_ - start));
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(d)) fail_at(line_, start - line_start_ + 1, "invalid number '" + tok + "'");
    return d;
  }
};

}  // namespace detail

inline Document parse(std::string_view text) { return detail::Parser(text).parse(); }

inline Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, 0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// ---------------------------------------------------------------------------
// Schema

struct JobConfig {
  CanonicalSurface surface;
  std::string lambda = "1";
  std::string u;
  std::string v;
  FieldTag tag = FieldTag::Custom;
  VerifyOptions verify;
  std::vector<std::string> checks{"killing", "nonzero", "slip", "complete", "periodic"};
  std::optional<Complex> flow_seed;
  double flow_horizon = 10.0;
  double flow_dt = 0.01;
  std::optional<Complex> collar_point;
  double collar_eps = 0.25;
  std::string json_path;
  std::string csv_path;

  ConformalMetric metric() const { return ConformalMetric(surface, lambda); }
  VectorField field() const {
    if (tag == FieldTag::Rotational) return VectorField::rotational();
    if (tag == FieldTag::Translational) return VectorField::translational();
    return VectorField(u, v);
  }
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "surface.kind",      "surface.rho",       "surface.pi1",        "surface.pi2",
      "metric.lambda",     "field.u",           "field.v",            "field.tag",
      "checks.run",        "checks.grid",       "checks.horizon",     "checks.seeds",
      "checks.slip_samples", "tolerances.killing", "tolerances.slip", "tolerances.zero",
      "tolerances.return", "flow.seed",         "flow.horizon",       "flow.dt",
      "collar.point",      "collar.eps",        "output.json",        "output.csv"};
  return keys;
}

namespace detail {

[[noreturn]] inline void bad(const Value& v, const std::string& what) { throw ConfigError(v.line, v.column, what); }

inline double positive(const Value& v, const std::string& key) {
  if (!v.is_number()) bad(v, key + " must be a number");
  const double d = std::get<double>(v.data);
  if (!(d > 0.0)) bad(v, key + " must be positive");
  return d;
}

inline double number(const Value& v, const std::string& key) {
  if (!v.is_number()) bad(v, key + " must be a number");
  return std::get<double>(v.data);
}

inline std::string string(const Value& v, const std::string& key) {
  if (!v.is_string()) bad(v, key + " must be a quoted string");
  return std::get<std::string>(v.data);
}

inline Complex point(const Value& v, const std::string& key) {
  if (!v.is_array()) bad(v, key + " must be [x, y]");
  const Array& a = std::get<Array>(v.data);
  if (a.size() != 2) bad(v, key + " must have two components");
  return {number(a[0], key), number(a[1], key)};
}

}  // namespace detail

/// Validates a parsed document against the schema.
inline JobConfig to_job(const Document& doc) {
  static const std::set<std::string> sections = {"surface", "metric", "field", "checks",
                                                 "tolerances", "flow", "collar", "output"};
  for (const auto& [name, pos] : doc.sections)
    if (!sections.count(name)) throw ConfigError(pos.first, pos.second, "unknown section [" + name + "]");
  for (const auto& [key, v] : doc.entries)
    if (!known_keys().count(key)) {
      const auto it = doc.keys.find(key);
      const auto [line, col] = it != doc.keys.end() ? it->second : std::make_pair(v.line, v.column);
      throw ConfigError(line, col, "unknown key '" + key + "'");
    }

  auto get = [&](const std::string& k) -> const Value* {
    const auto it = doc.entries.find(k);
    return it == doc.entries.end() ? nullptr : &it->second;
  };
  using namespace detail;
  JobConfig job;

  const Value* kind = get("surface.kind");
  if (!kind) throw ConfigError(1, 1, "missing surface.kind");
  const std::string kname = string(*kind, "surface.kind");
  const auto sk = surface_kind_from_string(kname);
  if (!sk) bad(*kind, "unknown surface kind '" + kname + "'");
  try {
    if (*sk == SurfaceKind::Torus) {
      const Value* p1 = get("surface.pi1");
      const Value* p2 = get("surface.pi2");
      if (!p1 || !p2) bad(*kind, "torus needs surface.pi1 and surface.pi2");
      job.surface = CanonicalSurface::torus(point(*p1, "surface.pi1"), point(*p2, "surface.pi2"));
    } else if (has_rho(*sk)) {
      const Value* r = get("surface.rho");
      if (!r) bad(*kind, kname + " needs surface.rho");
      job.surface = CanonicalSurface::with_rho(*sk, number(*r, "surface.rho"));
    } else {
      job.surface = CanonicalSurface::make(*sk);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    bad(*kind, e.what());
  }
  for (const char* k : {"surface.rho", "surface.pi1", "surface.pi2"})
    if (const Value* v = get(k)) {
      const bool wanted = std::string(k) == "surface.rho" ? has_rho(*sk) : *sk == SurfaceKind::Torus;
      if (!wanted) bad(*v, std::string(k) + " does not apply to " + kname);
    }

  if (const Value* v = get("metric.lambda")) job.lambda = string(*v, "metric.lambda");
  if (const Value* v = get("field.tag")) {
    const std::string t = string(*v, "field.tag");
    if (t == "rotational") {
      job.tag = FieldTag::Rotational;
    } else if (t == "translational") {
      job.tag = FieldTag::Translational;
    } else {
      bad(*v, "field.tag must be \"rotational\" or \"translational\"");
    }
    if (get("field.u") || get("field.v")) bad(*v, "field.tag excludes field.u/field.v");
  } else {
    const Value* u = get("field.u");
    const Value* w = get("field.v");
    if (!u || !w) throw ConfigError(1, 1, "missing field: give field.tag or both field.u and field.v");
    job.u = string(*u, "field.u");
    job.v = string(*w, "field.v");
  }
  // expressions are checked here so errors carry the config position
  for (const char* k : {"metric.lambda", "field.u", "field.v"})
    if (const Value* v = get(k)) {
      try {
        (void)expr::Expr::parse(std::get<std::string>(v->data));
      } catch (const Error& e) {
        bad(*v, e.what());
      }
    }

  if (const Value* v = get("checks.run")) {
    if (!v->is_array()) bad(*v, "checks.run must be an array of names");
    static const std::set<std::string> names = {"killing", "nonzero", "slip", "complete", "periodic"};
    job.checks.clear();
    for (const Value& e : std::get<Array>(v->data)) {
      const std::string n = string(e, "checks.run entry");
      if (!names.count(n)) bad(e, "unknown check '" + n + "'");
      job.checks.push_back(n);
    }
  }
  auto has_check = [&](const char* n) { return std::find(job.checks.begin(), job.checks.end(), n) != job.checks.end(); };
  job.verify.check_complete = has_check("complete");
  job.verify.check_periodic = has_check("periodic");
  if (const Value* v = get("checks.grid")) {
    const double g = positive(*v, "checks.grid");
    if (g != std::floor(g) || g < 2) bad(*v, "checks.grid must be an integer >= 2");
    job.verify.grid_n = static_cast<int>(g);
  }
  if (const Value* v = get("checks.slip_samples")) {
    const double g = positive(*v, "checks.slip_samples");
    if (g != std::floor(g)) bad(*v, "checks.slip_samples must be an integer");
    job.verify.slip_samples = static_cast<int>(g);
  }
  if (const Value* v = get("checks.horizon")) job.verify.horizon = positive(*v, "checks.horizon");
  if (const Value* v = get("checks.seeds")) {
    if (!v->is_array()) bad(*v, "checks.seeds must be an array of [x, y]");
    for (const Value& e : std::get<Array>(v->data)) job.verify.seeds.emplace_back(point(e, "checks.seeds entry"));
  }
  if (const Value* v = get("tolerances.killing")) job.verify.tol_killing = positive(*v, "tolerances.killing");
  if (const Value* v = get("tolerances.slip")) job.verify.tol_slip = positive(*v, "tolerances.slip");
  if (const Value* v = get("tolerances.zero")) job.verify.tol_zero = positive(*v, "tolerances.zero");
  if (const Value* v = get("tolerances.return")) job.verify.tol_return = positive(*v, "tolerances.return");
  if (const Value* v = get("flow.seed")) job.flow_seed = point(*v, "flow.seed");
  if (const Value* v = get("flow.horizon")) job.flow_horizon = positive(*v, "flow.horizon");
  if (const Value* v = get("flow.dt")) job.flow_dt = positive(*v, "flow.dt");
  if (const Value* v = get("collar.point")) job.collar_point = point(*v, "collar.point");
  if (const Value* v = get("collar.eps")) job.collar_eps = positive(*v, "collar.eps");
  if (const Value* v = get("output.json")) job.json_path = string(*v, "output.json");
  if (const Value* v = get("output.csv")) job.csv_path = string(*v, "output.csv");
  return job;
}

inline JobConfig load(const std::string& path) { return to_job(parse_file(path)); }

}  // namespace hkvf::config
