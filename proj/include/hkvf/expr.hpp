#pragma once

// Scalar expression language for conformal factors and vector-field components.
//
// Grammar (whitespace-insensitive):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number | name | func '(' sum ')' | 'atan2' '(' sum ',' sum ')' | '(' sum ')'
//
// Names: x, y, r = sqrt(x^2+y^2), theta = atan2(y, x), pi, e.
// Functions: exp, log, sin, cos, sqrt, abs, sign, atan2.
// r and theta are rewritten to x, y form while parsing, and r^(2k) becomes (x^2+y^2)^k.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "hkvf/errors.hpp"

namespace hkvf::expr {

enum class Op {
  Const,
  VarX,
  VarY,
  Neg,
  Exp,
  Log,
  Sin,
  Cos,
  Sqrt,
  Abs,
  Sign,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Atan2,
};

enum class Var { X, Y };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  NodePtr lhs;
  NodePtr rhs;
};

inline bool is_unary(Op op) {
  switch (op) {
    case Op::Neg: case Op::Exp: case Op::Log: case Op::Sin: case Op::Cos:
    case Op::Sqrt: case Op::Abs: case Op::Sign:
      return true;
    default:
      return false;
  }
}

inline bool is_binary(Op op) {
  switch (op) {
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: case Op::Atan2:
      return true;
    default:
      return false;
  }
}

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::VarX: return "x";
    case Op::VarY: return "y";
    case Op::Neg: return "neg";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sign: return "sign";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Pow: return "pow";
    case Op::Atan2: return "atan2";
  }
  return "?";
}

inline bool structurally_equal(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  if (a->op == Op::Const) return a->value == b->value;
  return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
}

// ---------------------------------------------------------------------------
// Folding constructors

inline NodePtr make_node(Op op, double value = 0.0, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  return std::make_shared<const Node>(Node{op, value, std::move(lhs), std::move(rhs)});
}

inline NodePtr constant(double v) { return make_node(Op::Const, v); }
inline NodePtr var_x() { return make_node(Op::VarX); }
inline NodePtr var_y() { return make_node(Op::VarY); }

inline bool is_const(const NodePtr& n) { return n->op == Op::Const; }
inline bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

inline double apply_unary(Op op, double v) {
  switch (op) {
    case Op::Neg: return -v;
    case Op::Exp: return std::exp(v);
    case Op::Log: return std::log(v);
    case Op::Sin: return std::sin(v);
    case Op::Cos: return std::cos(v);
    case Op::Sqrt: return std::sqrt(v);
    case Op::Abs: return std::abs(v);
    case Op::Sign: return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    default: return v;
  }
}

inline bool unary_in_domain(Op op, double v) {
  if (op == Op::Log) return v > 0.0;
  if (op == Op::Sqrt) return v >= 0.0;
  return true;
}

inline NodePtr unary(Op op, NodePtr a) {
  if (is_const(a) && unary_in_domain(op, a->value)) {
    const double r = apply_unary(op, a->value);
    if (std::isfinite(r)) return constant(r);
  }
  if (op == Op::Neg && a->op == Op::Neg) return a->lhs;
  return make_node(op, 0.0, std::move(a));
}

inline NodePtr neg(NodePtr a) { return unary(Op::Neg, std::move(a)); }

inline NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(Op::Add, 0.0, std::move(a), std::move(b));
}

inline NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make_node(Op::Sub, 0.0, std::move(a), std::move(b));
}

inline NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(std::move(b));
  if (is_const(b, -1.0)) return neg(std::move(a));
  return make_node(Op::Mul, 0.0, std::move(a), std::move(b));
}

inline NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b) && b->value != 0.0) return constant(a->value / b->value);
  if (is_const(b, 1.0)) return a;
  if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
  return make_node(Op::Div, 0.0, std::move(a), std::move(b));
}

inline NodePtr pow(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) {
    const double r = std::pow(a->value, b->value);
    if (std::isfinite(r)) return constant(r);
  }
  if (is_const(b, 1.0)) return a;
  if (is_const(b, 0.0)) return constant(1.0);
  // sqrt(u)^(2k) -> u^k keeps radial factors smooth at the origin.
  if (a->op == Op::Sqrt && is_const(b)) {
    const double half = b->value / 2.0;
    if (half == std::floor(half) && half > 0.0) return pow(a->lhs, constant(half));
  }
  return make_node(Op::Pow, 0.0, std::move(a), std::move(b));
}

inline NodePtr atan2(NodePtr a, NodePtr b) {
  return make_node(Op::Atan2, 0.0, std::move(a), std::move(b));
}

inline NodePtr binary(Op op, NodePtr a, NodePtr b) {
  switch (op) {
    case Op::Add: return add(std::move(a), std::move(b));
    case Op::Sub: return sub(std::move(a), std::move(b));
    case Op::Mul: return mul(std::move(a), std::move(b));
    case Op::Div: return div(std::move(a), std::move(b));
    case Op::Pow: return pow(std::move(a), std::move(b));
    case Op::Atan2: return atan2(std::move(a), std::move(b));
    default: throw std::logic_error("binary: not a binary operator");
  }
}

/// sqrt(x^2 + y^2)
inline NodePtr radius() {
  return unary(Op::Sqrt, add(pow(var_x(), constant(2.0)), pow(var_y(), constant(2.0))));
}

/// atan2(y, x)
inline NodePtr polar_angle() { return atan2(var_y(), var_x()); }

// ---------------------------------------------------------------------------
// Evaluation

inline double eval_node(const Node& n, double x, double y) {
  auto check = [](const char* what, double arg, double r) {
    if (!std::isfinite(r)) throw EvalDomainError(what, arg);
    return r;
  };
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarX: return x;
    case Op::VarY: return y;
    case Op::Add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
    case Op::Sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
    case Op::Mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
    case Op::Div: {
      const double num = eval_node(*n.lhs, x, y);
      const double den = eval_node(*n.rhs, x, y);
      if (den == 0.0) throw EvalDomainError("division", den);
      return check("division", den, num / den);
    }
    case Op::Pow: {
      const double base = eval_node(*n.lhs, x, y);
      const double ex = eval_node(*n.rhs, x, y);
      if (base < 0.0 && ex != std::floor(ex)) throw EvalDomainError("pow", base);
      if (base == 0.0 && ex < 0.0) throw EvalDomainError("pow", base);
      return check("pow", base, std::pow(base, ex));
    }
    case Op::Atan2: {
      const double p = eval_node(*n.lhs, x, y);
      const double q = eval_node(*n.rhs, x, y);
      if (p == 0.0 && q == 0.0) throw EvalDomainError("atan2", 0.0);
      return std::atan2(p, q);
    }
    default: break;
  }
  const double v = eval_node(*n.lhs, x, y);
  if (!unary_in_domain(n.op, v)) throw EvalDomainError(op_name(n.op), v);
  return check(op_name(n.op), v, apply_unary(n.op, v));
}

// ---------------------------------------------------------------------------
// Symbolic differentiation

inline NodePtr diff_node(const NodePtr& n, Var var) {
  const NodePtr& a = n->lhs;
  const NodePtr& b = n->rhs;
  switch (n->op) {
    case Op::Const: return constant(0.0);
    case Op::VarX: return constant(var == Var::X ? 1.0 : 0.0);
    case Op::VarY: return constant(var == Var::Y ? 1.0 : 0.0);
    case Op::Neg: return neg(diff_node(a, var));
    case Op::Add: return add(diff_node(a, var), diff_node(b, var));
    case Op::Sub: return sub(diff_node(a, var), diff_node(b, var));
    case Op::Mul: return add(mul(diff_node(a, var), b), mul(a, diff_node(b, var)));
    case Op::Div:
      return div(sub(mul(diff_node(a, var), b), mul(a, diff_node(b, var))),
                 pow(b, constant(2.0)));
    case Op::Pow: {
      const NodePtr da = diff_node(a, var);
      const NodePtr db = diff_node(b, var);
      if (is_const(db, 0.0))
        return mul(mul(b, pow(a, sub(b, constant(1.0)))), da);
      if (is_const(da, 0.0)) return mul(mul(n, unary(Op::Log, a)), db);
      return mul(n, add(mul(db, unary(Op::Log, a)), div(mul(b, da), a)));
    }
    case Op::Atan2: {
      // d atan2(p, q) = (q dp - p dq) / (p^2 + q^2)
      const NodePtr num = sub(mul(b, diff_node(a, var)), mul(a, diff_node(b, var)));
      return div(num, add(pow(a, constant(2.0)), pow(b, constant(2.0))));
    }
    case Op::Exp: return mul(n, diff_node(a, var));
    case Op::Log: return div(diff_node(a, var), a);
    case Op::Sin: return mul(unary(Op::Cos, a), diff_node(a, var));
    case Op::Cos: return neg(mul(unary(Op::Sin, a), diff_node(a, var)));
    case Op::Sqrt: return div(diff_node(a, var), mul(constant(2.0), n));
    case Op::Abs: return mul(unary(Op::Sign, a), diff_node(a, var));
    case Op::Sign: return constant(0.0);
  }
  throw std::logic_error("diff: unknown node");
}

// ---------------------------------------------------------------------------
// Printing

inline int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 ? 3 : 5;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string print_node(const Node& n);

inline std::string print_child(const Node& child, int min_prec) {
  std::string s = print_node(child);
  if (precedence(child) < min_prec) return "(" + s + ")";
  return s;
}

inline std::string print_node(const Node& n) {
  switch (n.op) {
    case Op::Const: return format_number(n.value);
    case Op::VarX: return "x";
    case Op::VarY: return "y";
    case Op::Neg: return "-" + print_child(*n.lhs, 3);
    case Op::Add: return print_child(*n.lhs, 1) + " + " + print_child(*n.rhs, 2);
    case Op::Sub: return print_child(*n.lhs, 1) + " - " + print_child(*n.rhs, 2);
    case Op::Mul: return print_child(*n.lhs, 2) + " * " + print_child(*n.rhs, 3);
    case Op::Div: return print_child(*n.lhs, 2) + " / " + print_child(*n.rhs, 3);
    case Op::Pow: return print_child(*n.lhs, 5) + "^" + print_child(*n.rhs, 3);
    case Op::Atan2: return "atan2(" + print_node(*n.lhs) + ", " + print_node(*n.rhs) + ")";
    default: return std::string(op_name(n.op)) + "(" + print_node(*n.lhs) + ")";
  }
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, "operator or end of input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw SyntaxError(pos_, std::string("'") + c + "'");
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    while (true) {
      if (accept('+'))
        lhs = add(lhs, parse_product());
      else if (accept('-'))
        lhs = sub(lhs, parse_product());
      else
        return lhs;
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (accept('*'))
        lhs = mul(lhs, parse_unary());
      else if (accept('/'))
        lhs = div(lhs, parse_unary());
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return pow(base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "number, identifier or '('");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    throw SyntaxError(pos_, "number, identifier or '('");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        digits();
      else
        pos_ = save;  // 'e' belongs to the next token
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc{} || ptr != src_.data() + pos_) throw SyntaxError(start, "number");
    return constant(v);
  }

  NodePtr parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return var_x();
    if (name == "y") return var_y();
    if (name == "r") return radius();
    if (name == "theta") return polar_angle();
    if (name == "pi") return constant(std::numbers::pi);
    if (name == "e") return constant(std::numbers::e);
    if (name == "atan2") {
      expect('(');
      NodePtr p = parse_sum();
      expect(',');
      NodePtr q = parse_sum();
      expect(')');
      return atan2(p, q);
    }
    static constexpr std::pair<std::string_view, Op> kFunctions[] = {
        {"exp", Op::Exp},   {"log", Op::Log}, {"sin", Op::Sin},  {"cos", Op::Cos},
        {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"sign", Op::Sign},
    };
    for (const auto& [fname, op] : kFunctions) {
      if (name == fname) {
        expect('(');
        NodePtr arg = parse_sum();
        expect(')');
        return unary(op, arg);
      }
    }
    throw UnknownIdentifier(start, std::string(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

/// Immutable parsed expression in x, y form.
class Expr {
 public:
  Expr() : root_(constant(0.0)) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  static Expr parse(std::string_view source) { return Expr(Parser(source).parse()); }
  static Expr constant_value(double v) { return Expr(constant(v)); }

  double eval(double x, double y) const { return eval_node(*root_, x, y); }
  double operator()(double x, double y) const { return eval(x, y); }

  Expr diff(Var var) const { return Expr(diff_node(root_, var)); }

  std::string to_string() const { return print_node(*root_); }

  bool is_constant() const { return root_->op == Op::Const; }
  bool is_constant(double v) const { return is_const(root_, v); }

  /// True when abs or sign occurs; their derivatives jump at zero.
  bool uses_abs() const { return contains_op(*root_, Op::Abs) || contains_op(*root_, Op::Sign); }

  const NodePtr& root() const noexcept { return root_; }

  bool operator==(const Expr& o) const { return structurally_equal(root_, o.root_); }

 private:
  static bool contains_op(const Node& n, Op op) {
    if (n.op == op) return true;
    return (n.lhs && contains_op(*n.lhs, op)) || (n.rhs && contains_op(*n.rhs, op));
  }

  NodePtr root_;
};

inline Expr parse(std::string_view source) { return Expr::parse(source); }
inline double eval(const Expr& e, double x, double y) { return e.eval(x, y); }
inline Expr diff(const Expr& e, Var var) { return e.diff(var); }

}  // namespace hkvf::expr
