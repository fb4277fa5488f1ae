#include "ddelyap/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "ddelyap/errors.hpp"

namespace ddelyap {

namespace {

struct Dual {
  double v = 0.0;
  double d = 0.0;
};

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Atan };

}  // namespace

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  int var = -1;
  Fn fn = Fn::Sin;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

Dual apply(Fn fn, Dual x) {
  switch (fn) {
    case Fn::Sin: return {std::sin(x.v), std::cos(x.v) * x.d};
    case Fn::Cos: return {std::cos(x.v), -std::sin(x.v) * x.d};
    case Fn::Tan: {
      const double t = std::tan(x.v);
      return {t, (1 + t * t) * x.d};
    }
    case Fn::Exp: {
      const double e = std::exp(x.v);
      return {e, e * x.d};
    }
    case Fn::Log: return {std::log(x.v), x.d / x.v};
    case Fn::Sqrt: {
      const double s = std::sqrt(x.v);
      return {s, x.d / (2 * s)};
    }
    case Fn::Tanh: {
      const double t = std::tanh(x.v);
      return {t, (1 - t * t) * x.d};
    }
    case Fn::Atan: return {std::atan(x.v), x.d / (1 + x.v * x.v)};
  }
  return {};
}

Dual eval_node(const Expression::Node& n, std::span<const double> vars, int wrt) {
  switch (n.op) {
    case Op::Const: return {n.value, 0.0};
    case Op::Var: return {vars[n.var], n.var == wrt ? 1.0 : 0.0};
    case Op::Neg: {
      const Dual a = eval_node(*n.lhs, vars, wrt);
      return {-a.v, -a.d};
    }
    case Op::Call: return apply(n.fn, eval_node(*n.lhs, vars, wrt));
    default: break;
  }
  const Dual a = eval_node(*n.lhs, vars, wrt);
  const Dual b = eval_node(*n.rhs, vars, wrt);
  switch (n.op) {
    case Op::Add: return {a.v + b.v, a.d + b.d};
    case Op::Sub: return {a.v - b.v, a.d - b.d};
    case Op::Mul: return {a.v * b.v, a.d * b.v + a.v * b.d};
    case Op::Div: return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    case Op::Pow: {
      const double p = std::pow(a.v, b.v);
      double d = 0.0;
      if (a.d != 0.0) d += b.v * std::pow(a.v, b.v - 1.0) * a.d;
      if (b.d != 0.0) d += p * std::log(a.v) * b.d;
      return {p, d};
    }
    default: return {};
  }
}

bool uses_node(const Expression::Node& n, int var) {
  if (n.op == Op::Var) return n.var == var;
  if (n.lhs && uses_node(*n.lhs, var)) return true;
  return n.rhs && uses_node(*n.rhs, var);
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression '" << s_ << "': " << msg << " at position " << pos_ + 1;
    throw ConfigError(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Op op, NodePtr l, NodePtr r = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  static NodePtr constant(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = make(Op::Add, n, term());
      else if (accept('-')) n = make(Op::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = make(Op::Mul, n, unary());
      else if (accept('/')) n = make(Op::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      for (std::size_t k = 0; k < vars_.size(); ++k) {
        if (vars_[k] == id) {
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Var;
          n->var = static_cast<int>(k);
          return n;
        }
      }
      if (id == "pi") return constant(std::numbers::pi);
      if (id == "e") return constant(std::numbers::e);
      static const std::pair<const char*, Fn> fns[] = {{"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},
                                                        {"exp", Fn::Exp},   {"log", Fn::Log},   {"sqrt", Fn::Sqrt},
                                                        {"tanh", Fn::Tanh}, {"atan", Fn::Atan}};
      for (const auto& [name, fn] : fns) {
        if (id == name) {
          if (!accept('(')) fail("expected '(' after " + id);
          auto arg = expr();
          if (!accept(')')) fail("expected ')'");
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Call;
          n->fn = fn;
          n->lhs = std::move(arg);
          return n;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, std::vector<std::string> variables) {
  Expression e;
  e.text_ = text;
  e.vars_ = std::move(variables);
  e.root_ = Parser(e.text_, e.vars_).parse();
  return e;
}

double Expression::eval(std::span<const double> vars) const {
  if (vars.size() != vars_.size()) throw DomainError("expression: wrong number of variables");
  return eval_node(*root_, vars, -1).v;
}

std::pair<double, double> Expression::eval_with_derivative(std::span<const double> vars, int wrt) const {
  if (vars.size() != vars_.size()) throw DomainError("expression: wrong number of variables");
  const Dual d = eval_node(*root_, vars, wrt);
  return {d.v, d.d};
}

bool Expression::uses(int var) const { return uses_node(*root_, var); }

}  // namespace ddelyap
