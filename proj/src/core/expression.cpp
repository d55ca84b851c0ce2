#include "core/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace synckit {

namespace {

bool is_const(const ExprPtr& e, double v) {
  return e->kind() == Expr::Kind::constant && e->constant_value() == v;
}

}  // namespace

ExprPtr Expr::constant(double v) {
  return std::make_shared<Expr>(Kind::constant, v, -1, nullptr, nullptr);
}

ExprPtr Expr::variable(int index) {
  return std::make_shared<Expr>(Kind::variable, 0.0, index, nullptr, nullptr);
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) {
  if (a->kind() == Kind::constant && b->kind() == Kind::constant)
    return constant(a->constant_value() + b->constant_value());
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return std::make_shared<Expr>(Kind::add, 0.0, -1, std::move(a), std::move(b));
}

ExprPtr Expr::sub(ExprPtr a, ExprPtr b) {
  if (a->kind() == Kind::constant && b->kind() == Kind::constant)
    return constant(a->constant_value() - b->constant_value());
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return std::make_shared<Expr>(Kind::sub, 0.0, -1, std::move(a), std::move(b));
}

ExprPtr Expr::mul(ExprPtr a, ExprPtr b) {
  if (a->kind() == Kind::constant && b->kind() == Kind::constant)
    return constant(a->constant_value() * b->constant_value());
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return std::make_shared<Expr>(Kind::mul, 0.0, -1, std::move(a), std::move(b));
}

ExprPtr Expr::div(ExprPtr a, ExprPtr b) {
  if (a->kind() == Kind::constant && b->kind() == Kind::constant && b->constant_value() != 0.0)
    return constant(a->constant_value() / b->constant_value());
  if (is_const(a, 0.0)) return constant(0.0);
  if (is_const(b, 1.0)) return a;
  return std::make_shared<Expr>(Kind::div, 0.0, -1, std::move(a), std::move(b));
}

ExprPtr Expr::pow(ExprPtr base, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return base;
  if (base->kind() == Kind::constant) return constant(std::pow(base->constant_value(), exponent));
  return std::make_shared<Expr>(Kind::pow, exponent, -1, std::move(base), nullptr);
}

ExprPtr Expr::neg(ExprPtr a) {
  if (a->kind() == Kind::constant) return constant(-a->constant_value());
  if (a->kind() == Kind::neg) return a->lhs_;
  return std::make_shared<Expr>(Kind::neg, 0.0, -1, std::move(a), nullptr);
}

ExprPtr Expr::apply(Kind fn, ExprPtr a) {
  if (a->kind() == Kind::constant) {
    const double v = a->constant_value();
    switch (fn) {
      case Kind::sin: return constant(std::sin(v));
      case Kind::cos: return constant(std::cos(v));
      case Kind::exp: return constant(std::exp(v));
      case Kind::sqrt: return constant(std::sqrt(v));
      default: break;
    }
  }
  return std::make_shared<Expr>(fn, 0.0, -1, std::move(a), nullptr);
}

double Expr::eval(const Eigen::VectorXd& vars) const {
  switch (kind_) {
    case Kind::constant: return value_;
    case Kind::variable: return vars[var_];
    case Kind::add: return lhs_->eval(vars) + rhs_->eval(vars);
    case Kind::sub: return lhs_->eval(vars) - rhs_->eval(vars);
    case Kind::mul: return lhs_->eval(vars) * rhs_->eval(vars);
    case Kind::div: return lhs_->eval(vars) / rhs_->eval(vars);
    case Kind::pow: return std::pow(lhs_->eval(vars), value_);
    case Kind::neg: return -lhs_->eval(vars);
    case Kind::sin: return std::sin(lhs_->eval(vars));
    case Kind::cos: return std::cos(lhs_->eval(vars));
    case Kind::exp: return std::exp(lhs_->eval(vars));
    case Kind::sqrt: return std::sqrt(lhs_->eval(vars));
  }
  return 0.0;
}

ExprPtr Expr::diff(int var) const {
  switch (kind_) {
    case Kind::constant: return constant(0.0);
    case Kind::variable: return constant(var_ == var ? 1.0 : 0.0);
    case Kind::add: return add(lhs_->diff(var), rhs_->diff(var));
    case Kind::sub: return sub(lhs_->diff(var), rhs_->diff(var));
    case Kind::mul:
      return add(mul(lhs_->diff(var), rhs_), mul(lhs_, rhs_->diff(var)));
    case Kind::div:
      // (u/v)' = u'/v - u v'/v^2
      return sub(div(lhs_->diff(var), rhs_),
                 div(mul(lhs_, rhs_->diff(var)), pow(rhs_, 2.0)));
    case Kind::pow:
      // exponent is a literal: (u^c)' = c u^(c-1) u'
      return mul(mul(constant(value_), pow(lhs_, value_ - 1.0)), lhs_->diff(var));
    case Kind::neg: return neg(lhs_->diff(var));
    case Kind::sin: return mul(apply(Kind::cos, lhs_), lhs_->diff(var));
    case Kind::cos: return neg(mul(apply(Kind::sin, lhs_), lhs_->diff(var)));
    case Kind::exp: return mul(apply(Kind::exp, lhs_), lhs_->diff(var));
    case Kind::sqrt:
      return div(lhs_->diff(var), mul(constant(2.0), apply(Kind::sqrt, lhs_)));
  }
  return constant(0.0);
}

std::string Expr::to_string(const std::vector<std::string>& names) const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant: os << value_; break;
    case Kind::variable: os << names.at(static_cast<std::size_t>(var_)); break;
    case Kind::add: os << "(" << lhs_->to_string(names) << " + " << rhs_->to_string(names) << ")"; break;
    case Kind::sub: os << "(" << lhs_->to_string(names) << " - " << rhs_->to_string(names) << ")"; break;
    case Kind::mul: os << "(" << lhs_->to_string(names) << " * " << rhs_->to_string(names) << ")"; break;
    case Kind::div: os << "(" << lhs_->to_string(names) << " / " << rhs_->to_string(names) << ")"; break;
    case Kind::pow: os << "(" << lhs_->to_string(names) << " ^ " << value_ << ")"; break;
    case Kind::neg: os << "(-" << lhs_->to_string(names) << ")"; break;
    case Kind::sin: os << "sin(" << lhs_->to_string(names) << ")"; break;
    case Kind::cos: os << "cos(" << lhs_->to_string(names) << ")"; break;
    case Kind::exp: os << "exp(" << lhs_->to_string(names) << ")"; break;
    case Kind::sqrt: os << "sqrt(" << lhs_->to_string(names) << ")"; break;
  }
  return os.str();
}

namespace {

class Parser {
public:
  Parser(const std::string& text, const std::vector<std::string>& symbols)
      : text_(text), symbols_(symbols) {}

  ExprPtr parse() {
    ExprPtr e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression parse error at column " << (pos_ + 1) << ": " << msg
       << " in \"" << text_ << "\"";
    throw_usage(os.str());
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr expression() {
    ExprPtr e = term();
    for (;;) {
      if (consume('+')) e = Expr::add(e, term());
      else if (consume('-')) e = Expr::sub(e, term());
      else return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    for (;;) {
      if (consume('*')) e = Expr::mul(e, factor());
      else if (consume('/')) e = Expr::div(e, factor());
      else return e;
    }
  }

  ExprPtr factor() {
    ExprPtr base = unary();
    if (consume('^')) {
      ExprPtr exponent = factor();  // right-associative
      if (exponent->kind() != Expr::Kind::constant)
        fail("exponent must be a numeric constant");
      return Expr::pow(base, exponent->constant_value());
    }
    return base;
  }

  ExprPtr unary() {
    if (consume('-')) return Expr::neg(unary());
    if (consume('+')) return unary();
    return primary();
  }

  ExprPtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (consume('(')) {
      ExprPtr e = expression();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr number() {
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - start);
    return Expr::constant(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (peek() == '(') {
      Expr::Kind fn;
      if (name == "sin") fn = Expr::Kind::sin;
      else if (name == "cos") fn = Expr::Kind::cos;
      else if (name == "exp") fn = Expr::Kind::exp;
      else if (name == "sqrt") fn = Expr::Kind::sqrt;
      else { pos_ = start; fail("unknown function '" + name + "'"); }
      consume('(');
      ExprPtr arg = expression();
      if (!consume(')')) fail("expected ')' after function argument");
      return Expr::apply(fn, arg);
    }
    if (name == "pi") return Expr::constant(3.14159265358979323846);
    for (std::size_t i = 0; i < symbols_.size(); ++i)
      if (symbols_[i] == name) return Expr::variable(static_cast<int>(i));
    pos_ = start;
    fail("unknown symbol '" + name + "'");
  }

  const std::string& text_;
  const std::vector<std::string>& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse_expression(const std::string& text, const std::vector<std::string>& symbols) {
  return Parser(text, symbols).parse();
}

}  // namespace synckit
