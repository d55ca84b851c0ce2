#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

namespace synckit {

// Closed-form scalar expressions over named state symbols, with exact
// symbolic differentiation. Supports + - * / ^, unary minus, sin, cos,
// exp, sqrt, numeric literals and parentheses. Exponents must fold to a
// constant so the derivative stays inside the same function family.
class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
public:
  enum class Kind { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, sqrt };

  Expr(Kind kind, double value, int var, ExprPtr lhs, ExprPtr rhs)
      : kind_(kind), value_(value), var_(var), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

  Kind kind() const { return kind_; }
  double constant_value() const { return value_; }

  double eval(const Eigen::VectorXd& vars) const;
  ExprPtr diff(int var) const;
  std::string to_string(const std::vector<std::string>& names) const;

  static ExprPtr constant(double v);
  static ExprPtr variable(int index);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
  static ExprPtr mul(ExprPtr a, ExprPtr b);
  static ExprPtr div(ExprPtr a, ExprPtr b);
  static ExprPtr pow(ExprPtr base, double exponent);
  static ExprPtr neg(ExprPtr a);
  static ExprPtr apply(Kind fn, ExprPtr a);

private:
  Kind kind_;
  double value_ = 0.0;  // constant value, or the exponent for pow
  int var_ = -1;
  ExprPtr lhs_, rhs_;
};

// Parses `text` over the given ordered symbol list. Unknown symbols and
// syntax errors raise Error(usage) with a column diagnostic.
ExprPtr parse_expression(const std::string& text, const std::vector<std::string>& symbols);

}  // namespace synckit
