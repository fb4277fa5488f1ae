#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ddelyap {

/// Arithmetic expression over named variables:
///   numbers, pi, e, + - * / ^ (right associative), unary -, parentheses,
///   sin cos tan exp log sqrt tanh atan.
/// Evaluates with forward-mode derivatives so closed-form initial data and
/// delay functions come with exact slopes.
class Expression {
 public:
  struct Node;

  /// Throws ConfigError with the character position on malformed input or
  /// unknown identifiers.
  static Expression parse(const std::string& text, std::vector<std::string> variables);

  double eval(std::span<const double> vars) const;
  /// Value and partial derivative with respect to variable `wrt`.
  std::pair<double, double> eval_with_derivative(std::span<const double> vars, int wrt) const;

  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& variables() const noexcept { return vars_; }
  /// True when the expression reads the variable.
  bool uses(int var) const;

 private:
  std::string text_;
  std::vector<std::string> vars_;
  std::shared_ptr<const Node> root_;
};

}  // namespace ddelyap
