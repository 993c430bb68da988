#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "almostreg/spaces.hpp"

namespace almostreg {

/// Compile failure or evaluation misuse, with the 0-based character offset.
class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Variable name to coordinate index of the evaluation point.
using VariableMap = std::map<std::string, std::size_t>;

/// `x` (when dim = 1) and x1..x<dim> for the coordinates of one point.
inline VariableMap coordinate_variables(const std::string& prefix, std::size_t dim, std::size_t offset = 0) {
  VariableMap vars;
  if (dim == 1) vars[prefix] = offset;
  for (std::size_t i = 0; i < dim; ++i) vars[prefix + std::to_string(i + 1)] = offset + i;
  return vars;
}

/// Variables of a two-point expression f(x, u) evaluated on the concatenation (x, u).
inline VariableMap pair_variables(std::size_t dim) {
  VariableMap vars = coordinate_variables("x", dim);
  vars.merge(coordinate_variables("u", dim, dim));
  return vars;
}

/**
 * Real-valued closed-form expression over named coordinates. Grammar:
 * + - * / ^ (right associative), unary minus, parentheses, numbers,
 * the constant pi and the functions sin cos tan exp log sqrt abs
 * (one argument) and pow min max (two arguments).
 */
class Expression {
 public:
  using Fn = std::function<double(const double*)>;

  Expression() = default;

  double operator()(const Point& p) const {
    if (p.size() < arity_) throw std::invalid_argument("Expression: point has too few coordinates for " + text_);
    return (*fn_)(p.data());
  }

  const std::string& text() const { return text_; }
  /// One past the largest coordinate index referenced.
  std::size_t arity() const { return arity_; }

  static Expression compile(const std::string& text, const VariableMap& vars);

 private:
  std::shared_ptr<const Fn> fn_;
  std::string text_;
  std::size_t arity_ = 0;
};

namespace detail {

class ExpressionParser {
 public:
  ExpressionParser(const std::string& s, const VariableMap& vars) : s_(s), vars_(vars) {}

  Expression::Fn parse() {
    Expression::Fn f = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return f;
  }

  std::size_t arity() const { return arity_; }

 private:
  using Fn = Expression::Fn;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) throw ExpressionError(std::string("expected '") + c + "'", pos_);
  }

  Fn expr() {
    Fn lhs = term();
    for (;;) {
      if (eat('+')) {
        lhs = [a = lhs, b = term()](const double* v) { return a(v) + b(v); };
      } else if (eat('-')) {
        lhs = [a = lhs, b = term()](const double* v) { return a(v) - b(v); };
      } else {
        return lhs;
      }
    }
  }

  Fn term() {
    Fn lhs = unary();
    for (;;) {
      if (eat('*')) {
        lhs = [a = lhs, b = unary()](const double* v) { return a(v) * b(v); };
      } else if (eat('/')) {
        lhs = [a = lhs, b = unary()](const double* v) { return a(v) / b(v); };
      } else {
        return lhs;
      }
    }
  }

  // -a^b parses as -(a^b)
  Fn unary() {
    if (eat('-')) return [a = unary()](const double* v) { return -a(v); };
    if (eat('+')) return unary();
    return power();
  }

  Fn power() {
    Fn base = primary();
    if (eat('^')) return [a = base, b = unary()](const double* v) { return std::pow(a(v), b(v)); };
    return base;
  }

  Fn primary() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Fn inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  Fn number() {
    const std::size_t start = pos_;
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(s_.substr(start), &used);
    } catch (const std::exception&) {
      throw ExpressionError("malformed number", start);
    }
    pos_ = start + used;
    return [value](const double*) { return value; };
  }

  Fn identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      std::vector<Fn> args{expr()};
      while (eat(',')) args.push_back(expr());
      expect(')');
      return call(name, std::move(args), start);
    }
    if (name == "pi") return [](const double*) { return std::numbers::pi; };
    const auto it = vars_.find(name);
    if (it == vars_.end()) throw ExpressionError("unknown symbol '" + name + "'", start);
    const std::size_t idx = it->second;
    arity_ = std::max(arity_, idx + 1);
    return [idx](const double* v) { return v[idx]; };
  }

  Fn call(const std::string& name, std::vector<Fn> args, std::size_t at) {
    static const std::map<std::string, double (*)(double)> unary_fns{
        {"sin", [](double a) { return std::sin(a); }},   {"cos", [](double a) { return std::cos(a); }},
        {"tan", [](double a) { return std::tan(a); }},   {"exp", [](double a) { return std::exp(a); }},
        {"log", [](double a) { return std::log(a); }},   {"sqrt", [](double a) { return std::sqrt(a); }},
        {"abs", [](double a) { return std::abs(a); }},
    };
    static const std::map<std::string, double (*)(double, double)> binary_fns{
        {"pow", [](double a, double b) { return std::pow(a, b); }},
        {"min", [](double a, double b) { return std::min(a, b); }},
        {"max", [](double a, double b) { return std::max(a, b); }},
    };
    if (const auto it = unary_fns.find(name); it != unary_fns.end()) {
      if (args.size() != 1) throw ExpressionError(name + " takes one argument", at);
      return [f = it->second, a = std::move(args[0])](const double* v) { return f(a(v)); };
    }
    if (const auto it = binary_fns.find(name); it != binary_fns.end()) {
      if (args.size() != 2) throw ExpressionError(name + " takes two arguments", at);
      return [f = it->second, a = std::move(args[0]), b = std::move(args[1])](const double* v) {
        return f(a(v), b(v));
      };
    }
    throw ExpressionError("unknown function '" + name + "'", at);
  }

  const std::string& s_;
  const VariableMap& vars_;
  std::size_t pos_ = 0;
  std::size_t arity_ = 0;
};

}  // namespace detail

inline Expression Expression::compile(const std::string& text, const VariableMap& vars) {
  detail::ExpressionParser parser(text, vars);
  Expression e;
  e.fn_ = std::make_shared<const Fn>(parser.parse());
  e.text_ = text;
  e.arity_ = parser.arity();
  return e;
}

}  // namespace almostreg
