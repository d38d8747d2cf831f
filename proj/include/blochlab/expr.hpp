#pragma once

// Arithmetic expressions for configured symbol coefficients.
//
// Grammar (operator-precedence parser):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power           -- minus binds looser than '^'
//   power   := primary ('^' unary)?        -- right associative
//   primary := number | ident | '(' expr ')'
//   ident   := xi1 | xi2 | xi3 | abs2 | i
//
// xi1..xi3 are the momentum coordinates, abs2 the squared momentum norm,
// i the imaginary unit.  Parsing yields a closure evaluated at momentum xi;
// malformed input raises config_error with the offending position.

#include <cctype>
#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include "blochlab/common.hpp"

namespace blochlab {

using ExprFn = std::function<cplx(const Vec&)>;

namespace detail {

struct ExprParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit ExprParser(const std::string& text) : s(text) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw config_error("coefficient expression error at position " +
                       std::to_string(pos) + " in \"" + s + "\": " + what);
  }

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  ExprFn parse() {
    ExprFn e = expr();
    skip_ws();
    if (pos != s.size()) fail("unexpected trailing input");
    return e;
  }

  ExprFn expr() {
    ExprFn lhs = term();
    for (;;) {
      if (eat('+')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](const Vec& x) { return lhs(x) + rhs(x); };
      } else if (eat('-')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](const Vec& x) { return lhs(x) - rhs(x); };
      } else {
        return lhs;
      }
    }
  }

  ExprFn term() {
    ExprFn lhs = unary();
    for (;;) {
      if (eat('*')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](const Vec& x) { return lhs(x) * rhs(x); };
      } else if (eat('/')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](const Vec& x) { return lhs(x) / rhs(x); };
      } else {
        return lhs;
      }
    }
  }

  ExprFn unary() {
    if (eat('-')) {
      ExprFn inner = unary();
      return [inner](const Vec& x) { return -inner(x); };
    }
    return power();
  }

  ExprFn power() {
    ExprFn base = primary();
    if (eat('^')) {
      ExprFn exp = unary();  // right associative, negative exponents allowed
      return [base, exp](const Vec& x) { return std::pow(base(x), exp(x)); };
    }
    return base;
  }

  ExprFn primary() {
    skip_ws();
    if (pos >= s.size()) fail("expression ended early");
    char c = s[pos];
    if (c == '(') {
      ++pos;
      ExprFn e = expr();
      if (!eat(')')) fail("missing closing parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprFn number() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
            s[pos] == 'e' || s[pos] == 'E' ||
            ((s[pos] == '+' || s[pos] == '-') && pos > start &&
             (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
      ++pos;
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s.substr(start, pos - start), &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    if (used != pos - start) fail("malformed number");
    return [v](const Vec&) { return cplx(v, 0.0); };
  }

  ExprFn ident() {
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                              s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);
    auto coord = [](int idx) -> ExprFn {
      return [idx](const Vec& x) -> cplx {
        if (idx >= x.size())
          throw config_error("coordinate xi" + std::to_string(idx + 1) +
                             " undefined in dimension " +
                             std::to_string(x.size()));
        return cplx(x[idx], 0.0);
      };
    };
    if (name == "xi1") return coord(0);
    if (name == "xi2") return coord(1);
    if (name == "xi3") return coord(2);
    if (name == "abs2")
      return [](const Vec& x) { return cplx(x.squaredNorm(), 0.0); };
    if (name == "i") return [](const Vec&) { return cplx(0.0, 1.0); };
    fail("unknown identifier \"" + name + "\"");
  }
};

}  // namespace detail

inline ExprFn parse_coeff_expr(const std::string& text) {
  detail::ExprParser p(text);
  return p.parse();
}

}  // namespace blochlab
