#pragma once

// A small arithmetic expression language used by custom densities, kernels
// and integrator weights in JSON configurations.
//
//   expr    := or
//   or      := and { "||" and }
//   and     := compare { "&&" compare }
//   compare := sum [ ("<" | "<=" | ">" | ">=" | "==" | "!=") sum ]
//   sum     := product { ("+" | "-") product }
//   product := unary { ("*" | "/") unary }
//   unary   := ("-" | "+" | "!") unary | power
//   power   := primary [ "^" unary ]
//   primary := number | "pi" | "e" | variable | call | "(" expr ")"
//   call    := name "(" expr { "," expr } ")"
//
// Variables are s, u, x and t. Functions: exp, log, sqrt, abs, pow(a, b),
// min(a, b), max(a, b) and ind(cond), which is 1 when cond holds and 0
// otherwise. Comparisons and logical operators evaluate to 1 or 0.

#include <string>
#include <vector>

namespace sdfields {

struct Vars {
  double s = 0.0;
  double u = 0.0;
  double x = 0.0;
  double t = 0.0;
};

class Expression {
 public:
  Expression() = default;

  /// Parses `text`; throws ConfigParse with the column of the offending token.
  static Expression parse(const std::string& text);
  /// Constant expression, used for numeric JSON values.
  static Expression constant(double value);

  double eval(const Vars& v) const;
  /// True when the expression reads variable `name` (one of "s", "u", "x", "t").
  bool uses(char name) const;
  bool empty() const { return program_.empty(); }
  const std::string& text() const { return text_; }

  enum class Op : unsigned char {
    push, var, neg, lnot, add, sub, mul, div, pow, lt, le, gt, ge, eq, ne, land, lor,
    exp, log, sqrt, abs, min, max, ind
  };
  struct Instr {
    Op op;
    double value;
    int index;
  };

 private:
  std::string text_;
  std::vector<Instr> program_;
  unsigned used_ = 0;
  int max_depth_ = 0;

  friend class ExpressionParser;
};

}  // namespace sdfields
