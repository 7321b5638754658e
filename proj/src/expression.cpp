#include "sdfields/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sdfields/errors.hpp"

namespace sdfields {

namespace {

constexpr int kMaxStack = 64;

int var_index(char c) {
  switch (c) {
    case 's': return 0;
    case 'u': return 1;
    case 'x': return 2;
    case 't': return 3;
    default: return -1;
  }
}

}  // namespace

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& text) : text_(text) {}

  Expression run() {
    Expression e;
    e.text_ = text_;
    out_ = &e;
    parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    if (depth_ != 1) fail("malformed expression");
    return e;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression \"" << text_ << "\", column " << pos_ + 1 << ": " << what;
    throw ConfigParse(os.str());
  }

  void emit(Op op, double value = 0.0, int index = 0, int stack_delta = 0) {
    out_->program_.push_back({op, value, index});
    depth_ += stack_delta;
    if (depth_ > out_->max_depth_) out_->max_depth_ = depth_;
    if (depth_ > kMaxStack) fail("expression nests too deeply");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(const char* token) {
    skip_space();
    const std::size_t n = std::char_traits<char>::length(token);
    if (text_.compare(pos_, n, token) == 0) {
      pos_ += n;
      return true;
    }
    return false;
  }

  void expect(const char* token) {
    if (!accept(token)) fail(std::string("expected '") + token + "'");
  }

  void parse_or() {
    parse_and();
    while (accept("||")) {
      parse_and();
      emit(Op::lor, 0, 0, -1);
    }
  }

  void parse_and() {
    parse_compare();
    while (accept("&&")) {
      parse_compare();
      emit(Op::land, 0, 0, -1);
    }
  }

  void parse_compare() {
    parse_sum();
    Op op;
    if (accept("<=")) op = Op::le;
    else if (accept(">=")) op = Op::ge;
    else if (accept("==")) op = Op::eq;
    else if (accept("!=")) op = Op::ne;
    else if (accept("<")) op = Op::lt;
    else if (accept(">")) op = Op::gt;
    else return;
    parse_sum();
    emit(op, 0, 0, -1);
  }

  void parse_sum() {
    parse_product();
    while (true) {
      if (accept("+")) {
        parse_product();
        emit(Op::add, 0, 0, -1);
      } else if (accept("-")) {
        parse_product();
        emit(Op::sub, 0, 0, -1);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    while (true) {
      skip_space();
      // "**" is not part of the grammar; reject it explicitly.
      if (text_.compare(pos_, 2, "**") == 0) fail("use '^' for powers");
      if (accept("*")) {
        parse_unary();
        emit(Op::mul, 0, 0, -1);
      } else if (accept("/")) {
        parse_unary();
        emit(Op::div, 0, 0, -1);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    skip_space();
    if (text_.compare(pos_, 2, "!=") != 0 && accept("!")) {
      parse_unary();
      emit(Op::lnot);
    } else if (accept("-")) {
      parse_unary();
      emit(Op::neg);
    } else if (accept("+")) {
      parse_unary();
    } else {
      parse_power();
    }
  }

  void parse_power() {
    parse_primary();
    if (accept("^")) {
      parse_unary();
      emit(Op::pow, 0, 0, -1);
    }
  }

  void parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      emit(Op::push, value, 0, +1);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        ++pos_;
        parse_call(name, start);
        return;
      }
      if (name == "pi") {
        emit(Op::push, M_PI, 0, +1);
      } else if (name == "e") {
        emit(Op::push, M_E, 0, +1);
      } else if (name.size() == 1 && var_index(name[0]) >= 0) {
        const int idx = var_index(name[0]);
        out_->used_ |= 1u << idx;
        emit(Op::var, 0, idx, +1);
      } else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      return;
    }
    if (accept("(")) {
      parse_or();
      expect(")");
      return;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  void parse_call(const std::string& name, std::size_t start) {
    int args = 0;
    skip_space();
    if (!accept(")")) {
      do {
        parse_or();
        ++args;
      } while (accept(","));
      expect(")");
    }
    struct Fn {
      const char* name;
      Op op;
      int arity;
    };
    static constexpr Fn table[] = {{"exp", Op::exp, 1}, {"log", Op::log, 1},
                                   {"sqrt", Op::sqrt, 1}, {"abs", Op::abs, 1},
                                   {"ind", Op::ind, 1}, {"pow", Op::pow, 2},
                                   {"min", Op::min, 2}, {"max", Op::max, 2}};
    for (const auto& fn : table) {
      if (name == fn.name) {
        if (args != fn.arity) {
          pos_ = start;
          fail("function '" + name + "' takes " + std::to_string(fn.arity) + " argument(s)");
        }
        emit(fn.op, 0, 0, 1 - fn.arity);
        return;
      }
    }
    pos_ = start;
    fail("unknown function '" + name + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  Expression* out_ = nullptr;
};

Expression Expression::parse(const std::string& text) { return ExpressionParser(text).run(); }

Expression Expression::constant(double value) {
  Expression e;
  std::ostringstream os;
  os.precision(17);
  os << value;
  e.text_ = os.str();
  e.program_.push_back({Op::push, value, 0});
  e.max_depth_ = 1;
  return e;
}

bool Expression::uses(char name) const {
  const int idx = var_index(name);
  return idx >= 0 && (used_ & (1u << idx)) != 0;
}

double Expression::eval(const Vars& v) const {
  double stack[kMaxStack];
  int top = -1;
  const double vars[4] = {v.s, v.u, v.x, v.t};
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::push: stack[++top] = in.value; break;
      case Op::var: stack[++top] = vars[in.index]; break;
      case Op::neg: stack[top] = -stack[top]; break;
      case Op::lnot: stack[top] = stack[top] == 0.0 ? 1.0 : 0.0; break;
      case Op::exp: stack[top] = std::exp(stack[top]); break;
      case Op::log: stack[top] = std::log(stack[top]); break;
      case Op::sqrt: stack[top] = std::sqrt(stack[top]); break;
      case Op::abs: stack[top] = std::abs(stack[top]); break;
      case Op::ind: stack[top] = stack[top] != 0.0 ? 1.0 : 0.0; break;
      default: {
        const double b = stack[top--];
        double& a = stack[top];
        switch (in.op) {
          case Op::add: a = a + b; break;
          case Op::sub: a = a - b; break;
          case Op::mul: a = a * b; break;
          case Op::div: a = a / b; break;
          case Op::pow: a = std::pow(a, b); break;
          case Op::lt: a = a < b; break;
          case Op::le: a = a <= b; break;
          case Op::gt: a = a > b; break;
          case Op::ge: a = a >= b; break;
          case Op::eq: a = a == b; break;
          case Op::ne: a = a != b; break;
          case Op::land: a = (a != 0.0 && b != 0.0); break;
          case Op::lor: a = (a != 0.0 || b != 0.0); break;
          case Op::min: a = std::min(a, b); break;
          case Op::max: a = std::max(a, b); break;
          default: break;
        }
      }
    }
  }
  return top == 0 ? stack[0] : 0.0;
}

}  // namespace sdfields
