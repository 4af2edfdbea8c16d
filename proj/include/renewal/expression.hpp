#pragma once

// Small arithmetic expression language in one variable, used for rates and
// test functions given on the command line or in scenario files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'a' | 'x' | 'pi' | name '(' expr (',' expr)* ')' | '(' expr ')'

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "renewal/errors.hpp"

namespace renewal {

class ExpressionError : public Error {
 public:
  using Error::Error;
};

class Expression {
 public:
  explicit Expression(std::string source) : source_(std::move(source)) {
    Parser parser{source_};
    root_ = parser.parse();
  }

  [[nodiscard]] double operator()(double a) const { return root_(a); }
  [[nodiscard]] const std::string& source() const { return source_; }

  // Fourth-order central difference; one-sided second order near a = 0.
  [[nodiscard]] double derivative(double a) const {
    const double step = 1e-4 * std::max(1.0, std::abs(a));
    if (a < 2.0 * step) {
      const double s = 1e-5;
      return (-3.0 * root_(a) + 4.0 * root_(a + s) - root_(a + 2.0 * s)) / (2.0 * s);
    }
    return (-root_(a + 2 * step) + 8 * root_(a + step) - 8 * root_(a - step) + root_(a - 2 * step)) /
           (12.0 * step);
  }

 private:
  using Node = std::function<double(double)>;

  struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    Node parse() {
      Node n = expr();
      skip();
      if (pos != text.size()) fail("unexpected trailing input");
      return n;
    }

    [[noreturn]] void fail(const std::string& what) const {
      throw ExpressionError("cannot parse expression '" + std::string(text) + "' at offset " +
                            std::to_string(pos) + ": " + what);
    }
    void skip() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    Node expr() {
      Node left = term();
      for (;;) {
        if (accept('+')) {
          left = [l = left, r = term()](double a) { return l(a) + r(a); };
        } else if (accept('-')) {
          left = [l = left, r = term()](double a) { return l(a) - r(a); };
        } else {
          return left;
        }
      }
    }
    Node term() {
      Node left = unary();
      for (;;) {
        if (accept('*')) {
          left = [l = left, r = unary()](double a) { return l(a) * r(a); };
        } else if (accept('/')) {
          left = [l = left, r = unary()](double a) { return l(a) / r(a); };
        } else {
          return left;
        }
      }
    }
    Node unary() {
      if (accept('-')) return [u = unary()](double a) { return -u(a); };
      if (accept('+')) return unary();
      return power();
    }
    Node power() {
      Node base = primary();
      if (accept('^')) return [b = base, e = unary()](double a) { return std::pow(b(a), e(a)); };
      return base;
    }
    Node primary() {
      skip();
      if (pos >= text.size()) fail("unexpected end of input");
      if (accept('(')) {
        Node inner = expr();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      const char c = text[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c))) return name();
      fail(std::string("unexpected character '") + c + "'");
    }
    Node number() {
      const char* begin = text.data() + pos;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos += static_cast<std::size_t>(end - begin);
      return [v](double) { return v; };
    }
    Node name() {
      const std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
      const std::string id(text.substr(start, pos - start));
      if (!accept('(')) {
        if (id == "a" || id == "x") return [](double a) { return a; };
        if (id == "pi") return [](double) { return std::numbers::pi; };
        fail("unknown identifier '" + id + "'");
      }
      std::vector<Node> args{expr()};
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("expected ')'");
      return call(id, std::move(args));
    }
    Node call(const std::string& id, std::vector<Node> args) {
      auto unary_fn = [&](double (*fn)(double)) -> Node {
        if (args.size() != 1) fail(id + " takes one argument");
        return [fn, x = args[0]](double a) { return fn(x(a)); };
      };
      auto binary_fn = [&](auto fn) -> Node {
        if (args.size() != 2) fail(id + " takes two arguments");
        return [fn, x = args[0], y = args[1]](double a) { return fn(x(a), y(a)); };
      };
      if (id == "exp") return unary_fn([](double v) { return std::exp(v); });
      if (id == "log") return unary_fn([](double v) { return std::log(v); });
      if (id == "sqrt") return unary_fn([](double v) { return std::sqrt(v); });
      if (id == "sin") return unary_fn([](double v) { return std::sin(v); });
      if (id == "cos") return unary_fn([](double v) { return std::cos(v); });
      if (id == "tanh") return unary_fn([](double v) { return std::tanh(v); });
      if (id == "abs") return unary_fn([](double v) { return std::abs(v); });
      if (id == "step") return unary_fn([](double v) { return v >= 0.0 ? 1.0 : 0.0; });
      if (id == "min") return binary_fn([](double x, double y) { return std::min(x, y); });
      if (id == "max") return binary_fn([](double x, double y) { return std::max(x, y); });
      if (id == "pow") return binary_fn([](double x, double y) { return std::pow(x, y); });
      fail("unknown function '" + id + "'");
    }
  };

  std::string source_;
  Node root_;
};

}  // namespace renewal
