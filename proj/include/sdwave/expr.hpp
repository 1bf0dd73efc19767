#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"

namespace sdwave {

enum class Var : unsigned { x = 1u, y = 2u, t = 4u, s = 8u };

enum class Func { sin, cos, exp, log, abs, sqrt };

/// Values of the free variables at one evaluation point.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
  double s = 0.0;
};

/// Immutable arithmetic expression tree.
///
/// Nodes are shared, so copies are cheap and an Expr can be evaluated from
/// several threads at once.
class Expr {
 public:
  enum class Kind { number, pi, variable, negate, add, sub, mul, div, pow, call };

  struct Node {
    Kind kind = Kind::number;
    double value = 0.0;
    Var var = Var::x;
    Func func = Func::sin;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  Expr() : root_(std::make_shared<Node>()) {}
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {
    variables_ = collect(*root_);
  }

  static Expr number(double v) {
    auto n = std::make_shared<Node>();
    n->value = v;
    return Expr(std::move(n));
  }

  const Node& root() const noexcept { return *root_; }

  /// Bitmask of Var values referenced anywhere in the tree.
  unsigned variables() const noexcept { return variables_; }
  bool uses(Var v) const noexcept { return (variables_ & static_cast<unsigned>(v)) != 0; }

  double operator()(const Point& p) const { return eval(*root_, p); }

  /// Fully parenthesised rendering that parses back to the same tree.
  std::string to_string() const { return render(*root_); }

 private:
  static unsigned collect(const Node& n) {
    unsigned m = n.kind == Kind::variable ? static_cast<unsigned>(n.var) : 0u;
    if (n.lhs) m |= collect(*n.lhs);
    if (n.rhs) m |= collect(*n.rhs);
    return m;
  }

  static double checked(double r, const char* what) {
    if (!std::isfinite(r)) throw DomainFault(std::string(what) + " produced a non-finite value");
    return r;
  }

  static double eval(const Node& n, const Point& p) {
    switch (n.kind) {
      case Kind::number:
        return n.value;
      case Kind::pi:
        return std::numbers::pi;
      case Kind::variable:
        switch (n.var) {
          case Var::x: return p.x;
          case Var::y: return p.y;
          case Var::t: return p.t;
          case Var::s: return p.s;
        }
        return 0.0;
      case Kind::negate:
        return -eval(*n.lhs, p);
      case Kind::add:
        return checked(eval(*n.lhs, p) + eval(*n.rhs, p), "addition");
      case Kind::sub:
        return checked(eval(*n.lhs, p) - eval(*n.rhs, p), "subtraction");
      case Kind::mul:
        return checked(eval(*n.lhs, p) * eval(*n.rhs, p), "multiplication");
      case Kind::div: {
        const double den = eval(*n.rhs, p);
        if (den == 0.0) throw DomainFault("division by zero");
        return checked(eval(*n.lhs, p) / den, "division");
      }
      case Kind::pow:
        return checked(std::pow(eval(*n.lhs, p), eval(*n.rhs, p)), "power");
      case Kind::call: {
        const double a = eval(*n.lhs, p);
        switch (n.func) {
          case Func::sin: return std::sin(a);
          case Func::cos: return std::cos(a);
          case Func::exp: return checked(std::exp(a), "exp");
          case Func::abs: return std::abs(a);
          case Func::log:
            if (!(a > 0.0)) throw DomainFault("log of non-positive value");
            return std::log(a);
          case Func::sqrt:
            if (a < 0.0) throw DomainFault("sqrt of negative value");
            return std::sqrt(a);
        }
        return 0.0;
      }
    }
    return 0.0;
  }

  static std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), end);
    if (v < 0.0) return "(" + s + ")";
    return s;
  }

  static std::string render(const Node& n) {
    static constexpr std::array<const char*, 6> names{"sin", "cos", "exp", "log", "abs", "sqrt"};
    static constexpr std::array<const char*, 4> vars{"x", "y", "t", "s"};
    switch (n.kind) {
      case Kind::number: return format_number(n.value);
      case Kind::pi: return "pi";
      case Kind::variable: {
        const auto bit = static_cast<unsigned>(n.var);
        return vars[bit == 1 ? 0 : bit == 2 ? 1 : bit == 4 ? 2 : 3];
      }
      case Kind::negate: return "(-" + render(*n.lhs) + ")";
      case Kind::add: return "(" + render(*n.lhs) + " + " + render(*n.rhs) + ")";
      case Kind::sub: return "(" + render(*n.lhs) + " - " + render(*n.rhs) + ")";
      case Kind::mul: return "(" + render(*n.lhs) + " * " + render(*n.rhs) + ")";
      case Kind::div: return "(" + render(*n.lhs) + " / " + render(*n.rhs) + ")";
      case Kind::pow: return "(" + render(*n.lhs) + " ^ " + render(*n.rhs) + ")";
      case Kind::call:
        return std::string(names[static_cast<std::size_t>(n.func)]) + "(" + render(*n.lhs) + ")";
    }
    return {};
  }

  std::shared_ptr<const Node> root_;
  unsigned variables_ = 0;
};

namespace detail {

// Recursive descent over
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr ')' | '(' expr ')'
class ExprParser {
 public:
  using NodePtr = std::shared_ptr<const Expr::Node>;

  ExprParser(std::string_view text, const std::map<std::string, double>& constants)
      : text_(text), constants_(constants) {}

  Expr parse() {
    NodePtr root = expr();
    skip_ws();
    if (pos_ != text_.size()) {
      fail("unexpected '" + std::string(1, text_[pos_]) + "', expected operator or end of input");
    }
    return Expr(std::move(root));
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Expr::Kind k, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Expr::Kind::add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Expr::Kind::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Expr::Kind::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Expr::Kind::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Expr::Kind::negate, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Expr::Kind::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input, expected number, name or '('");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected '" + std::string(1, c) + "', expected number, name or '('");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto* first = text_.data() + start;
    const auto* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail("malformed number");
    }
    auto n = std::make_shared<Expr::Node>();
    n->value = v;
    return n;
  }

  NodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string id(text_.substr(start, pos_ - start));
    static const std::map<std::string, Func> funcs{{"sin", Func::sin}, {"cos", Func::cos},
                                                   {"exp", Func::exp}, {"log", Func::log},
                                                   {"abs", Func::abs}, {"sqrt", Func::sqrt}};
    if (auto f = funcs.find(id); f != funcs.end()) {
      if (!accept('(')) fail("expected '(' after function '" + id + "'");
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Kind::call;
      n->func = f->second;
      n->lhs = std::move(arg);
      return n;
    }
    auto n = std::make_shared<Expr::Node>();
    if (id == "pi") {
      n->kind = Expr::Kind::pi;
    } else if (id == "x" || id == "y" || id == "t" || id == "s") {
      n->kind = Expr::Kind::variable;
      n->var = id == "x" ? Var::x : id == "y" ? Var::y : id == "t" ? Var::t : Var::s;
    } else if (auto c = constants_.find(id); c != constants_.end()) {
      n->value = c->second;
    } else {
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    return n;
  }

  std::string_view text_;
  const std::map<std::string, double>& constants_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses arithmetic text. Identifiers other than x, y, t, s, pi and the
/// function names must appear in `constants`.
inline Expr parse(std::string_view text, const std::map<std::string, double>& constants = {}) {
  return detail::ExprParser(text, constants).parse();
}

struct Sampled {
  Field field;
  /// max |e| over boundary grid points; nonzero means the data does not
  /// vanish on the boundary (a warning, not an error).
  double boundary_mismatch = 0.0;
};

/// Evaluates `e` at every interior node (and measures it on the boundary).
inline Sampled sample(const Expr& e, const Domain& d, double t = 0.0) {
  if (e.uses(Var::s)) throw UsageError("grid expressions may not reference 's'");
  if (d.dimension() == 1 && e.uses(Var::y)) {
    throw UsageError("expression references 'y' on a 1D domain");
  }
  Sampled out{Field(d), 0.0};
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto c = d.coordinates(k);
    try {
      out.field[k] = e(Point{c[0], c[1], t, 0.0});
    } catch (const DomainFault& fault) {
      throw DomainFault("sampling '" + e.to_string() + "' failed at node " + std::to_string(k) +
                        " (x=" + std::to_string(c[0]) + ", y=" + std::to_string(c[1]) +
                        "): " + fault.what());
    }
  }
  for (const auto& c : d.boundary_points()) {
    try {
      out.boundary_mismatch = std::max(out.boundary_mismatch, std::abs(e(Point{c[0], c[1], t, 0.0})));
    } catch (const DomainFault&) {
      out.boundary_mismatch = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

}  // namespace sdwave
