#pragma once

// The unknown drift f of the agent dynamics and the formation references.
//
// Drift functions are either built in ("paper", "zero") or an arithmetic
// expression over x1..xn, e.g. "sin(x1) + 0.5 / (1 + exp(x2 / 10))".

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/gp.hpp"
#include "swarm_gp_et/linalg.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace swarm_gp_et {

namespace expr {

// Compiled expression tree over the state vector.
using Node = std::function<double(const Vector&)>;

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Node parse() {
    Node n = sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression '" + std::string(text_) + "' at " + std::to_string(pos_) +
                          ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Node sum() {
    Node lhs = product();
    for (;;) {
      if (eat('+')) {
        lhs = [a = lhs, b = product()](const Vector& x) { return a(x) + b(x); };
      } else if (eat('-')) {
        lhs = [a = lhs, b = product()](const Vector& x) { return a(x) - b(x); };
      } else {
        return lhs;
      }
    }
  }

  Node product() {
    Node lhs = unary();
    for (;;) {
      if (eat('*')) {
        lhs = [a = lhs, b = unary()](const Vector& x) { return a(x) * b(x); };
      } else if (eat('/')) {
        lhs = [a = lhs, b = unary()](const Vector& x) { return a(x) / b(x); };
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (eat('-')) return [a = unary()](const Vector& x) { return -a(x); };
    if (eat('+')) return unary();
    return power();
  }

  Node power() {
    Node base = primary();
    if (eat('^')) return [a = base, b = unary()](const Vector& x) { return std::pow(a(x), b(x)); };
    return base;
  }

  Node primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (eat('(')) {
      Node inner = sum();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Node number() {
    const std::string rest(text_.substr(pos_));
    std::size_t used = 0;
    const double v = std::stod(rest, &used);
    pos_ += used;
    return [v](const Vector&) { return v; };
  }

  Node identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (name == "pi") return [](const Vector&) { return std::numbers::pi; };
    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int k = std::stoi(name.substr(1));
      if (k < 1 || k > dim_) fail("variable " + name + " out of range x1..x" + std::to_string(dim_));
      return [idx = k - 1](const Vector& x) { return x(idx); };
    }
    using Fn = double (*)(double);
    static const std::pair<const char*, Fn> table[] = {
        {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }},   {"tanh", [](double v) { return std::tanh(v); }},
    };
    for (const auto& [fname, fn] : table) {
      if (name == fname) {
        if (!eat('(')) fail("expected '(' after " + name);
        Node arg = sum();
        if (!eat(')')) fail("expected ')'");
        return [fn, arg](const Vector& x) { return fn(arg(x)); };
      }
    }
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace expr

class Drift {
 public:
  /// sin(x1) + 0.5 / (1 + exp(x2 / 10)) on two-dimensional states.
  static Drift paper() {
    Drift d;
    d.name_ = "paper";
    d.dim_ = 2;
    d.fn_ = [](const Vector& x) { return std::sin(x(0)) + 0.5 / (1.0 + std::exp(x(1) / 10.0)); };
    // |d/dx1| <= 1 and |d/dx2| = 0.05 e^{x2/10} / (1 + e^{x2/10})^2 <= 0.0125.
    d.lipschitz_ = std::sqrt(1.0 + 0.0125 * 0.0125);
    return d;
  }

  static Drift zero(int dim) {
    Drift d;
    d.name_ = "zero";
    d.dim_ = dim;
    d.fn_ = [](const Vector&) { return 0.0; };
    d.lipschitz_ = 0.0;
    return d;
  }

  static Drift expression(const std::string& text, int dim) {
    Drift d;
    d.name_ = "expr:" + text;
    d.dim_ = dim;
    d.fn_ = expr::Parser(text, dim).parse();
    return d;
  }

  /// "paper", "zero" or "expr:<expression>".
  static Drift from_spec(const std::string& spec, int dim) {
    if (spec == "paper") {
      if (dim != 2) throw InvalidArgument("built-in drift 'paper' needs order 2");
      return paper();
    }
    if (spec == "zero") return zero(dim);
    if (spec.rfind("expr:", 0) == 0) return expression(spec.substr(5), dim);
    throw InvalidArgument("unknown drift '" + spec + "' (use paper, zero or expr:<expression>)");
  }

  double operator()(const Vector& x) const { return fn_(x); }
  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }

  /// Analytic Lipschitz constant when one is known.
  std::optional<double> known_lipschitz() const noexcept { return lipschitz_; }

 private:
  std::string name_;
  int dim_ = 0;
  std::function<double(const Vector&)> fn_;
  std::optional<double> lipschitz_;
};

/// Analytic constant if known, else a grid central-difference estimate with
/// the usual 1.2 safety factor.
inline double plant_lipschitz(const Drift& f, const Box& domain, double grid_step) {
  if (auto known = f.known_lipschitz()) return *known;
  const detail::Grid grid(domain, grid_step);
  std::vector<double> values(grid.total);
  for (long p = 0; p < grid.total; ++p) values[p] = f(grid.point(p));
  return 1.2 * detail::max_gradient_norm(grid, values);
}

struct ReferenceState {
  Vector s;           // s_i (length n)
  double highest = 0;  // s_r,i, the n-th derivative of s_i1
};

/// s_i1(t) = A sin(w t + phi_i), higher components its time derivatives.
struct SinusoidReference {
  double amplitude = 1.0;
  double frequency = 1.0;
  std::vector<double> phases;

  /// Phases 2 pi (i - 1) / N, i = 1..N.
  static SinusoidReference spread(int agent_count, double amplitude = 1.0,
                                  double frequency = 1.0) {
    SinusoidReference r{amplitude, frequency, {}};
    for (int i = 0; i < agent_count; ++i)
      r.phases.push_back(2.0 * std::numbers::pi * i / agent_count);
    return r;
  }

  ReferenceState at(double t, int agent, int order) const {
    const double phase = frequency * t + phases.at(agent);
    ReferenceState out;
    out.s.resize(order);
    double scale = amplitude;
    for (int k = 0; k < order; ++k) {
      out.s(k) = scale * std::sin(phase + k * std::numbers::pi / 2.0);
      scale *= frequency;
    }
    out.highest = scale * std::sin(phase + order * std::numbers::pi / 2.0);
    return out;
  }

  /// F_d >= sup_t |s_r,i(t)|.
  double highest_derivative_bound(int order) const {
    return amplitude * std::pow(std::abs(frequency), order);
  }
};

}  // namespace swarm_gp_et
