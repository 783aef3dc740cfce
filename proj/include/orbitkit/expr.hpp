#pragma once

// Scalar expression language used for field components, chart maps and domain
// predicates.
//
//   expr    ::= term { ("+" | "-") term }
//   term    ::= unary { ("*" | "/") unary }
//   unary   ::= ("-" | "+") unary | power
//   power   ::= primary [ "^" unary ]            (right associative)
//   primary ::= number | constant | identifier | function "(" expr ")" | "(" expr ")"
//   function ::= sin | cos | tan | atan | exp | log | sqrt | abs | tanh
//   constant ::= pi | e
//   number  ::= digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]

#include "orbitkit/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbitkit {

enum class ExprKind : std::uint8_t { Literal, Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };

enum class Function : std::uint8_t { Sin, Cos, Tan, Atan, Exp, Log, Sqrt, Abs, Tanh };

std::string_view nameOf(Function fn);

/// Immutable expression tree. Copies share structure.
class Expr {
 public:
  static Expr literal(double value);
  static Expr constant(std::string_view name);
  static Expr variable(std::string name);
  static Expr binary(ExprKind kind, Expr lhs, Expr rhs);
  static Expr negate(Expr operand);
  static Expr call(Function fn, Expr argument);

  [[nodiscard]] ExprKind kind() const;
  [[nodiscard]] double literalValue() const;
  [[nodiscard]] const std::string& name() const;
  [[nodiscard]] Function function() const;
  [[nodiscard]] std::size_t arity() const;
  [[nodiscard]] const Expr& operand(std::size_t i) const;

  [[nodiscard]] std::set<std::string> freeVariables() const;
  /// False when the tree uses `abs`, whose derivative at 0 is defined as 0.
  [[nodiscard]] bool smooth() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr parse(std::string_view text);
std::string render(const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Forward-mode dual number with a fixed partial capacity. Variable counts
/// never exceed N+2 (coordinates plus the flow parameter).
struct Dual {
  static constexpr std::size_t kCapacity = 8;

  double value = 0.0;
  std::array<double, kCapacity> d{};
  std::uint8_t n = 0;

  static Dual constant(double v, std::size_t partials);
  static Dual variable(double v, std::size_t partials, std::size_t index);
};

struct DualValue {
  double primal = 0.0;
  std::vector<double> partials;
};

double evalReal(const Expr& e, const std::map<std::string, double>& bindings);
DualValue evalDual(const Expr& e, const std::map<std::string, double>& bindings,
                   const std::vector<std::string>& wrt);

/// Expression lowered to a postfix program over a fixed, ordered variable list.
/// Evaluation is pure and re-entrant.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  /// Throws UnknownVariable when `e` mentions a name outside `variables`.
  CompiledExpr(Expr e, std::vector<std::string> variables);

  [[nodiscard]] double operator()(std::span<const double> values) const;
  /// Value plus the gradient with respect to every program variable.
  [[nodiscard]] double withGradient(std::span<const double> values, std::span<double> gradient) const;
  [[nodiscard]] Dual dual(std::span<const Dual> values) const;

  [[nodiscard]] const Expr& source() const { return *source_; }
  [[nodiscard]] const std::vector<std::string>& variables() const { return variables_; }
  [[nodiscard]] bool smooth() const { return smooth_; }

 private:
  enum class Op : std::uint8_t { Push, Load, Add, Sub, Mul, Div, Pow, Neg, Call };
  struct Instr {
    Op op;
    Function fn = Function::Sin;
    std::uint32_t index = 0;
    double value = 0.0;
  };

  template <class T, class Load>
  T run(Load&& load) const;
  void emit(const Expr& e);

  std::shared_ptr<const Expr> source_;
  std::vector<std::string> variables_;
  std::vector<Instr> program_;
  std::size_t maxDepth_ = 0;
  bool smooth_ = true;
};

/// Names x0..x{n-1}, the positional variables every coordinate expression uses.
std::vector<std::string> coordinateNames(std::size_t n);

}  // namespace orbitkit
