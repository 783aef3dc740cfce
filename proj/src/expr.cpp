#include "orbitkit/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace orbitkit {

struct Expr::Node {
  ExprKind kind = ExprKind::Literal;
  double value = 0.0;
  std::string name;
  Function fn = Function::Sin;
  std::vector<Expr> args;
};

namespace {

struct FunctionName {
  std::string_view name;
  Function fn;
};

constexpr std::array<FunctionName, 9> kFunctions{{
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"atan", Function::Atan},
    {"exp", Function::Exp},
    {"log", Function::Log},
    {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},
    {"tanh", Function::Tanh},
}};

std::optional<Function> lookupFunction(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (f.name == name) return f.fn;
  }
  return std::nullopt;
}

double constantValue(std::string_view name) {
  return name == "pi" ? std::numbers::pi : std::numbers::e;
}

}  // namespace

std::string_view nameOf(Function fn) {
  for (const auto& f : kFunctions) {
    if (f.fn == fn) return f.name;
  }
  return "?";
}

Expr Expr::literal(double value) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Literal;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::constant(std::string_view name) {
  if (name != "pi" && name != "e") {
    throw Error(ErrorKind::UnknownVariable, "unknown constant '" + std::string(name) + "'");
  }
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Constant;
  n->name = std::string(name);
  n->value = constantValue(name);
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Neg;
  n->args = {std::move(operand)};
  return Expr(std::move(n));
}

Expr Expr::call(Function fn, Expr argument) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Call;
  n->fn = fn;
  n->args = {std::move(argument)};
  return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::literalValue() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Function Expr::function() const { return node_->fn; }
std::size_t Expr::arity() const { return node_->args.size(); }
const Expr& Expr::operand(std::size_t i) const { return node_->args.at(i); }

std::set<std::string> Expr::freeVariables() const {
  std::set<std::string> out;
  std::vector<const Expr*> stack{this};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (e->kind() == ExprKind::Variable) out.insert(e->name());
    for (const auto& a : e->node_->args) stack.push_back(&a);
  }
  return out;
}

bool Expr::smooth() const {
  if (kind() == ExprKind::Call && function() == Function::Abs) return false;
  return std::all_of(node_->args.begin(), node_->args.end(),
                     [](const Expr& a) { return a.smooth(); });
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::Literal: return a.literalValue() == b.literalValue();
    case ExprKind::Constant:
    case ExprKind::Variable: return a.name() == b.name();
    case ExprKind::Call:
      if (a.function() != b.function()) return false;
      break;
    default: break;
  }
  if (a.arity() != b.arity()) return false;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (!(a.operand(i) == b.operand(i))) return false;
  }
  return true;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Mul, a, b); }
Expr operator-(const Expr& a) { return Expr::negate(a); }

// ---------------------------------------------------------------------------
// Parser

namespace {

constexpr int kMaxNesting = 200;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parseAll() {
    Expr e = expression();
    skipSpace();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorKind::SyntaxError, message, pos_);
  }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxNesting) parser.fail("expression nested too deeply");
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  Expr expression() {
    DepthGuard guard(*this);
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(ExprKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::binary(ExprKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(ExprKind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expr::binary(ExprKind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    DepthGuard guard(*this);
    if (accept('-')) return Expr::negate(unary());
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return Expr::binary(ExprKind::Pow, base, unary());
    return base;
  }

  Expr primary() {
    skipSpace();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expression();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    const auto* first = text_.data() + start;
    const auto* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::literal(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const auto fn = lookupFunction(name);
      if (!fn) throw Error(ErrorKind::UnknownFunction, "unknown function '" + name + "'", start);
      ++pos_;
      skipSpace();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        throw Error(ErrorKind::ArityError, name + " expects 1 argument, got 0", start);
      }
      Expr arg = expression();
      std::size_t extra = 0;
      while (accept(',')) {
        expression();
        ++extra;
      }
      if (extra > 0) {
        throw Error(ErrorKind::ArityError,
                    name + " expects 1 argument, got " + std::to_string(extra + 1), start);
      }
      if (!accept(')')) fail("expected ')'");
      return Expr::call(*fn, arg);
    }
    if (name == "pi" || name == "e") return Expr::constant(name);
    if (lookupFunction(name)) {
      throw Error(ErrorKind::ArityError, name + " is a function and needs an argument", start);
    }
    return Expr::variable(name);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Neg: return 3;
    case ExprKind::Pow: return 4;
    default: return 5;
  }
}

std::string formatLiteral(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  if (v < 0) s = "(" + s + ")";
  return s;
}

void renderInto(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool parens) {
    if (parens) out += '(';
    renderInto(c, out);
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case ExprKind::Literal: out += formatLiteral(e.literalValue()); return;
    case ExprKind::Constant:
    case ExprKind::Variable: out += e.name(); return;
    case ExprKind::Neg:
      out += '-';
      child(e.operand(0), precedence(e.operand(0)) < 3);
      return;
    case ExprKind::Call:
      out += nameOf(e.function());
      child(e.operand(0), true);
      return;
    case ExprKind::Pow:
      child(e.operand(0), precedence(e.operand(0)) <= 4);
      out += '^';
      child(e.operand(1), precedence(e.operand(1)) < 3);
      return;
    default: {
      const int p = precedence(e);
      child(e.operand(0), precedence(e.operand(0)) < p);
      switch (e.kind()) {
        case ExprKind::Add: out += " + "; break;
        case ExprKind::Sub: out += " - "; break;
        case ExprKind::Mul: out += '*'; break;
        default: out += '/'; break;
      }
      child(e.operand(1), precedence(e.operand(1)) <= p);
      return;
    }
  }
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parseAll(); }

std::string render(const Expr& e) {
  std::string out;
  renderInto(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Dual arithmetic

Dual Dual::constant(double v, std::size_t partials) {
  Dual r;
  r.value = v;
  r.n = static_cast<std::uint8_t>(partials);
  return r;
}

Dual Dual::variable(double v, std::size_t partials, std::size_t index) {
  Dual r = constant(v, partials);
  r.d[index] = 1.0;
  return r;
}

namespace {

Dual scaled(const Dual& a, double value, double slope) {
  Dual r;
  r.value = value;
  r.n = a.n;
  for (std::size_t i = 0; i < a.n; ++i) r.d[i] = slope * a.d[i];
  return r;
}

Dual combine(const Dual& a, const Dual& b, double value, double da, double db) {
  Dual r;
  r.value = value;
  r.n = std::max(a.n, b.n);
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = da * a.d[i] + db * b.d[i];
  return r;
}

bool isConstant(const Dual& a) {
  for (std::size_t i = 0; i < a.n; ++i) {
    if (a.d[i] != 0.0) return false;
  }
  return true;
}

double realPow(double a, double b) { return std::pow(a, b); }

double applyFn(Function fn, double x) {
  switch (fn) {
    case Function::Sin: return std::sin(x);
    case Function::Cos: return std::cos(x);
    case Function::Tan: return std::tan(x);
    case Function::Atan: return std::atan(x);
    case Function::Exp: return std::exp(x);
    case Function::Log: return x > 0.0 ? std::log(x) : std::nan("");
    case Function::Sqrt: return x >= 0.0 ? std::sqrt(x) : std::nan("");
    case Function::Abs: return std::abs(x);
    case Function::Tanh: return std::tanh(x);
  }
  return std::nan("");
}

double fnSlope(Function fn, double x, double fx) {
  switch (fn) {
    case Function::Sin: return std::cos(x);
    case Function::Cos: return -std::sin(x);
    case Function::Tan: return 1.0 + fx * fx;
    case Function::Atan: return 1.0 / (1.0 + x * x);
    case Function::Exp: return fx;
    case Function::Log: return 1.0 / x;
    case Function::Sqrt: return 0.5 / fx;
    case Function::Abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Function::Tanh: return 1.0 - fx * fx;
  }
  return std::nan("");
}

struct RealOps {
  using T = double;
  static T lit(double v, std::size_t) { return v; }
  static T add(T a, T b) { return a + b; }
  static T sub(T a, T b) { return a - b; }
  static T mul(T a, T b) { return a * b; }
  static T div(T a, T b) { return a / b; }
  static T neg(T a) { return -a; }
  static T pow(T a, T b) { return realPow(a, b); }
  static T call(Function fn, T a) { return applyFn(fn, a); }
  static bool finite(const T& a) { return std::isfinite(a); }
};

struct DualOps {
  using T = Dual;
  static T lit(double v, std::size_t n) { return Dual::constant(v, n); }
  static T add(const T& a, const T& b) { return combine(a, b, a.value + b.value, 1.0, 1.0); }
  static T sub(const T& a, const T& b) { return combine(a, b, a.value - b.value, 1.0, -1.0); }
  static T mul(const T& a, const T& b) { return combine(a, b, a.value * b.value, b.value, a.value); }
  static T div(const T& a, const T& b) {
    const double q = a.value / b.value;
    return combine(a, b, q, 1.0 / b.value, -q / b.value);
  }
  static T neg(const T& a) { return scaled(a, -a.value, -1.0); }
  static T pow(const T& a, const T& b) {
    const double value = realPow(a.value, b.value);
    if (isConstant(b)) {
      if (b.value == 0.0) return scaled(a, value, 0.0);
      return scaled(a, value, b.value * realPow(a.value, b.value - 1.0));
    }
    // General case d(a^b) = a^b (b' ln a + b a'/a), requires a > 0.
    const double lna = a.value > 0.0 ? std::log(a.value) : std::nan("");
    return combine(a, b, value, value * b.value / a.value, value * lna);
  }
  static T call(Function fn, const T& a) {
    const double fx = applyFn(fn, a.value);
    return scaled(a, fx, fnSlope(fn, a.value, fx));
  }
  static bool finite(const T& a) {
    if (!std::isfinite(a.value)) return false;
    for (std::size_t i = 0; i < a.n; ++i) {
      if (!std::isfinite(a.d[i])) return false;
    }
    return true;
  }
};

std::string_view opName(int op) {
  static constexpr std::array<std::string_view, 9> names{"literal", "variable", "+", "-", "*",
                                                          "/",       "^",        "negation", "call"};
  return names[static_cast<std::size_t>(op)];
}

}  // namespace

// ---------------------------------------------------------------------------
// Compiled programs

CompiledExpr::CompiledExpr(Expr e, std::vector<std::string> variables)
    : source_(std::make_shared<const Expr>(std::move(e))), variables_(std::move(variables)) {
  if (variables_.size() > Dual::kCapacity) {
    throw Error(ErrorKind::DimensionMismatch, "too many variables for forward-mode evaluation");
  }
  emit(*source_);
  smooth_ = source_->smooth();
  std::size_t depth = 0;
  for (const auto& ins : program_) {
    switch (ins.op) {
      case Op::Push:
      case Op::Load: ++depth; break;
      case Op::Neg:
      case Op::Call: break;
      default: --depth; break;
    }
    maxDepth_ = std::max(maxDepth_, depth);
  }
}

void CompiledExpr::emit(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Literal:
    case ExprKind::Constant: program_.push_back({Op::Push, Function::Sin, 0, e.literalValue()}); return;
    case ExprKind::Variable: {
      const auto it = std::find(variables_.begin(), variables_.end(), e.name());
      if (it == variables_.end()) {
        throw Error(ErrorKind::UnknownVariable, "unknown variable '" + e.name() + "'");
      }
      program_.push_back({Op::Load, Function::Sin,
                          static_cast<std::uint32_t>(it - variables_.begin()), 0.0});
      return;
    }
    case ExprKind::Neg:
      emit(e.operand(0));
      program_.push_back({Op::Neg});
      return;
    case ExprKind::Call:
      emit(e.operand(0));
      program_.push_back({Op::Call, e.function()});
      return;
    default: break;
  }
  emit(e.operand(0));
  emit(e.operand(1));
  switch (e.kind()) {
    case ExprKind::Add: program_.push_back({Op::Add}); break;
    case ExprKind::Sub: program_.push_back({Op::Sub}); break;
    case ExprKind::Mul: program_.push_back({Op::Mul}); break;
    case ExprKind::Div: program_.push_back({Op::Div}); break;
    default: program_.push_back({Op::Pow}); break;
  }
}

template <class Ops, class Load>
typename Ops::T runProgram(const auto& program, std::size_t maxDepth, std::size_t partials,
                           Load&& load) {
  using T = typename Ops::T;
  constexpr std::size_t kInline = 48;
  std::array<T, kInline> fixed{};
  std::vector<T> heap;
  T* stack = fixed.data();
  if (maxDepth > kInline) {
    heap.resize(maxDepth);
    stack = heap.data();
  }
  std::size_t top = 0;
  for (const auto& ins : program) {
    using Op = std::decay_t<decltype(ins.op)>;
    switch (ins.op) {
      case Op::Push: stack[top++] = Ops::lit(ins.value, partials); break;
      case Op::Load: stack[top++] = load(ins.index); break;
      case Op::Neg: stack[top - 1] = Ops::neg(stack[top - 1]); break;
      case Op::Call: stack[top - 1] = Ops::call(ins.fn, stack[top - 1]); break;
      default: {
        const T b = stack[--top];
        T& a = stack[top - 1];
        switch (ins.op) {
          case Op::Add: a = Ops::add(a, b); break;
          case Op::Sub: a = Ops::sub(a, b); break;
          case Op::Mul: a = Ops::mul(a, b); break;
          case Op::Div: a = Ops::div(a, b); break;
          default: a = Ops::pow(a, b); break;
        }
      }
    }
    if (!Ops::finite(stack[top - 1])) {
      std::string what(opName(static_cast<int>(ins.op)));
      if (ins.op == Op::Call) what = std::string(nameOf(ins.fn));
      throw Error(ErrorKind::NonFinite, "non-finite result from " + what);
    }
  }
  return stack[0];
}

double CompiledExpr::operator()(std::span<const double> values) const {
  if (values.size() < variables_.size()) {
    throw Error(ErrorKind::UnboundVariable, "expected " + std::to_string(variables_.size()) + " values");
  }
  return runProgram<RealOps>(program_, maxDepth_, 0,
                             [&](std::uint32_t i) { return values[i]; });
}

double CompiledExpr::withGradient(std::span<const double> values, std::span<double> gradient) const {
  if (values.size() < variables_.size()) {
    throw Error(ErrorKind::UnboundVariable, "expected " + std::to_string(variables_.size()) + " values");
  }
  const std::size_t n = variables_.size();
  const Dual r = runProgram<DualOps>(program_, maxDepth_, n, [&](std::uint32_t i) {
    return Dual::variable(values[i], n, i);
  });
  for (std::size_t i = 0; i < gradient.size(); ++i) gradient[i] = i < n ? r.d[i] : 0.0;
  return r.value;
}

Dual CompiledExpr::dual(std::span<const Dual> values) const {
  const std::size_t n = values.empty() ? 0 : values[0].n;
  return runProgram<DualOps>(program_, maxDepth_, n, [&](std::uint32_t i) { return values[i]; });
}

double evalReal(const Expr& e, const std::map<std::string, double>& bindings) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& v : e.freeVariables()) {
    const auto it = bindings.find(v);
    if (it == bindings.end()) throw Error(ErrorKind::UnboundVariable, "variable '" + v + "' is unbound");
    names.push_back(v);
    values.push_back(it->second);
  }
  return CompiledExpr(e, names)(values);
}

DualValue evalDual(const Expr& e, const std::map<std::string, double>& bindings,
                   const std::vector<std::string>& wrt) {
  if (wrt.size() > Dual::kCapacity) {
    throw Error(ErrorKind::DimensionMismatch, "too many differentiation variables");
  }
  std::vector<std::string> names = wrt;
  for (const auto& v : e.freeVariables()) {
    if (std::find(names.begin(), names.end(), v) == names.end()) names.push_back(v);
  }
  if (names.size() > Dual::kCapacity) {
    throw Error(ErrorKind::DimensionMismatch, "too many variables for forward-mode evaluation");
  }
  std::vector<Dual> values;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = bindings.find(names[i]);
    if (it == bindings.end()) {
      if (i < wrt.size() && !e.freeVariables().contains(names[i])) {
        values.push_back(Dual::variable(0.0, wrt.size(), i));
        continue;
      }
      throw Error(ErrorKind::UnboundVariable, "variable '" + names[i] + "' is unbound");
    }
    values.push_back(i < wrt.size() ? Dual::variable(it->second, wrt.size(), i)
                                    : Dual::constant(it->second, wrt.size()));
  }
  const CompiledExpr program(e, names);
  const Dual r = program.dual(values);
  DualValue out;
  out.primal = r.value;
  out.partials.assign(r.d.begin(), r.d.begin() + static_cast<std::ptrdiff_t>(wrt.size()));
  return out;
}

std::vector<std::string> coordinateNames(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

}  // namespace orbitkit
