#include "plap/expr.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "plap/errors.hpp"

namespace plap {

namespace expr_detail {

struct Node {
  enum class Kind { Const, VarT, Coord, Unary, Binary };
  Kind kind = Kind::Const;
  double value = 0.0;  // Const
  int coord = 0;       // Coord, 1-based
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  std::shared_ptr<const Node> a, b;
  bool nonneg = false;  // provably >= 0 for every admissible input
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

bool integral_constant(const Node& n) {
  return n.kind == Node::Kind::Const && std::isfinite(n.value) &&
         std::nearbyint(n.value) == n.value && std::abs(n.value) < 9.0e15;
}

bool deduce_nonneg(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Const:
      return n.value >= 0.0;
    case Node::Kind::VarT:
      return false;
    case Node::Kind::Coord:
      return true;  // coordinates live in [0, length)
    case Node::Kind::Unary:
      switch (n.uop) {
        case UnaryOp::Abs:
        case UnaryOp::Exp:
          return true;
        default:
          return false;
      }
    case Node::Kind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Mul:
        case BinaryOp::Div:
          return n.a->nonneg && n.b->nonneg;
        case BinaryOp::Pow:
          return n.a->nonneg;
        default:
          return false;
      }
  }
  return false;
}

NodePtr finish(std::shared_ptr<Node> n) {
  n->nonneg = deduce_nonneg(*n);
  return n;
}

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->value = v;
  return finish(n);
}

NodePtr make_var_t() {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::VarT;
  return finish(n);
}

NodePtr make_coord(int index) {
  if (index < 1) throw PreconditionError("coordinate index must be >= 1");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Coord;
  n->coord = index;
  return finish(n);
}

NodePtr make_unary(UnaryOp op, NodePtr a) {
  // Fold negated literals so printing and reparsing round-trips exactly.
  if (op == UnaryOp::Neg && a->kind == Node::Kind::Const) return make_const(-a->value);
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->uop = op;
  n->a = std::move(a);
  return finish(n);
}

// Throws when a non-integer power has a base that is not provably
// nonnegative.  `offset` < 0 selects the programmatic error type.
NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b, long offset = -1) {
  if (op == BinaryOp::Pow) {
    const bool exponent_is_integer = integral_constant(*b);
    if (!exponent_is_integer && !a->nonneg) {
      const char* msg =
          "pow with non-integer exponent requires a nonnegative base; wrap the base in abs(...)";
      if (offset >= 0) throw ParseError(msg, static_cast<std::size_t>(offset));
      throw PreconditionError(msg);
    }
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->bop = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return finish(n);
}

[[noreturn]] void domain_error(const char* what) { throw EvalDomainError(what); }

double eval_node(const Node& n, double t, std::span<const double> x) {
  switch (n.kind) {
    case Node::Kind::Const:
      return n.value;
    case Node::Kind::VarT:
      return t;
    case Node::Kind::Coord: {
      if (static_cast<std::size_t>(n.coord) > x.size())
        domain_error("coordinate index exceeds the bound dimension");
      return x[static_cast<std::size_t>(n.coord - 1)];
    }
    case Node::Kind::Unary: {
      const double a = eval_node(*n.a, t, x);
      double r = 0.0;
      switch (n.uop) {
        case UnaryOp::Neg: r = -a; break;
        case UnaryOp::Abs: r = std::abs(a); break;
        case UnaryOp::Sign: r = (a > 0.0) ? 1.0 : (a < 0.0 ? -1.0 : 0.0); break;
        case UnaryOp::Sin: r = std::sin(a); break;
        case UnaryOp::Cos: r = std::cos(a); break;
        case UnaryOp::Exp: r = std::exp(a); break;
      }
      if (!std::isfinite(r)) domain_error("non-finite result in unary operation");
      return r;
    }
    case Node::Kind::Binary: {
      const double a = eval_node(*n.a, t, x);
      const double b = eval_node(*n.b, t, x);
      double r = 0.0;
      switch (n.bop) {
        case BinaryOp::Add: r = a + b; break;
        case BinaryOp::Sub: r = a - b; break;
        case BinaryOp::Mul: r = a * b; break;
        case BinaryOp::Div:
          if (b == 0.0) domain_error("division by zero");
          r = a / b;
          break;
        case BinaryOp::Pow:
          if (a == 0.0 && b < 0.0) domain_error("zero base with negative exponent");
          if (a < 0.0 && std::nearbyint(b) != b) domain_error("negative base with non-integer exponent");
          r = std::pow(a, b);
          break;
      }
      if (!std::isfinite(r)) domain_error("non-finite result in binary operation");
      return r;
    }
  }
  domain_error("corrupt expression node");
}

bool node_uses_t(const Node& n) {
  switch (n.kind) {
    case Node::Kind::VarT: return true;
    case Node::Kind::Unary: return node_uses_t(*n.a);
    case Node::Kind::Binary: return node_uses_t(*n.a) || node_uses_t(*n.b);
    default: return false;
  }
}

int node_max_coord(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Coord: return n.coord;
    case Node::Kind::Unary: return node_max_coord(*n.a);
    case Node::Kind::Binary: return std::max(node_max_coord(*n.a), node_max_coord(*n.b));
    default: return 0;
  }
}

bool node_equals(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Node::Kind::Const: return a.value == b.value;
    case Node::Kind::VarT: return true;
    case Node::Kind::Coord: return a.coord == b.coord;
    case Node::Kind::Unary: return a.uop == b.uop && node_equals(*a.a, *b.a);
    case Node::Kind::Binary:
      return a.bop == b.bop && node_equals(*a.a, *b.a) && node_equals(*a.b, *b.b);
  }
  return false;
}

// Printing precedence: additive 1, multiplicative 2, unary minus 3, power 4,
// atoms (literals, variables, function calls) 5.
int node_prec(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
      return 1;
    case Node::Kind::Unary:
      return n.uop == UnaryOp::Neg ? 3 : 5;
    case Node::Kind::Const:
      return n.value < 0.0 ? 3 : 5;
    default:
      return 5;
  }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
  if (node_prec(child) < min_prec) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Const: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Node::Kind::VarT:
      out += 't';
      return;
    case Node::Kind::Coord:
      out += 'x';
      out += std::to_string(n.coord);
      return;
    case Node::Kind::Unary:
      switch (n.uop) {
        case UnaryOp::Neg:
          out += '-';
          print_child(*n.a, 4, out);
          return;
        case UnaryOp::Abs: out += "abs("; break;
        case UnaryOp::Sign: out += "sign("; break;
        case UnaryOp::Sin: out += "sin("; break;
        case UnaryOp::Cos: out += "cos("; break;
        case UnaryOp::Exp: out += "exp("; break;
      }
      print_node(*n.a, out);
      out += ')';
      return;
    case Node::Kind::Binary: {
      const char* op = "";
      int lp = 0, rp = 0;
      switch (n.bop) {
        case BinaryOp::Add: op = " + "; lp = 1; rp = 2; break;
        case BinaryOp::Sub: op = " - "; lp = 1; rp = 2; break;
        case BinaryOp::Mul: op = "*"; lp = 2; rp = 3; break;
        case BinaryOp::Div: op = "/"; lp = 2; rp = 3; break;
        case BinaryOp::Pow: op = "^"; lp = 5; rp = 4; break;
      }
      print_child(*n.a, lp, out);
      out += op;
      print_child(*n.b, rp, out);
      return;
    }
  }
}

}  // namespace
}  // namespace expr_detail

using expr_detail::Node;
using expr_detail::NodePtr;

ExprAst ExprAst::constant(double v) { return ExprAst(expr_detail::make_const(v)); }
ExprAst ExprAst::var_t() { return ExprAst(expr_detail::make_var_t()); }
ExprAst ExprAst::coord(int index) { return ExprAst(expr_detail::make_coord(index)); }
ExprAst ExprAst::unary(UnaryOp op, ExprAst a) {
  return ExprAst(expr_detail::make_unary(op, std::move(a.root_)));
}
ExprAst ExprAst::binary(BinaryOp op, ExprAst a, ExprAst b) {
  return ExprAst(expr_detail::make_binary(op, std::move(a.root_), std::move(b.root_)));
}

double ExprAst::eval(double t, std::span<const double> x) const {
  if (!root_) throw PreconditionError("eval on an empty expression");
  return expr_detail::eval_node(*root_, t, x);
}

bool ExprAst::uses_t() const { return root_ && expr_detail::node_uses_t(*root_); }

int ExprAst::max_coord_index() const { return root_ ? expr_detail::node_max_coord(*root_) : 0; }

std::string ExprAst::to_string() const {
  if (!root_) return "";
  std::string out;
  expr_detail::print_node(*root_, out);
  return out;
}

bool ExprAst::equals(const ExprAst& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return expr_detail::node_equals(*root_, *other.root_);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };
  Kind kind = Kind::End;
  double number = 0.0;
  std::string ident;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::End;
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = Token::Kind::Plus; ++pos_; return;
      case '-': tok_.kind = Token::Kind::Minus; ++pos_; return;
      case '*': tok_.kind = Token::Kind::Star; ++pos_; return;
      case '/': tok_.kind = Token::Kind::Slash; ++pos_; return;
      case '^': tok_.kind = Token::Kind::Caret; ++pos_; return;
      case '(': tok_.kind = Token::Kind::LParen; ++pos_; return;
      case ')': tok_.kind = Token::Kind::RParen; ++pos_; return;
      case ',': tok_.kind = Token::Kind::Comma; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("invalid number literal", pos_);
      if (errno == ERANGE) throw ParseError("number literal out of range", pos_);
      tok_.kind = Token::Kind::Number;
      tok_.number = v;
      pos_ += static_cast<std::size_t>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = pos_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      tok_.kind = Token::Kind::Ident;
      tok_.ident = std::string(src_.substr(pos_, j - pos_));
      pos_ = j;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  NodePtr parse_all() {
    NodePtr e = expression();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::End) throw ParseError("unexpected trailing input", t.offset);
    return e;
  }

 private:
  NodePtr expression() {
    NodePtr left = term();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind == Token::Kind::Plus) {
        lex_.take();
        left = expr_detail::make_binary(BinaryOp::Add, left, term());
      } else if (t.kind == Token::Kind::Minus) {
        lex_.take();
        left = expr_detail::make_binary(BinaryOp::Sub, left, term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = factor();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind == Token::Kind::Star) {
        lex_.take();
        left = expr_detail::make_binary(BinaryOp::Mul, left, factor());
      } else if (t.kind == Token::Kind::Slash) {
        lex_.take();
        left = expr_detail::make_binary(BinaryOp::Div, left, factor());
      } else {
        return left;
      }
    }
  }

  NodePtr factor() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::Minus) {
      lex_.take();
      return expr_detail::make_unary(UnaryOp::Neg, factor());
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::Caret) {
      const std::size_t caret_off = t.offset;
      lex_.take();
      NodePtr expo = factor();  // right associative; exponent may be negated
      return expr_detail::make_binary(BinaryOp::Pow, base, expo,
                                      static_cast<long>(caret_off));
    }
    return base;
  }

  NodePtr atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Number:
        return expr_detail::make_const(t.number);
      case Token::Kind::LParen: {
        NodePtr e = expression();
        expect_rparen(t.offset);
        return e;
      }
      case Token::Kind::Ident:
        return ident_atom(std::move(t));
      default:
        throw ParseError("expected an operand", t.offset);
    }
  }

  NodePtr ident_atom(Token t) {
    const std::string& name = t.ident;
    if (name == "t") return expr_detail::make_var_t();
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        const int idx = std::atoi(name.c_str() + 1);
        if (idx < 1) throw ParseError("coordinate index must be >= 1", t.offset);
        return expr_detail::make_coord(idx);
      }
    }
    UnaryOp op;
    if (name == "abs") op = UnaryOp::Abs;
    else if (name == "sign") op = UnaryOp::Sign;
    else if (name == "sin") op = UnaryOp::Sin;
    else if (name == "cos") op = UnaryOp::Cos;
    else if (name == "exp") op = UnaryOp::Exp;
    else throw ParseError("unknown identifier '" + name + "'", t.offset);

    const Token& open = lex_.peek();
    if (open.kind != Token::Kind::LParen)
      throw ParseError("expected '(' after function name '" + name + "'", open.offset);
    lex_.take();
    NodePtr arg = expression();
    const Token& after = lex_.peek();
    if (after.kind == Token::Kind::Comma)
      throw ParseError("arity mismatch: '" + name + "' takes exactly one argument", after.offset);
    expect_rparen(open.offset);
    return expr_detail::make_unary(op, std::move(arg));
  }

  void expect_rparen(std::size_t open_offset) {
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::RParen)
      throw ParseError("expected ')' to close '(' at byte " + std::to_string(open_offset),
                       t.offset);
    lex_.take();
  }

  Lexer lex_;
};

}  // namespace

ExprAst parse(std::string_view source) { return ExprAst(Parser(source).parse_all()); }

// ---------------------------------------------------------------------------
// Condition audits
// ---------------------------------------------------------------------------

namespace {

nlohmann::json samples_json(std::span<const double> t_samples,
                            const std::vector<std::vector<double>>& x_samples) {
  nlohmann::json j;
  j["t"] = std::vector<double>(t_samples.begin(), t_samples.end());
  j["x"] = x_samples;
  return j;
}

void record_worst(ConditionReport& r, double t, const std::vector<double>& x, double value) {
  r.has_worst = true;
  r.worst_t = t;
  r.worst_x = x;
  r.worst_value = value;
}

void require_x_samples(const std::vector<std::vector<double>>& x_samples) {
  if (x_samples.empty()) throw PreconditionError("at least one coordinate sample is required");
}

}  // namespace

void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = nlohmann::json{{"condition", r.condition},
                     {"verdict", r.verdict},
                     {"samples", r.samples},
                     {"tolerances", r.tolerances}};
  if (r.has_worst)
    j["worst_case"] = {{"t", r.worst_t}, {"x", r.worst_x}, {"value", r.worst_value}};
  else
    j["worst_case"] = nullptr;
  if (!r.note.empty()) j["note"] = r.note;
}

SampleBox SampleBox::standard(int dim, std::span<const double> lengths, double t_max,
                              int t_count, int per_axis) {
  if (dim < 1) throw PreconditionError("SampleBox: dim must be >= 1");
  if (t_count < 3 || t_count % 2 == 0)
    throw PreconditionError("SampleBox: t_count must be odd and >= 3");
  SampleBox box;
  box.t.resize(static_cast<std::size_t>(t_count));
  const int half = (t_count - 1) / 2;
  for (int i = -half; i <= half; ++i)
    box.t[static_cast<std::size_t>(i + half)] = t_max * static_cast<double>(i) / half;
  // Lattice of per_axis^dim points in [0, lengths).
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  for (;;) {
    std::vector<double> p(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      const double L = lengths.empty() ? 1.0 : lengths[static_cast<std::size_t>(a)];
      p[static_cast<std::size_t>(a)] = L * idx[static_cast<std::size_t>(a)] / per_axis;
    }
    box.x.push_back(std::move(p));
    int a = dim - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == per_axis) {
      idx[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return box;
}

ConditionReport check_p1(const Nonlinearity& f, std::span<const double> t_samples,
                         const std::vector<std::vector<double>>& x_samples, OddnessTol tol) {
  require_x_samples(x_samples);
  const std::size_t n = t_samples.size();
  if (n < 3) throw PreconditionError("check_p1: need at least 3 t-samples");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(t_samples[i] < t_samples[i + 1]))
      throw PreconditionError("check_p1: t-samples must be strictly sorted");
  const double scale = std::max(std::abs(t_samples.front()), std::abs(t_samples.back()));
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(t_samples[i] + t_samples[n - 1 - i]) > 1e-12 * scale)
      throw PreconditionError("check_p1: t-samples must be symmetric about 0");

  ConditionReport rep;
  rep.condition = "p1";
  rep.samples = samples_json(t_samples, x_samples);
  rep.tolerances = {{"odd_abs", tol.abs_tol}, {"odd_rel", tol.rel_tol}};

  double worst_defect = 0.0;
  for (const auto& x : x_samples) {
    double prev = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < n; ++i) {
      double ft, fmt;
      try {
        ft = f.ast.eval(t_samples[i], x);
        fmt = f.ast.eval(-t_samples[i], x);
      } catch (const EvalDomainError& e) {
        rep.ok = false;
        rep.verdict = "fail";
        rep.note = std::string("evaluation domain error: ") + e.what();
        record_worst(rep, t_samples[i], x, std::numeric_limits<double>::quiet_NaN());
        return rep;
      }
      const double defect = std::abs(ft + fmt);
      const double bound = tol.abs_tol + tol.rel_tol * std::max(std::abs(ft), std::abs(fmt));
      if (defect > bound) {
        rep.ok = false;
        rep.verdict = "fail";
        rep.note = "oddness violated: |f(t,x) + f(-t,x)| exceeds tolerance";
        record_worst(rep, t_samples[i], x, ft + fmt);
        return rep;
      }
      if (defect > worst_defect) {
        worst_defect = defect;
        record_worst(rep, t_samples[i], x, ft + fmt);
      }
      if (have_prev && !(ft > prev)) {
        rep.ok = false;
        rep.verdict = "fail";
        rep.note = "strict monotonicity in t violated";
        record_worst(rep, t_samples[i], x, ft - prev);
        return rep;
      }
      prev = ft;
      have_prev = true;
    }
  }
  rep.ok = true;
  rep.verdict = "pass";
  return rep;
}

namespace {

ConditionReport check_envelope(const char* condition, const Nonlinearity& f,
                               std::span<const double> t_samples,
                               const std::vector<std::vector<double>>& x_samples,
                               nlohmann::json tolerances,
                               double (*envelope)(double t, const double* par),
                               const double* par) {
  require_x_samples(x_samples);
  ConditionReport rep;
  rep.condition = condition;
  rep.samples = samples_json(t_samples, x_samples);
  rep.tolerances = std::move(tolerances);

  double max_ratio = 0.0;
  for (const auto& x : x_samples) {
    for (double t : t_samples) {
      double ft;
      try {
        ft = f.ast.eval(t, x);
      } catch (const EvalDomainError& e) {
        rep.ok = false;
        rep.verdict = "fail";
        rep.note = std::string("evaluation domain error: ") + e.what();
        record_worst(rep, t, x, std::numeric_limits<double>::quiet_NaN());
        return rep;
      }
      const double ratio = std::abs(ft) / envelope(t, par);
      if (ratio > max_ratio) {
        max_ratio = ratio;
        record_worst(rep, t, x, ratio);
      }
    }
  }
  rep.tolerances["max_ratio"] = max_ratio;
  rep.ok = max_ratio <= 1.0 + 1e-12;
  rep.verdict = rep.ok ? "pass" : "fail";
  if (!rep.ok) rep.note = "growth envelope violated; worst_case.value is |f| / envelope";
  return rep;
}

}  // namespace

ConditionReport check_growth(const Nonlinearity& f, double b, double rho,
                             std::span<const double> t_samples,
                             const std::vector<std::vector<double>>& x_samples) {
  if (!(b > 0.0)) throw PreconditionError("check_growth: b must be positive");
  if (!(rho > 0.0)) throw PreconditionError("check_growth: rho must be positive");
  const double par[2] = {b, rho};
  return check_envelope(
      "p2", f, t_samples, x_samples, {{"b", b}, {"rho", rho}},
      [](double t, const double* p) { return p[0] * (1.0 + std::pow(std::abs(t), p[1])); }, par);
}

ConditionReport check_growth_critical(const Nonlinearity& f, double b, double c, double p_star,
                                      std::span<const double> t_samples,
                                      const std::vector<std::vector<double>>& x_samples) {
  if (!(b > 0.0) || !(c >= 0.0))
    throw PreconditionError("check_growth_critical: need b > 0 and c >= 0");
  if (!(p_star > 1.0)) throw PreconditionError("check_growth_critical: p_star must exceed 1");
  const double par[3] = {b, c, p_star};
  return check_envelope(
      "p3", f, t_samples, x_samples, {{"b", b}, {"c", c}, {"p_star", p_star}},
      [](double t, const double* p) { return p[0] + p[1] * std::pow(std::abs(t), p[2] - 1.0); },
      par);
}

std::vector<double> p4_grid(double t_min, int count) {
  if (!(t_min >= 1e-8)) throw PreconditionError("p4_grid: t_min must be >= 1e-8");
  if (count < 4) throw PreconditionError("p4_grid: need at least 4 points");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double ratio = std::log(t_min);  // from 1 down to t_min, geometric
  for (int k = 0; k < count; ++k)
    g[static_cast<std::size_t>(k)] = std::exp(ratio * k / (count - 1));
  g.front() = 1.0;
  g.back() = t_min;  // pin the endpoints against roundoff
  return g;
}

ConditionReport check_p4(const Nonlinearity& f, double p_star, std::span<const double> t_grid,
                         const std::vector<std::vector<double>>& x_samples, double threshold) {
  require_x_samples(x_samples);
  if (t_grid.size() < 4) throw PreconditionError("check_p4: need at least 4 grid points");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i + 1]))
      throw PreconditionError("check_p4: t-grid must be strictly decreasing");
  if (!(t_grid.back() >= 1e-8))
    throw PreconditionError("check_p4: smallest grid entry must be >= 1e-8");

  ConditionReport rep;
  rep.condition = "p4";
  rep.note = "finite-sample heuristic";
  rep.tolerances = {{"threshold", threshold}};

  std::vector<double> ratios;
  ratios.reserve(t_grid.size());
  for (double t : t_grid) {
    double inf_f = std::numeric_limits<double>::infinity();
    for (const auto& x : x_samples) {
      double ft;
      try {
        ft = f.ast.eval(t, x);
      } catch (const EvalDomainError& e) {
        rep.ok = false;
        rep.verdict = "not-consistent";
        rep.note = std::string("evaluation domain error: ") + e.what();
        record_worst(rep, t, x, std::numeric_limits<double>::quiet_NaN());
        return rep;
      }
      inf_f = std::min(inf_f, ft);
    }
    ratios.push_back(inf_f / std::pow(t, p_star - 1.0));
  }
  rep.samples = {{"t", std::vector<double>(t_grid.begin(), t_grid.end())}, {"ratio", ratios}};

  bool nondecreasing = true;
  for (std::size_t k = t_grid.size() / 2; k + 1 < t_grid.size(); ++k)
    if (ratios[k + 1] < ratios[k] * (1.0 - 1e-9)) {
      nondecreasing = false;
      record_worst(rep, t_grid[k + 1], x_samples.front(), ratios[k + 1]);
      break;
    }
  const bool tall_enough = ratios.back() >= threshold;
  if (!tall_enough && !rep.has_worst)
    record_worst(rep, t_grid.back(), x_samples.front(), ratios.back());

  rep.ok = nondecreasing && tall_enough;
  rep.verdict = rep.ok ? "consistent" : "not-consistent";
  return rep;
}

}  // namespace plap
