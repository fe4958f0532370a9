#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace plap {

enum class UnaryOp { Neg, Abs, Sign, Sin, Cos, Exp };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

namespace expr_detail {
struct Node;
}

/// Immutable expression tree over the scalar variable `t` and the coordinate
/// variables `x1..xn`.  Powers with a non-integer exponent are only accepted
/// when the base is provably nonnegative (abs(...)^e is the sanctioned form);
/// this is enforced at construction time.
class ExprAst {
 public:
  ExprAst() = default;

  static ExprAst constant(double v);
  static ExprAst var_t();
  static ExprAst coord(int index);  // 1-based: coord(1) is x1
  static ExprAst unary(UnaryOp op, ExprAst a);
  static ExprAst binary(BinaryOp op, ExprAst a, ExprAst b);

  bool valid() const { return root_ != nullptr; }

  /// IEEE-754 double evaluation; sign(0) = 0.  Division by zero, invalid
  /// powers and non-finite results throw EvalDomainError.
  double eval(double t, std::span<const double> x) const;

  bool uses_t() const;
  /// Largest coordinate index referenced, 0 when none.
  int max_coord_index() const;
  bool x_independent() const { return max_coord_index() == 0; }

  /// Prints source text that reparses to a structurally identical tree.
  std::string to_string() const;
  bool equals(const ExprAst& other) const;

 private:
  friend ExprAst parse(std::string_view source);
  explicit ExprAst(std::shared_ptr<const expr_detail::Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const expr_detail::Node> root_;
};

/// Parses the grammar
///   expression := term { ('+'|'-') term }
///   term       := factor { ('*'|'/') factor }
///   factor     := '-' factor | power
///   power      := atom [ '^' factor ]
///   atom       := number | 't' | 'x1'.. | name '(' expression ')' | '(' expression ')'
/// with functions abs, sign, sin, cos, exp.  Throws ParseError with the byte
/// offset of the failure.
ExprAst parse(std::string_view source);

/// A nonlinearity f(t, x) together with its declared growth envelope:
/// |f| <= b (1 + |t|^rho) when rho is set, |f| <= b + c |t|^(p*-1) when
/// declared critical (rho empty).
struct Nonlinearity {
  ExprAst ast;
  std::optional<double> rho;  // empty means critical growth
  double b = 1.0;
  double c = 0.0;

  bool critical() const { return !rho.has_value(); }
  double growth_exponent(double p_star) const { return rho ? *rho : p_star - 1.0; }
};

/// Verdict of a sampled structural audit.  These checks falsify or gain
/// confidence; they are not proofs.
struct ConditionReport {
  std::string condition;  // "p1", "p2", "p3", "p4"
  bool ok = false;
  std::string verdict;  // "pass"/"fail" or "consistent"/"not-consistent"
  nlohmann::json samples;
  bool has_worst = false;
  double worst_t = 0.0;
  std::vector<double> worst_x;
  double worst_value = 0.0;
  nlohmann::json tolerances;
  std::string note;
};

void to_json(nlohmann::json& j, const ConditionReport& r);

/// Shared sampling domain for the audits: a symmetric t-grid and a lattice of
/// coordinate samples.
struct SampleBox {
  std::vector<double> t;
  std::vector<std::vector<double>> x;

  /// 41 symmetric t-points in [-t_max, t_max] and `per_axis`^dim lattice
  /// points covering [0, lengths).
  static SampleBox standard(int dim, std::span<const double> lengths, double t_max = 10.0,
                            int t_count = 41, int per_axis = 3);
};

struct OddnessTol {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
};

/// Audits oddness and strict monotonicity in t over the sampled box.
/// t_samples must be strictly sorted and symmetric about 0.
ConditionReport check_p1(const Nonlinearity& f, std::span<const double> t_samples,
                         const std::vector<std::vector<double>>& x_samples,
                         OddnessTol tol = {});

/// Audits |f(t,x)| <= b (1 + |t|^rho); reports the maximal violation ratio.
ConditionReport check_growth(const Nonlinearity& f, double b, double rho,
                             std::span<const double> t_samples,
                             const std::vector<std::vector<double>>& x_samples);

/// Audits the critical-growth envelope |f(t,x)| <= b + c |t|^(p*-1).
ConditionReport check_growth_critical(const Nonlinearity& f, double b, double c, double p_star,
                                      std::span<const double> t_samples,
                                      const std::vector<std::vector<double>>& x_samples);

/// Finite-sample audit of inf_x f(t,x) / t^(p*-1) -> +inf as t -> 0+.
/// t_grid must be strictly decreasing positives with min >= 1e-8.  The
/// verdict is "consistent" iff the ratio sequence ends above `threshold` and
/// is nondecreasing over the last half of the grid; a heuristic, flagged as
/// such in the report.
ConditionReport check_p4(const Nonlinearity& f, double p_star, std::span<const double> t_grid,
                         const std::vector<std::vector<double>>& x_samples,
                         double threshold = 1e3);

/// Strictly decreasing geometric grid from 1 down to `t_min` (>= 1e-8).
std::vector<double> p4_grid(double t_min = 1e-8, int count = 33);

}  // namespace plap
