#pragma once

#include <memory>
#include <optional>
#include <span>
#include <unordered_map>

#include <json.hpp>

#include "plap/expr.hpp"
#include "plap/mesh.hpp"

namespace plap {

/// A full problem instance: minimize
///   I(u) = ∫ (|∇u|² + δ²)^{p/2} dV + ∫ a |u|^p dV
/// over the set { u >= 0, B(u) = R } with B(u) = ∫ F(u(x), x) dV and
/// F(t, x) = ∫_0^t f(s, x) ds.  δ = grad_reg_delta regularizes the gradient
/// weight for p < 2; δ = 0 reproduces the exact discrete energy.
struct ProblemSpec {
  std::shared_ptr<const Mesh> mesh;
  double p = 2.0;
  ScalarField a;
  Nonlinearity f;
  double R = 1.0;
  double grad_reg_delta = 0.0;
  double quad_tol = 1e-10;

  double p_star() const {
    const double n = mesh->dim();
    return p * n / (n - p);
  }

  /// Validates 1 < p < dim, R > 0, the field/mesh pairing, coordinate
  /// indices, and the declared growth exponent; picks the default delta.
  static ProblemSpec make(std::shared_ptr<const Mesh> mesh, double p, ScalarField a,
                          Nonlinearity f, double R);

  /// Same instance with another nonlinearity and constraint level.
  ProblemSpec with_nonlinearity(Nonlinearity f2, double R2) const;
};

/// Scale-aware default regularization for p < 2 (0 for p >= 2).
double default_grad_reg_delta(const Mesh& mesh, double p, double R);

/// F(t, x) = ∫_0^t f(s, x) ds by adaptive Simpson quadrature to an absolute
/// tolerance.  Results are memoized by the bit pattern of t when f has no
/// spatial dependence, which makes repeated constraint evaluations cheap.
/// Not safe for concurrent use; create one evaluator per thread of control.
class Antiderivative {
 public:
  Antiderivative(Nonlinearity f, double quad_tol);

  double operator()(double t, std::span<const double> x) const;
  const Nonlinearity& f() const { return f_; }
  double quad_tol() const { return tol_; }

 private:
  Nonlinearity f_;
  double tol_;
  bool x_independent_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

/// One-off antiderivative evaluation (no caching).
double eval_F(const Nonlinearity& f, double t, std::span<const double> x, double quad_tol);

double eval_B(const ProblemSpec& spec, const ScalarField& u);
double eval_B(const ProblemSpec& spec, const Antiderivative& F, const ScalarField& u);
/// B of the rescaled field k·u, without materializing it.
double eval_B_scaled(const ProblemSpec& spec, const Antiderivative& F, const ScalarField& u,
                     double k);
/// d/dk B(k·u) = ∫ u f(k u, x) dV.
double eval_B_scaled_derivative(const ProblemSpec& spec, const ScalarField& u, double k);

double eval_I(const ProblemSpec& spec, const ScalarField& u);

/// Nodal first variation of I: gradI_i = p [ -div((|∇u|²+δ²)^{(p-2)/2} ∇u)
/// + a |u|^{p-2} u ]_i vol_i, so that Σ_i gradI_i φ_i equals d/dε I(u+εφ)|_0.
/// For p < 2 with δ = 0 a vanishing gradient makes the weight singular; that
/// case throws and asks for a positive delta.
ScalarField grad_I(const ProblemSpec& spec, const ScalarField& u);

/// gradB_i = f(u_i, x_i) vol_i, the nodal first variation of B.
ScalarField grad_B(const ProblemSpec& spec, const ScalarField& u);

/// Normalized Euler–Lagrange defect:
///   max_i |gradI_i / p - λ gradB_i| / (1 + |λ| max_i |gradB_i|).
double weak_residual(const ProblemSpec& spec, const ScalarField& u, double lambda);

// Integral reductions.
double norm_l1(const ScalarField& u);                       // ∫ |u| dV
double lp_integral(const ScalarField& u, double q);         // ∫ |u|^q dV
double grad_p_integral(const ScalarField& u, double p, double delta = 0.0);
                                                            // ∫ (|∇u|²+δ²)^{p/2} dV

/// |u|^{q-1} sign(u) with the convention 0 at u = 0.
double signed_power(double u, double q);

struct EnergyReport {
  double I_value = 0.0;
  double B_value = 0.0;
  ScalarField gradI;
  ScalarField gradB;
  std::optional<double> lambda;
  std::optional<double> residual;
};

EnergyReport energy_report(const ProblemSpec& spec, const ScalarField& u,
                           std::optional<double> lambda = {});
void to_json(nlohmann::json& j, const EnergyReport& r);

/// Samples a coordinate-only expression onto the mesh (t is not allowed).
ScalarField sample_coefficient(std::shared_ptr<const Mesh> mesh, const ExprAst& expr);

}  // namespace plap
