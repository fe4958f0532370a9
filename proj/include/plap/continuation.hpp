#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "plap/optimizer.hpp"

namespace plap {

struct ContinuationRow {
  int m = 0;
  double Rm = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
  double l1 = 0.0;        // ∫ |u_m| dV
  double gradp = 0.0;     // ∫ |∇u_m|^p dV
  double lambdaRm = 0.0;  // |λ_m| · R_m
};

struct ContinuationTrace {
  double nu = 0.0;
  double R_target = 0.0;
  std::vector<ContinuationRow> rows;
  SolveResult final;  // last iterate, residual re-scored against the original f
  SolveStatus status = SolveStatus::infeasible;
};

/// JSON: {nu, R, rows:[{m,Rm,mu,lambda,l1,gradp,lambdaRm}], final:{...}, status}.
void to_json(nlohmann::json& j, const ContinuationTrace& t);

/// CSV mirror of the rows: m,Rm,mu,lambda,l1,gradp,lambdaRm.
void dump_csv(const ContinuationTrace& t, std::ostream& os);

/// The m-th subcritical regularization sign(t)·|f(t,x)|^{m/(m+1)} with the
/// induced growth declaration rho_m = (m/(m+1))(p*-1) < p*-1.
Nonlinearity make_fm(const Nonlinearity& f, int m, double p_star);

/// The unique nu > 0 with ∫ F(nu, x) dV = R.
double compute_nu(const ProblemSpec& spec);

/// R_m = ∫_M [ ∫_0^nu |f(t,x)|^{m/(m+1)} dt ] dV by nested quadrature.
double compute_Rm(const ProblemSpec& spec, int m, double nu);

struct ContinuationOptions {
  SolverOptions solver;
  double p4_threshold = 1e3;
  /// Streamed observer over every accepted iterate of every inner solve.
  std::function<void(int m, double Rm, const Nonlinearity& fm, int iter, const ScalarField& u)>
      on_accept;
};

/// Critical-case pipeline: audits the structural conditions, then for each m
/// in the strictly increasing schedule solves the subcritical instance with
/// f_m at level R_m, warm-started from the previous solution (first start:
/// the constant nu).  The final result carries the weak residual against the
/// original f.
ContinuationTrace run_continuation(const ProblemSpec& spec, std::span<const int> m_schedule,
                                   const ContinuationOptions& opts = {});

}  // namespace plap
