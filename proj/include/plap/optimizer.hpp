#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plap/functional.hpp"

namespace plap {

enum class SolveStatus { converged, max_iter, infeasible, stalled };

const char* to_string(SolveStatus s);

struct TraceRow {
  int iter = 0;
  double I = 0.0;
  double B = 0.0;
  double step = 0.0;
};

struct SolveResult {
  ScalarField u;
  double lambda = 0.0;
  double mu = 0.0;  // final I(u)
  int iterations = 0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  std::vector<TraceRow> trace;
};

/// JSON: {lambda, mu, iterations, residual, status, trace:[{iter,I,B,step}]}.
void to_json(nlohmann::json& j, const SolveResult& r);

struct SolverOptions {
  double grad_tol_factor = 1e-8;        // grad_tol = factor * (1 + |I(u0)|)
  double constraint_tol_factor = 1e-10; // constraint_tol = factor * R
  int max_iter = 50000;
  double armijo_shrink = 0.5;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
  double residual_tol = 1e-5;
  int stall_restarts = 5;
  std::uint64_t perturb_seed = 0x5eed5eedull;
  bool audit_p1 = true;

  /// Called for every accepted feasible iterate (including the start point).
  std::function<void(int iter, const ScalarField& u, double I, double B)> on_accept;
};

/// Returns k·u with B(k·u) = R, found by bracketing plus safeguarded Newton
/// on the strictly increasing map k -> B(k·u).  Requires u >= 0 and u not
/// identically zero.
ScalarField project_to_constraint(const ProblemSpec& spec, const ScalarField& u,
                                  double constraint_tol = -1.0);

/// λ = I(u) / ∫ u f(u, x) dV.  Throws when the denominator vanishes.
double extract_lambda(const ProblemSpec& spec, const ScalarField& u);

/// Least-squares fit of gradI = ξ gradB over the nodes, returned as ξ / p.
/// Cross-check for extract_lambda on converged solutions.
double least_squares_multiplier(const ProblemSpec& spec, const ScalarField& u);

/// Projected-gradient descent for the subcritical constrained minimization:
/// clip to u >= 0, rescale onto B = R, Armijo backtracking on I along the
/// projected path; stops when the constrained first-order defect falls below
/// grad_tol.  Default start: the constant level set onto B = R.
SolveResult solve_subcritical(const ProblemSpec& spec,
                              const std::optional<ScalarField>& u0 = {},
                              const SolverOptions& opts = {});

/// Derivative-free oracle: coordinate descent with shrinking steps over the
/// nonnegative nodal values, re-projected onto B = R, best of `restarts`
/// seeded random initializations.  Guarded to meshes of at most 200 nodes.
/// `budget` caps the number of objective evaluations.
SolveResult brute_force_minimize(const ProblemSpec& spec, int restarts, long budget,
                                 std::uint64_t seed = 12345,
                                 const SolverOptions& opts = {});

}  // namespace plap
