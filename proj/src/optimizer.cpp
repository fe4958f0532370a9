#include "plap/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plap/errors.hpp"
#include "plap/rng.hpp"

namespace plap {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const SolveResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TraceRow& t : r.trace)
    rows.push_back({{"iter", t.iter}, {"I", t.I}, {"B", t.B}, {"step", t.step}});
  j = nlohmann::json{{"lambda", r.lambda},       {"mu", r.mu},
                     {"iterations", r.iterations}, {"residual", r.residual},
                     {"status", to_string(r.status)}, {"trace", std::move(rows)}};
}

namespace {

struct Projection {
  ScalarField u;
  double k = 1.0;
  double B = 0.0;
};

// Safeguarded Newton/bisection on the strictly increasing map k -> B(k u).
// The root is driven to machine precision (far below ctol) so the projection
// map stays smooth at the scale of line-search trial steps; ctol is only the
// guaranteed feasibility bound.
Projection project_impl(const ProblemSpec& spec, const Antiderivative& F,
                        const ScalarField& u, double ctol) {
  if (min_value(u) < -1e-12 * (1.0 + std::abs(max_value(u))))
    throw PreconditionError("project_to_constraint: field must be nonnegative");
  if (max_value(u) <= 0.0)
    throw InfeasibleError("project_to_constraint: cannot scale the zero field onto B = R");

  const double R = spec.R;
  double k_lo = 0.0;
  double k_hi = 1.0;
  double B_hi = eval_B_scaled(spec, F, u, k_hi);
  while (B_hi < R) {
    k_lo = k_hi;
    k_hi *= 2.0;
    if (k_hi > 1e12)
      throw InfeasibleError(
          "project_to_constraint: bracketing failed below k = 1e12; B grows too slowly");
    B_hi = eval_B_scaled(spec, F, u, k_hi);
  }

  const double target = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, R);
  double k = (B_hi == R) ? k_hi : 0.5 * (k_lo + k_hi);
  double best_k = k_hi, best_defect = std::abs(B_hi - R), best_B = B_hi;
  for (int it = 0; it < 300; ++it) {
    const double B = eval_B_scaled(spec, F, u, k);
    const double defect = B - R;
    if (std::abs(defect) < best_defect) {
      best_defect = std::abs(defect);
      best_k = k;
      best_B = B;
    }
    if (std::abs(defect) <= target) break;
    if (defect < 0.0) k_lo = k; else k_hi = k;
    if (k_hi - k_lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, k_hi))
      break;  // bracket exhausted at roundoff; keep the best point seen
    const double slope = eval_B_scaled_derivative(spec, u, k);
    double k_next = (slope > 0.0) ? k - defect / slope : 0.0;
    if (!(k_next > k_lo) || !(k_next < k_hi)) k_next = 0.5 * (k_lo + k_hi);
    k = k_next;
  }
  // Quadrature noise bounds how sharply the computed B can be matched; the
  // guard only fires when the defect exceeds both the requested tolerance
  // and that noise level.
  const double quad_floor = 2.0 * spec.quad_tol * spec.mesh->total_volume();
  if (best_defect > std::max(ctol, quad_floor))
    throw InfeasibleError("project_to_constraint: could not meet the constraint tolerance "
                          "(quadrature-limited)");
  Projection pr;
  pr.u = u;
  for (double& v : pr.u.values) v *= best_k;
  pr.k = best_k;
  pr.B = best_B;
  return pr;
}

double resolve_ctol(const ProblemSpec& spec, double ctol, const SolverOptions& opts) {
  return ctol > 0.0 ? ctol : opts.constraint_tol_factor * spec.R;
}

ScalarField clipped(const ScalarField& u) {
  ScalarField v = u;
  for (double& x : v.values) x = std::max(x, 0.0);
  return v;
}

double weighted_norm2(const ScalarField& a, const ScalarField& b, double vol) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return s * vol;
}

// Constrained first-order defect: gradI - ξ gradB with the least-squares
// multiplier over the inactive set; at active bounds only the descent-
// feasible (negative) part counts.  The pointwise defect (volume weights
// divided out) doubles as the search direction: it is tangent to the
// constraint to first order, so the scaling projection only corrects at
// O(step²).  Stepping along the raw gradient instead stalls near optima,
// where the gradient is nearly parallel to the constraint normal.
ScalarField stationarity_direction(const ScalarField& u, const ScalarField& gI,
                                   const ScalarField& gB, double vol) {
  const double act_tol = 1e-12 * (1.0 + max_value(u));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.values[i] > act_tol) {
      num += gI.values[i] * gB.values[i];
      den += gB.values[i] * gB.values[i];
    }
  }
  const double xi = (den > 0.0) ? num / den : 0.0;
  ScalarField d = ScalarField::zeros(u.mesh);
  for (std::size_t i = 0; i < u.size(); ++i) {
    double r = gI.values[i] - xi * gB.values[i];
    if (u.values[i] <= act_tol) r = std::min(r, 0.0);
    d.values[i] = r / vol;
  }
  return d;
}

double l2_norm(const ScalarField& d, double vol) {
  double s = 0.0;
  for (double v : d.values) s += v * v;
  return std::sqrt(s * vol);
}

void audit_p1_or_throw(const ProblemSpec& spec) {
  const SampleBox box = SampleBox::standard(spec.mesh->dim(), spec.mesh->lengths());
  const ConditionReport rep = check_p1(spec.f, box.t, box.x);
  if (!rep.ok)
    throw PreconditionError("solve: nonlinearity fails the oddness/monotonicity audit: " +
                            rep.note);
}

}  // namespace

ScalarField project_to_constraint(const ProblemSpec& spec, const ScalarField& u,
                                  double constraint_tol) {
  Antiderivative F(spec.f, spec.quad_tol);
  const double ctol =
      constraint_tol > 0.0 ? constraint_tol : 1e-10 * spec.R;
  return project_impl(spec, F, u, ctol).u;
}

double extract_lambda(const ProblemSpec& spec, const ScalarField& u) {
  const double num = eval_I(spec, u);
  const double den = eval_B_scaled_derivative(spec, u, 1.0);  // ∫ u f(u, x) dV
  if (std::abs(den) <= 1e-14 * (1.0 + std::abs(num)))
    throw InfeasibleError("extract_lambda: ∫ u f(u,·) dV vanishes (u ≡ 0 or f degenerate)");
  return num / den;
}

double least_squares_multiplier(const ProblemSpec& spec, const ScalarField& u) {
  const ScalarField gI = grad_I(spec, u);
  const ScalarField gB = grad_B(spec, u);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    num += gI.values[i] * gB.values[i];
    den += gB.values[i] * gB.values[i];
  }
  if (den <= 0.0) throw InfeasibleError("least_squares_multiplier: gradB vanishes");
  return num / den / spec.p;
}

SolveResult solve_subcritical(const ProblemSpec& spec, const std::optional<ScalarField>& u0,
                              const SolverOptions& opts) {
  const double ps1 = spec.p_star() - 1.0;
  if (spec.f.critical() || !(spec.f.growth_exponent(spec.p_star()) < ps1))
    throw PreconditionError(
        "solve_subcritical: declared growth must be strictly subcritical (rho < p*-1)");
  if (opts.audit_p1) audit_p1_or_throw(spec);

  Antiderivative F(spec.f, spec.quad_tol);
  const double ctol = resolve_ctol(spec, -1.0, opts);
  const Mesh& mesh = *spec.mesh;
  const double vol = mesh.volume_weight();

  Projection proj;
  if (u0) {
    if (u0->mesh.get() != spec.mesh.get())
      throw PreconditionError("solve_subcritical: u0 does not live on the instance mesh");
    if (min_value(*u0) < 0.0)
      throw PreconditionError("solve_subcritical: u0 must be nonnegative");
    proj = project_impl(spec, F, *u0, ctol);
  } else {
    proj = project_impl(spec, F, ScalarField::constant(spec.mesh, 1.0), ctol);
  }

  ScalarField u = std::move(proj.u);
  double I_u = eval_I(spec, u);
  double B_u = proj.B;
  const double grad_tol = opts.grad_tol_factor * (1.0 + std::abs(I_u));

  SolveResult res;
  res.trace.push_back({0, I_u, B_u, 0.0});
  if (opts.on_accept) opts.on_accept(0, u, I_u, B_u);

  Rng perturb_rng(opts.perturb_seed);
  int restarts_used = 0;
  double step = -1.0;  // sized on first use
  int iter = 0;
  SolveStatus status = SolveStatus::max_iter;

  while (iter < opts.max_iter) {
    ++iter;
    const ScalarField gI = grad_I(spec, u);
    const ScalarField gB = grad_B(spec, u);
    const ScalarField d = stationarity_direction(u, gI, gB, vol);
    const double pg_norm = l2_norm(d, vol);

    if (pg_norm <= grad_tol) {
      const double lambda = extract_lambda(spec, u);
      const double residual = weak_residual(spec, u, lambda);
      if (residual <= opts.residual_tol || restarts_used >= opts.stall_restarts) {
        status = SolveStatus::converged;
        break;
      }
      // Flat-region escape: multiplicative noise 1 ± 1e-2, then back onto
      // the constraint.
      ++restarts_used;
      for (double& v : u.values) v *= 1.0 + 1e-2 * (2.0 * perturb_rng.uniform() - 1.0);
      proj = project_impl(spec, F, clipped(u), ctol);
      u = std::move(proj.u);
      I_u = eval_I(spec, u);
      B_u = proj.B;
      step = -1.0;
      continue;
    }

    const double d_max = std::max(1e-30, std::max(std::abs(max_value(d)), std::abs(min_value(d))));
    const double step_ref = 0.1 * (1.0 + max_value(u)) / d_max;
    if (step <= 0.0) step = step_ref;
    step = std::min(step, 1e4 * step_ref);

    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      ScalarField v = u;
      for (std::size_t i = 0; i < v.size(); ++i)
        v.values[i] = std::max(0.0, v.values[i] - step * d.values[i]);
      if (max_value(v) <= 0.0) {
        step *= opts.armijo_shrink;
        continue;
      }
      Projection trial;
      try {
        trial = project_impl(spec, F, v, ctol);
      } catch (const InfeasibleError&) {
        step *= opts.armijo_shrink;
        continue;
      }
      const double I_w = eval_I(spec, trial.u);
      const double move2 = weighted_norm2(trial.u, u, vol);
      if (move2 > 0.0 && I_w <= I_u - opts.armijo_c / step * move2) {
        u = std::move(trial.u);
        I_u = I_w;
        B_u = trial.B;
        accepted = true;
        break;
      }
      step *= opts.armijo_shrink;
    }

    if (!accepted) {
      // The line search exhausted its budget: decreases are below what the
      // energy comparison can resolve (roundoff plus quadrature noise in B).
      // The iterate is the best the arithmetic allows; accept it when the
      // weak equation is satisfied to tolerance, otherwise report the stall.
      const double lambda = extract_lambda(spec, u);
      status = (weak_residual(spec, u, lambda) <= opts.residual_tol)
                   ? SolveStatus::converged
                   : SolveStatus::stalled;
      break;
    }
    res.trace.push_back({iter, I_u, B_u, step});
    if (opts.on_accept) opts.on_accept(iter, u, I_u, B_u);
    step *= 1.5;
  }

  res.u = std::move(u);
  res.mu = I_u;
  res.iterations = iter;
  res.status = status;
  res.lambda = extract_lambda(spec, res.u);
  res.residual = weak_residual(spec, res.u, res.lambda);
  return res;
}

SolveResult brute_force_minimize(const ProblemSpec& spec, int restarts, long budget,
                                 std::uint64_t seed, const SolverOptions& opts) {
  if (restarts < 1) throw PreconditionError("brute_force_minimize: restarts must be >= 1");
  if (spec.mesh->node_count() > 200)
    throw PreconditionError("brute_force_minimize: guarded to meshes of at most 200 nodes");
  if (budget < 1) throw PreconditionError("brute_force_minimize: budget must be positive");

  Antiderivative F(spec.f, spec.quad_tol);
  const double ctol = resolve_ctol(spec, -1.0, opts);
  const std::size_t n = spec.mesh->node_count();

  SolveResult res;
  long evals = 0;
  bool any_feasible = false;
  double best_J = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts && evals < budget; ++r) {
    Rng rng(seed + 0x9e3779b9ull * static_cast<std::uint64_t>(r));
    ScalarField w = ScalarField::zeros(spec.mesh);
    for (double& v : w.values) v = 0.1 + rng.uniform();

    Projection proj;
    try {
      proj = project_impl(spec, F, w, ctol);
      ++evals;
    } catch (const InfeasibleError&) {
      continue;
    }
    w = std::move(proj.u);
    double J = eval_I(spec, w);
    any_feasible = true;

    std::vector<TraceRow> local_trace;
    local_trace.push_back({0, J, proj.B, 0.0});
    double step = 0.25 * (max_value(w) + 1e-3);
    const double step_min = 1e-6 * (1.0 + max_value(w));
    int sweep = 0;

    while (step >= step_min && evals < budget) {
      ++sweep;
      bool improved = false;
      for (std::size_t i = 0; i < n && evals < budget; ++i) {
        for (int dir = 0; dir < 2 && evals < budget; ++dir) {
          const double delta = dir == 0 ? step : -step;
          ScalarField cand = w;
          cand.values[i] = std::max(0.0, cand.values[i] + delta);
          if (cand.values[i] == w.values[i]) continue;
          Projection trial;
          try {
            trial = project_impl(spec, F, cand, ctol);
          } catch (const InfeasibleError&) {
            ++evals;
            continue;
          }
          const double J2 = eval_I(spec, trial.u);
          ++evals;
          if (J2 < J) {
            w = std::move(trial.u);
            J = J2;
            improved = true;
          }
        }
      }
      local_trace.push_back({sweep, J, spec.R, step});
      if (!improved) step *= 0.5;
    }

    if (J < best_J) {
      best_J = J;
      res.u = std::move(w);
      res.trace = std::move(local_trace);
    }
  }

  if (!any_feasible)
    throw InfeasibleError("brute_force_minimize: budget exhausted before any feasible point");

  res.mu = best_J;
  res.iterations = static_cast<int>(std::min<long>(evals, std::numeric_limits<int>::max()));
  res.status = (evals >= budget) ? SolveStatus::max_iter : SolveStatus::converged;
  res.lambda = extract_lambda(spec, res.u);
  res.residual = weak_residual(spec, res.u, res.lambda);
  return res;
}

}  // namespace plap
