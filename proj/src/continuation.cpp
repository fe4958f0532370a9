#include "plap/continuation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "plap/errors.hpp"

namespace plap {

void to_json(nlohmann::json& j, const ContinuationTrace& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ContinuationRow& r : t.rows)
    rows.push_back({{"m", r.m},
                    {"Rm", r.Rm},
                    {"mu", r.mu},
                    {"lambda", r.lambda},
                    {"l1", r.l1},
                    {"gradp", r.gradp},
                    {"lambdaRm", r.lambdaRm}});
  j = nlohmann::json{{"nu", t.nu},
                     {"R", t.R_target},
                     {"rows", std::move(rows)},
                     {"final", t.final},
                     {"status", to_string(t.status)}};
}

void dump_csv(const ContinuationTrace& t, std::ostream& os) {
  os << "m,Rm,mu,lambda,l1,gradp,lambdaRm\n";
  char buf[40];
  for (const ContinuationRow& r : t.rows) {
    os << r.m;
    for (double v : {r.Rm, r.mu, r.lambda, r.l1, r.gradp, r.lambdaRm}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

Nonlinearity make_fm(const Nonlinearity& f, int m, double p_star) {
  if (m < 1) throw PreconditionError("make_fm: m must be a positive integer");
  if (!(p_star > 1.0)) throw PreconditionError("make_fm: p_star must exceed 1");
  const double theta = static_cast<double>(m) / (m + 1);
  Nonlinearity fm;
  fm.ast = ExprAst::binary(
      BinaryOp::Mul, ExprAst::unary(UnaryOp::Sign, ExprAst::var_t()),
      ExprAst::binary(BinaryOp::Pow, ExprAst::unary(UnaryOp::Abs, f.ast),
                      ExprAst::constant(theta)));
  fm.rho = theta * (p_star - 1.0);
  // |f|^θ <= (b + c|t|^{p*-1})^θ <= b^θ + c^θ |t|^{θ(p*-1)}, so the p2-form
  // envelope below is valid with c folded into b.
  fm.b = std::pow(f.b, theta) + std::pow(f.c, theta);
  fm.c = 0.0;
  return fm;
}

double compute_nu(const ProblemSpec& spec) {
  if (!(spec.R > 0.0)) throw PreconditionError("compute_nu: R must be positive");
  const ScalarField nu_field =
      project_to_constraint(spec, ScalarField::constant(spec.mesh, 1.0));
  return nu_field.values[0];
}

double compute_Rm(const ProblemSpec& spec, int m, double nu) {
  if (!(nu > 0.0)) throw PreconditionError("compute_Rm: nu must be positive");
  const Nonlinearity fm = make_fm(spec.f, m, spec.p_star());
  const Antiderivative Fm(fm, spec.quad_tol);
  // For t in (0, nu] the regularized integrand is |f(t,x)|^{m/(m+1)}, so the
  // inner quadrature is exactly the antiderivative of f_m at nu.
  const Mesh& mesh = *spec.mesh;
  std::vector<double> x(static_cast<std::size_t>(mesh.dim()));
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    mesh.coordinates(i, x);
    s += Fm(nu, x);
  }
  return s * mesh.volume_weight();
}

ContinuationTrace run_continuation(const ProblemSpec& spec, std::span<const int> m_schedule,
                                   const ContinuationOptions& opts) {
  if (!spec.f.critical())
    throw PreconditionError(
        "run_continuation: the nonlinearity must be declared critical (rho = p*-1)");
  if (m_schedule.size() < 3)
    throw PreconditionError("run_continuation: the m-schedule needs at least 3 entries");
  for (std::size_t i = 0; i + 1 < m_schedule.size(); ++i)
    if (!(m_schedule[i] < m_schedule[i + 1]))
      throw PreconditionError("run_continuation: the m-schedule must be strictly increasing");
  if (m_schedule.front() < 1)
    throw PreconditionError("run_continuation: schedule entries must be positive");

  const double p_star = spec.p_star();
  const SampleBox box = SampleBox::standard(spec.mesh->dim(), spec.mesh->lengths());
  {
    const ConditionReport rep = check_p1(spec.f, box.t, box.x);
    if (!rep.ok)
      throw PreconditionError("run_continuation: p1 audit failed: " + nlohmann::json(rep).dump());
    const ConditionReport g = check_growth_critical(spec.f, spec.f.b, spec.f.c, p_star, box.t, box.x);
    if (!g.ok)
      throw PreconditionError("run_continuation: p3 audit failed: " + nlohmann::json(g).dump());
    const std::vector<double> grid = p4_grid();
    const ConditionReport p4 = check_p4(spec.f, p_star, grid, box.x, opts.p4_threshold);
    if (!p4.ok)
      throw PreconditionError("run_continuation: p4 audit failed: " + nlohmann::json(p4).dump());
  }

  ContinuationTrace trace;
  trace.R_target = spec.R;
  trace.nu = compute_nu(spec);
  const double eq8_bound = trace.nu * spec.mesh->total_volume() + spec.R + spec.quad_tol;

  ScalarField warm = ScalarField::constant(spec.mesh, trace.nu);
  trace.status = SolveStatus::converged;

  for (int m : m_schedule) {
    const Nonlinearity fm = make_fm(spec.f, m, p_star);
    const double Rm = compute_Rm(spec, m, trace.nu);
    if (Rm > eq8_bound)
      throw Error("run_continuation: computed R_m exceeds nu·vol(M) + R beyond quadrature "
                  "tolerance; quadrature is inconsistent");
    const ProblemSpec spec_m = spec.with_nonlinearity(fm, Rm);

    SolverOptions inner = opts.solver;
    if (opts.on_accept) {
      auto outer = opts.on_accept;
      auto chained = inner.on_accept;
      inner.on_accept = [m, Rm, fm, outer, chained](int iter, const ScalarField& u, double I,
                                                    double B) {
        if (chained) chained(iter, u, I, B);
        outer(m, Rm, fm, iter, u);
      };
    }

    SolveResult res = solve_subcritical(spec_m, warm, inner);
    ContinuationRow row;
    row.m = m;
    row.Rm = Rm;
    row.mu = res.mu;
    row.lambda = res.lambda;
    row.l1 = norm_l1(res.u);
    row.gradp = grad_p_integral(res.u, spec.p);
    row.lambdaRm = std::abs(res.lambda) * Rm;
    trace.rows.push_back(row);

    warm = res.u;
    trace.final = std::move(res);
    if (trace.final.status != SolveStatus::converged) {
      trace.status = trace.final.status;
      break;  // truncate the schedule; the trace records how far we got
    }
  }

  // Re-score the last iterate against the original nonlinearity; this is the
  // honest defect of the limit equation.
  trace.final.residual = weak_residual(spec, trace.final.u, trace.final.lambda);
  return trace;
}

}  // namespace plap
