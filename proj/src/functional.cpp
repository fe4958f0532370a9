#include "plap/functional.hpp"

#include <bit>
#include <cmath>

#include "plap/errors.hpp"

namespace plap {

namespace {

constexpr int kMaxQuadDepth = 96;

struct Integrand {
  const ExprAst* ast;
  std::span<const double> x;
  double operator()(double s) const { return ast->eval(s, x); }
};

// Classic adaptive Simpson with Richardson correction.  tol is absolute and
// halves per subdivision.
template <typename F>
double adapt(const F& g, double a, double fa, double m, double fm, double b, double fb,
             double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth >= kMaxQuadDepth)
    throw QuadratureError("adaptive Simpson quadrature failed to converge", a, b);
  return adapt(g, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
         adapt(g, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
}

template <typename F>
double adaptive_simpson(const F& g, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = g(a);
  const double fm = g(m);
  const double fb = g(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adapt(g, a, fa, m, fm, b, fb, whole, tol, 0);
}

double antiderivative_value(const ExprAst& ast, double t, std::span<const double> x,
                            double tol) {
  if (t == 0.0) return 0.0;
  Integrand g{&ast, x};
  // ∫_0^t = -∫_t^0 keeps the Riemann sign convention for t < 0.
  if (t > 0.0) return adaptive_simpson(g, 0.0, t, tol);
  return -adaptive_simpson(g, t, 0.0, tol);
}

void require_field_on_mesh(const ProblemSpec& spec, const ScalarField& u, const char* what) {
  if (u.mesh.get() != spec.mesh.get() || u.size() != spec.mesh->node_count())
    throw PreconditionError(std::string(what) + ": field does not live on the instance mesh");
}

// Gathers node coordinates into a small stack buffer.
struct CoordBuffer {
  double data[8];
  std::span<const double> fill(const Mesh& mesh, std::size_t node) {
    const int d = mesh.dim();
    for (int a = 0; a < d; ++a) data[a] = mesh.coordinate(node, a);
    return {data, static_cast<std::size_t>(d)};
  }
};

}  // namespace

double signed_power(double u, double q) {
  if (u == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(u), q), u);
}

double default_grad_reg_delta(const Mesh& mesh, double p, double R) {
  if (p >= 2.0) return 0.0;
  return 1e-8 * std::pow(R / mesh.total_volume(), 1.0 / p) / mesh.min_spacing();
}

ProblemSpec ProblemSpec::make(std::shared_ptr<const Mesh> mesh, double p, ScalarField a,
                              Nonlinearity f, double R) {
  if (!mesh) throw PreconditionError("ProblemSpec: mesh is required");
  const int n = mesh->dim();
  if (!(p > 1.0) || !(p < n))
    throw PreconditionError("ProblemSpec: p must lie strictly between 1 and the dimension");
  if (!(R > 0.0)) throw PreconditionError("ProblemSpec: R must be positive");
  if (a.mesh.get() != mesh.get() || a.size() != mesh->node_count())
    throw PreconditionError("ProblemSpec: coefficient field does not live on the mesh");
  ensure_finite(a, "ProblemSpec coefficient");
  if (!f.ast.valid()) throw PreconditionError("ProblemSpec: nonlinearity is empty");
  if (f.ast.max_coord_index() > n)
    throw PreconditionError("ProblemSpec: nonlinearity references a coordinate beyond the mesh dimension");
  ProblemSpec spec;
  spec.mesh = std::move(mesh);
  spec.p = p;
  spec.a = std::move(a);
  spec.f = std::move(f);
  spec.R = R;
  const double ps = spec.p_star();
  if (!spec.f.critical()) {
    const double rho = *spec.f.rho;
    if (!(rho > 0.0) || rho > ps - 1.0 + 1e-12)
      throw PreconditionError("ProblemSpec: declared rho must lie in (0, p*-1] or be critical");
  }
  if (!(spec.f.b > 0.0) || !(spec.f.c >= 0.0))
    throw PreconditionError("ProblemSpec: growth constants need b > 0 and c >= 0");
  spec.grad_reg_delta = default_grad_reg_delta(*spec.mesh, p, R);
  return spec;
}

ProblemSpec ProblemSpec::with_nonlinearity(Nonlinearity f2, double R2) const {
  ProblemSpec s = ProblemSpec::make(mesh, p, a, std::move(f2), R2);
  s.grad_reg_delta = grad_reg_delta;
  s.quad_tol = quad_tol;
  return s;
}

Antiderivative::Antiderivative(Nonlinearity f, double quad_tol)
    : f_(std::move(f)), tol_(quad_tol), x_independent_(f_.ast.x_independent()) {
  if (!(tol_ > 0.0)) throw PreconditionError("Antiderivative: quad_tol must be positive");
}

double Antiderivative::operator()(double t, std::span<const double> x) const {
  if (!x_independent_) return antiderivative_value(f_.ast, t, x, tol_);
  const std::uint64_t key = std::bit_cast<std::uint64_t>(t);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const double v = antiderivative_value(f_.ast, t, x, tol_);
  cache_.emplace(key, v);
  return v;
}

double eval_F(const Nonlinearity& f, double t, std::span<const double> x, double quad_tol) {
  if (!(quad_tol > 0.0)) throw PreconditionError("eval_F: quad_tol must be positive");
  return antiderivative_value(f.ast, t, x, quad_tol);
}

double eval_B(const ProblemSpec& spec, const ScalarField& u) {
  Antiderivative F(spec.f, spec.quad_tol);
  return eval_B(spec, F, u);
}

double eval_B(const ProblemSpec& spec, const Antiderivative& F, const ScalarField& u) {
  return eval_B_scaled(spec, F, u, 1.0);
}

double eval_B_scaled(const ProblemSpec& spec, const Antiderivative& F, const ScalarField& u,
                     double k) {
  require_field_on_mesh(spec, u, "eval_B");
  const Mesh& mesh = *spec.mesh;
  CoordBuffer xb;
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    s += F(k * u.values[i], xb.fill(mesh, i));
  return s * mesh.volume_weight();
}

double eval_B_scaled_derivative(const ProblemSpec& spec, const ScalarField& u, double k) {
  require_field_on_mesh(spec, u, "eval_B_scaled_derivative");
  const Mesh& mesh = *spec.mesh;
  CoordBuffer xb;
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    s += u.values[i] * spec.f.ast.eval(k * u.values[i], xb.fill(mesh, i));
  return s * mesh.volume_weight();
}

double eval_I(const ProblemSpec& spec, const ScalarField& u) {
  require_field_on_mesh(spec, u, "eval_I");
  const Mesh& mesh = *spec.mesh;
  const std::size_t n = mesh.node_count();
  const double delta2 = spec.grad_reg_delta * spec.grad_reg_delta;
  const double half_p = 0.5 * spec.p;
  const VectorField w = gradient(u);

  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double g2 = delta2;
    for (int a = 0; a < mesh.dim(); ++a) {
      const double wa = w.values[static_cast<std::size_t>(a) * n + i];
      g2 += wa * wa;
    }
    e += (spec.p == 2.0) ? g2 : std::pow(g2, half_p);
    e += spec.a.values[i] * std::pow(std::abs(u.values[i]), spec.p);
  }
  return e * mesh.volume_weight();
}

ScalarField grad_I(const ProblemSpec& spec, const ScalarField& u) {
  require_field_on_mesh(spec, u, "grad_I");
  const Mesh& mesh = *spec.mesh;
  const std::size_t n = mesh.node_count();
  const double delta2 = spec.grad_reg_delta * spec.grad_reg_delta;
  const double wexp = 0.5 * (spec.p - 2.0);
  VectorField w = gradient(u);

  // Weight the staggered gradient by (|∇u|² + δ²)^{(p-2)/2} per node.
  for (std::size_t i = 0; i < n; ++i) {
    double g2 = delta2;
    for (int a = 0; a < mesh.dim(); ++a) {
      const double wa = w.values[static_cast<std::size_t>(a) * n + i];
      g2 += wa * wa;
    }
    double weight;
    if (spec.p == 2.0) {
      weight = 1.0;
    } else if (g2 == 0.0) {
      if (wexp < 0.0)
        throw Error(
            "grad_I: vanishing gradient with p < 2 and delta = 0 makes the weight singular; "
            "set grad_reg_delta > 0");
      weight = 0.0;
    } else {
      weight = std::pow(g2, wexp);
    }
    for (int a = 0; a < mesh.dim(); ++a)
      w.values[static_cast<std::size_t>(a) * n + i] *= weight;
  }

  const ScalarField div_flux = divergence(w);
  ScalarField g = ScalarField::zeros(u.mesh);
  const double vol = mesh.volume_weight();
  for (std::size_t i = 0; i < n; ++i) {
    const double zeroth = spec.a.values[i] * signed_power(u.values[i], spec.p - 1.0);
    g.values[i] = spec.p * (-div_flux.values[i] + zeroth) * vol;
  }
  ensure_finite(g, "grad_I");
  return g;
}

ScalarField grad_B(const ProblemSpec& spec, const ScalarField& u) {
  require_field_on_mesh(spec, u, "grad_B");
  const Mesh& mesh = *spec.mesh;
  CoordBuffer xb;
  ScalarField g = ScalarField::zeros(u.mesh);
  const double vol = mesh.volume_weight();
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    g.values[i] = spec.f.ast.eval(u.values[i], xb.fill(mesh, i)) * vol;
  ensure_finite(g, "grad_B");
  return g;
}

double weak_residual(const ProblemSpec& spec, const ScalarField& u, double lambda) {
  const ScalarField gI = grad_I(spec, u);
  const ScalarField gB = grad_B(spec, u);
  double num = 0.0, gB_max = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    num = std::max(num, std::abs(gI.values[i] / spec.p - lambda * gB.values[i]));
    gB_max = std::max(gB_max, std::abs(gB.values[i]));
  }
  return num / (1.0 + std::abs(lambda) * gB_max);
}

double norm_l1(const ScalarField& u) {
  double s = 0.0;
  for (double v : u.values) s += std::abs(v);
  return s * u.mesh->volume_weight();
}

double lp_integral(const ScalarField& u, double q) {
  double s = 0.0;
  for (double v : u.values) s += std::pow(std::abs(v), q);
  return s * u.mesh->volume_weight();
}

double grad_p_integral(const ScalarField& u, double p, double delta) {
  const Mesh& mesh = *u.mesh;
  const std::size_t n = mesh.node_count();
  const VectorField w = gradient(u);
  const double delta2 = delta * delta;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double g2 = delta2;
    for (int a = 0; a < mesh.dim(); ++a) {
      const double wa = w.values[static_cast<std::size_t>(a) * n + i];
      g2 += wa * wa;
    }
    s += (p == 2.0) ? g2 : std::pow(g2, 0.5 * p);
  }
  return s * mesh.volume_weight();
}

EnergyReport energy_report(const ProblemSpec& spec, const ScalarField& u,
                           std::optional<double> lambda) {
  EnergyReport r;
  r.I_value = eval_I(spec, u);
  r.B_value = eval_B(spec, u);
  r.gradI = grad_I(spec, u);
  r.gradB = grad_B(spec, u);
  r.lambda = lambda;
  if (lambda) r.residual = weak_residual(spec, u, *lambda);
  return r;
}

void to_json(nlohmann::json& j, const EnergyReport& r) {
  j = nlohmann::json{{"I", r.I_value}, {"B", r.B_value}};
  if (r.lambda) j["lambda"] = *r.lambda;
  if (r.residual) j["residual"] = *r.residual;
}

ScalarField sample_coefficient(std::shared_ptr<const Mesh> mesh, const ExprAst& expr) {
  if (expr.uses_t())
    throw PreconditionError("sample_coefficient: a coefficient may not reference t");
  if (expr.max_coord_index() > mesh->dim())
    throw PreconditionError("sample_coefficient: coordinate index exceeds the mesh dimension");
  ScalarField field = ScalarField::zeros(mesh);
  CoordBuffer xb;
  for (std::size_t i = 0; i < mesh->node_count(); ++i)
    field.values[i] = expr.eval(0.0, xb.fill(*mesh, i));
  ensure_finite(field, "sample_coefficient");
  return field;
}

}  // namespace plap
