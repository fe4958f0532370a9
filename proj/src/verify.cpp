#include "plap/verify.hpp"

#include <cmath>
#include <limits>

#include "plap/errors.hpp"

namespace plap {

void to_json(nlohmann::json& j, const InequalityReport& r) {
  j = nlohmann::json{{"name", r.name},     {"lhs_max", r.lhs_max},
                     {"rhs_min", r.rhs_min}, {"holds", r.holds},
                     {"applicable", r.applicable}, {"witness", r.witness},
                     {"parameters", r.parameters}};
}

ScalarField random_fourier_field(std::shared_ptr<const Mesh> mesh, Rng& rng, int max_mode,
                                 double amplitude) {
  const int dim = mesh->dim();
  const int terms = 1 + static_cast<int>(rng.below(3));
  struct Term {
    std::vector<int> mode;
    std::vector<double> phase;
    double coeff;
  };
  std::vector<Term> spec(static_cast<std::size_t>(terms));
  for (Term& t : spec) {
    t.mode.resize(static_cast<std::size_t>(dim));
    t.phase.resize(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      t.mode[static_cast<std::size_t>(a)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_mode + 1)));
      t.phase[static_cast<std::size_t>(a)] = rng.uniform(0.0, 6.283185307179586);
    }
    t.coeff = amplitude * rng.uniform(-1.0, 1.0);
  }
  const double offset = amplitude * rng.uniform(-1.0, 1.0);

  ScalarField u = ScalarField::zeros(mesh);
  for (std::size_t i = 0; i < mesh->node_count(); ++i) {
    double v = offset;
    for (const Term& t : spec) {
      double prod = t.coeff;
      for (int a = 0; a < dim; ++a) {
        const double x = mesh->coordinate(i, a);
        const double L = mesh->lengths()[static_cast<std::size_t>(a)];
        prod *= std::cos(6.283185307179586 * t.mode[static_cast<std::size_t>(a)] * x / L +
                         t.phase[static_cast<std::size_t>(a)]);
      }
      v += prod;
    }
    u.values[i] = v;
  }
  return u;
}

ScalarField random_piecewise_field(std::shared_ptr<const Mesh> mesh, Rng& rng,
                                   double amplitude) {
  const int dim = mesh->dim();
  // Random plateaus: each axis is split into 2 or 3 blocks; every block cell
  // gets an independent value.
  std::vector<int> blocks(static_cast<std::size_t>(dim));
  int cells = 1;
  for (int a = 0; a < dim; ++a) {
    blocks[static_cast<std::size_t>(a)] = 2 + static_cast<int>(rng.below(2));
    cells *= blocks[static_cast<std::size_t>(a)];
  }
  std::vector<double> cell_value(static_cast<std::size_t>(cells));
  for (double& v : cell_value) v = amplitude * rng.uniform(-1.0, 1.0);

  ScalarField u = ScalarField::zeros(mesh);
  for (std::size_t i = 0; i < mesh->node_count(); ++i) {
    int cell = 0;
    for (int a = 0; a < dim; ++a) {
      const double L = mesh->lengths()[static_cast<std::size_t>(a)];
      const double x = mesh->coordinate(i, a);
      const int nb = blocks[static_cast<std::size_t>(a)];
      int ba = static_cast<int>(x / L * nb);
      if (ba >= nb) ba = nb - 1;
      cell = cell * nb + ba;
    }
    u.values[i] = cell_value[static_cast<std::size_t>(cell)];
  }
  return u;
}

ScalarField random_sample_field(std::shared_ptr<const Mesh> mesh, Rng& rng) {
  return (rng.below(2) == 0) ? random_fourier_field(mesh, rng)
                             : random_piecewise_field(mesh, rng);
}

namespace {

const FieldGenerator& default_generator() {
  static const FieldGenerator g = [](std::shared_ptr<const Mesh> mesh, Rng& rng) {
    return random_sample_field(std::move(mesh), rng);
  };
  return g;
}

}  // namespace

InequalityReport estimate_interpolation_constant(std::shared_ptr<const Mesh> mesh, double p,
                                                 double epsilon, std::uint64_t seed, int count,
                                                 const FieldGenerator& generator) {
  if (!(epsilon > 0.0))
    throw PreconditionError("estimate_interpolation_constant: epsilon must be positive");
  if (count < 1) throw PreconditionError("estimate_interpolation_constant: count must be >= 1");
  const FieldGenerator& gen = generator ? generator : default_generator();

  Rng rng(seed);
  double C_fit = -std::numeric_limits<double>::infinity();
  int used = 0;
  for (int s = 0; s < count; ++s) {
    const ScalarField u = gen(mesh, rng);
    const double mass = norm_l1(u);
    if (mass == 0.0) continue;
    ++used;
    const double ratio =
        (lp_integral(u, p) - epsilon * grad_p_integral(u, p)) / std::pow(mass, p);
    C_fit = std::max(C_fit, ratio);
  }
  if (used == 0)
    throw Error("estimate_interpolation_constant: every sample was identically zero");
  // Safety margin so the published constant survives fresh samples.
  const double safety = 1.1;
  const double C = (C_fit > 0.0) ? C_fit * safety : C_fit / safety;

  // Validate on fresh samples from the same stream.
  double worst_ratio = -std::numeric_limits<double>::infinity();
  int worst_index = -1;
  int violations = 0;
  for (int s = 0; s < count; ++s) {
    const ScalarField u = gen(mesh, rng);
    const double mass = norm_l1(u);
    if (mass == 0.0) continue;
    const double ratio =
        (lp_integral(u, p) - epsilon * grad_p_integral(u, p)) / std::pow(mass, p);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_index = s;
    }
    if (ratio > C + 1e-12 * (1.0 + std::abs(C))) ++violations;
  }

  InequalityReport rep;
  rep.name = "interpolation_constant";
  rep.lhs_max = worst_ratio;
  rep.rhs_min = C;
  rep.holds = violations == 0;
  rep.parameters = {{"p", p},        {"epsilon", epsilon},   {"C", C},
                    {"C_fit", C_fit}, {"safety", safety},
                    {"seed", seed},  {"fit_count", count},   {"validate_count", count},
                    {"generator", "fourier+piecewise"},      {"estimate", "discrete"}};
  rep.witness = {{"worst_validation_sample", worst_index},
                 {"worst_validation_ratio", worst_ratio},
                 {"violations", violations}};
  return rep;
}

InequalityReport sobolev_constants(std::shared_ptr<const Mesh> mesh, double p,
                                   std::uint64_t seed, int count,
                                   const FieldGenerator& generator) {
  if (count < 1) throw PreconditionError("sobolev_constants: count must be >= 1");
  const double n = mesh->dim();
  if (!(p < n)) throw PreconditionError("sobolev_constants: requires p < dim");
  const double p_star = p * n / (n - p);
  const FieldGenerator& gen = generator ? generator : default_generator();

  struct Norms {
    double A, G, P;
  };
  Rng rng(seed);
  auto measure = [&](const ScalarField& u) {
    return Norms{std::pow(lp_integral(u, p_star), p / p_star), grad_p_integral(u, p),
                 lp_integral(u, p)};
  };

  std::vector<Norms> fit;
  fit.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const ScalarField u = gen(mesh, rng);
    const Norms m = measure(u);
    if (m.P == 0.0) continue;  // zero field: both sides vanish
    fit.push_back(m);
  }
  if (fit.empty()) throw Error("sobolev_constants: every sample was identically zero");

  double mean_G = 0.0, mean_P = 0.0;
  for (const Norms& m : fit) {
    mean_G += m.G;
    mean_P += m.P;
  }
  mean_G /= static_cast<double>(fit.size());
  mean_P /= static_cast<double>(fit.size());

  // Candidate slopes: K = 0 plus a log grid; D(K) is forced by the samples,
  // and the pair with the smallest average right-hand side wins.  The safety
  // factor absorbs the generalization gap to fresh samples.
  const double safety = 1.1;
  double best_K = 0.0, best_D = 0.0, best_cost = std::numeric_limits<double>::infinity();
  for (int gk = -1; gk <= 64; ++gk) {
    const double K = (gk < 0) ? 0.0 : std::pow(10.0, -4.0 + 8.0 * gk / 64.0);
    double D = 0.0;
    for (const Norms& m : fit) D = std::max(D, (m.A - K * m.G) / m.P);
    const double cost = K * mean_G + D * mean_P;
    if (cost < best_cost) {
      best_cost = cost;
      best_K = K;
      best_D = D;
    }
  }
  best_K *= safety;
  best_D *= safety;

  double worst_ratio = 0.0;
  int worst_index = -1, violations = 0;
  for (int s = 0; s < count; ++s) {
    const ScalarField u = gen(mesh, rng);
    const Norms m = measure(u);
    if (m.P == 0.0) continue;
    const double rhs = best_K * m.G + best_D * m.P;
    const double ratio = m.A / rhs;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_index = s;
    }
    if (m.A > rhs * (1.0 + 1e-9)) ++violations;
  }

  InequalityReport rep;
  rep.name = "sobolev_constants";
  rep.lhs_max = worst_ratio;
  rep.rhs_min = 1.0;
  rep.holds = violations == 0;
  rep.parameters = {{"p", p},       {"p_star", p_star}, {"K", best_K},
                    {"D", best_D},  {"seed", seed},     {"fit_count", count},
                    {"validate_count", count},          {"safety", safety},
                    {"estimate", "discrete"}};
  rep.witness = {{"worst_validation_sample", worst_index},
                 {"worst_validation_ratio", worst_ratio},
                 {"violations", violations}};
  return rep;
}

InequalityReport check_l1_bound(const ProblemSpec& spec, const ScalarField& u, double t0,
                                double tol, bool verify_feasible) {
  if (!(t0 > 0.0)) throw PreconditionError("check_l1_bound: t0 must be positive");
  const Mesh& mesh = *spec.mesh;
  std::vector<double> x(static_cast<std::size_t>(mesh.dim()));
  double eta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    mesh.coordinates(i, x);
    eta = std::min(eta, spec.f.ast.eval(t0, x));
  }
  if (!(eta > 0.0))
    throw PreconditionError("check_l1_bound: inf f(t0,·) is not positive; pick a larger t0");

  if (verify_feasible) {
    if (min_value(u) < -1e-12 * (1.0 + std::abs(max_value(u))))
      throw PreconditionError("check_l1_bound: field is not nonnegative");
    const double B = eval_B(spec, u);
    if (std::abs(B - spec.R) > std::max(1e-8 * spec.R, 100.0 * spec.quad_tol))
      throw PreconditionError("check_l1_bound: field is not feasible (B(u) != R)");
  }

  const double bound = spec.R / eta + 2.0 * t0 * mesh.total_volume();
  const double l1 = norm_l1(u);

  InequalityReport rep;
  rep.name = "l1_bound";
  rep.lhs_max = l1;
  rep.rhs_min = bound;
  rep.holds = l1 <= bound + tol;
  rep.parameters = {{"t0", t0}, {"eta", eta}, {"R", spec.R},
                    {"vol", mesh.total_volume()}, {"tol", tol}, {"estimate", "discrete"}};
  rep.witness = {{"l1", l1}, {"bound", bound}};
  return rep;
}

InequalityReport nondegeneracy_diagnostic(const ContinuationTrace& trace, double K, double c1,
                                          double p, double p_star) {
  if (trace.rows.empty())
    throw PreconditionError("nondegeneracy_diagnostic: continuation trace is empty");
  if (!(c1 > 0.0))
    throw PreconditionError(
        "nondegeneracy_diagnostic: requires c1 > 0 (pure subcritical growth is out of scope)");

  double mu_max = -std::numeric_limits<double>::infinity();
  for (const ContinuationRow& r : trace.rows) mu_max = std::max(mu_max, r.mu);

  const double target = std::pow(trace.R_target * p_star / c1, p / p_star);
  InequalityReport rep;
  rep.name = "nondegeneracy_margin";
  rep.parameters = {{"K", K}, {"c1", c1}, {"p", p}, {"p_star", p_star},
                    {"R", trace.R_target}, {"estimate", "discrete"}};
  if (mu_max <= 0.0) {
    rep.lhs_max = K * mu_max;
    rep.rhs_min = target;
    rep.holds = true;
    rep.witness = {{"note", "all mu_m nonpositive; nontriviality is immediate"}};
    return rep;
  }
  rep.lhs_max = K * mu_max;
  rep.rhs_min = target;
  rep.holds = rep.lhs_max < target;
  rep.witness = {{"mu_max", mu_max}, {"margin", target - rep.lhs_max}};
  return rep;
}

InequalityReport check_positivity(const SolveResult& result, double pos_tol) {
  InequalityReport rep;
  rep.name = "positivity";
  rep.parameters = {{"pos_tol", pos_tol}, {"lambda", result.lambda}};
  if (result.lambda < 0.0) {
    rep.applicable = false;
    rep.holds = true;
    rep.witness = {{"note", "lambda < 0; the positivity statement does not apply"}};
    return rep;
  }
  const double umin = min_value(result.u);
  rep.lhs_max = pos_tol;
  rep.rhs_min = umin;
  rep.holds = umin > pos_tol;
  rep.witness = {{"min_u", umin}};
  return rep;
}

}  // namespace plap
