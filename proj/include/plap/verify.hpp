#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <json.hpp>

#include "plap/continuation.hpp"
#include "plap/functional.hpp"
#include "plap/rng.hpp"

namespace plap {

/// Outcome of one empirical inequality check.  All fitted constants are
/// discrete estimates on the mesh, never continuum values; reports embed the
/// seed and parameters needed to reproduce them bit-for-bit.
struct InequalityReport {
  std::string name;
  double lhs_max = 0.0;
  double rhs_min = 0.0;
  bool holds = false;
  bool applicable = true;
  nlohmann::json witness;
  nlohmann::json parameters;
};

void to_json(nlohmann::json& j, const InequalityReport& r);

using FieldGenerator = std::function<ScalarField(std::shared_ptr<const Mesh>, Rng&)>;

/// Random trigonometric polynomial with integer frequencies up to max_mode.
ScalarField random_fourier_field(std::shared_ptr<const Mesh> mesh, Rng& rng, int max_mode = 3,
                                 double amplitude = 1.0);
/// Random block-constant field (plateaus aligned to a coarse sub-lattice).
ScalarField random_piecewise_field(std::shared_ptr<const Mesh> mesh, Rng& rng,
                                   double amplitude = 1.0);
/// Default sample stream: alternates Fourier and piecewise fields.
ScalarField random_sample_field(std::shared_ptr<const Mesh> mesh, Rng& rng);

/// Empirical constant for ∫|u|^p <= eps ∫|∇u|^p + C(eps) (∫|u|)^p:
/// C is the max fitted ratio over `count` samples, then validated on `count`
/// fresh samples from the same stream.
InequalityReport estimate_interpolation_constant(std::shared_ptr<const Mesh> mesh, double p,
                                                 double epsilon, std::uint64_t seed, int count,
                                                 const FieldGenerator& generator = {});

/// Least-max fit of (K, D) with ‖u‖_{p*}^p <= K ‖∇u‖_p^p + D ‖u‖_p^p over the
/// fitted samples, validated on fresh samples.
InequalityReport sobolev_constants(std::shared_ptr<const Mesh> mesh, double p,
                                   std::uint64_t seed, int count,
                                   const FieldGenerator& generator = {});

/// Mass bound for feasible points: ∫|u| dV <= R/eta + 2 t0 vol(M), with
/// eta = inf over the mesh of f(t0, x).  Throws when eta <= 0.
InequalityReport check_l1_bound(const ProblemSpec& spec, const ScalarField& u, double t0,
                                double tol = 1e-8, bool verify_feasible = true);

/// Margin of K·max_m mu_m below (R p*/c1)^{p/p*}; a negative margin is
/// reported, not fatal.  Trivially satisfied when every mu_m <= 0.
InequalityReport nondegeneracy_diagnostic(const ContinuationTrace& trace, double K, double c1,
                                          double p, double p_star);

/// For lambda >= 0 a converged solution should be strictly positive:
/// holds iff min u > pos_tol.  Reported not-applicable when lambda < 0.
InequalityReport check_positivity(const SolveResult& result, double pos_tol = 1e-6);

}  // namespace plap
