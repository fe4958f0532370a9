#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plap/errors.hpp"
#include "plap/verify.hpp"

using namespace plap;
using test_helpers::unit_torus3;

namespace {

Nonlinearity linear_f() { return {parse("t"), 1.0, 1.0, 0.0}; }

FieldGenerator constants_only() {
  return [](std::shared_ptr<const Mesh> mesh, Rng& rng) {
    return ScalarField::constant(std::move(mesh), rng.uniform(0.2, 2.0));
  };
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("interpolation constant on constants is the volume power") {
  auto mesh = unit_torus3(4);  // unit volume
  const InequalityReport rep =
      estimate_interpolation_constant(mesh, 2.0, 0.1, 42, 20, constants_only());
  // For u = c on unit volume: (∫u^p) / (∫|u|)^p = 1 and the gradient term
  // vanishes, so the fitted ratio is exactly 1 and the published constant
  // carries only the safety margin.
  const double safety = rep.parameters.at("safety").get<double>();
  CHECK(rep.parameters.at("C_fit").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.parameters.at("C").get<double>() == doctest::Approx(safety).epsilon(1e-12));
  CHECK(rep.holds);
}

TEST_CASE("interpolation constant shrinks as epsilon grows") {
  auto mesh = unit_torus3(8);
  const InequalityReport r1 = estimate_interpolation_constant(mesh, 2.0, 0.1, 7, 60);
  const InequalityReport r2 = estimate_interpolation_constant(mesh, 2.0, 0.2, 7, 60);
  CHECK(r2.parameters.at("C").get<double>() <= r1.parameters.at("C").get<double>() + 1e-15);
}

TEST_CASE("interpolation constant validates on fresh samples") {
  auto mesh = unit_torus3(8);
  const InequalityReport rep = estimate_interpolation_constant(mesh, 2.0, 0.1, 2024, 200);
  CHECK(rep.holds);
  CHECK(rep.witness.at("violations").get<int>() == 0);
  CHECK(std::isfinite(rep.parameters.at("C").get<double>()));
}

TEST_CASE("sobolev constants on constants: K = 0 and D near the volume power") {
  auto mesh = unit_torus3(4);
  const InequalityReport rep = sobolev_constants(mesh, 2.0, 5, 20, constants_only());
  // For constants the gradient term vanishes and A/P = vol^(p/p* - 1) = 1 on
  // the unit torus; the reported D carries only the safety margin.
  const double safety = rep.parameters.at("safety").get<double>();
  CHECK(rep.parameters.at("K").get<double>() == 0.0);
  CHECK(rep.parameters.at("D").get<double>() == doctest::Approx(safety).epsilon(1e-12));
  CHECK(rep.holds);
}

TEST_CASE("sobolev constants validate with zero violations") {
  auto mesh = unit_torus3(8);
  const InequalityReport rep = sobolev_constants(mesh, 2.0, 17, 200);
  CHECK(rep.holds);
  CHECK(rep.witness.at("violations").get<int>() == 0);
  CHECK(rep.parameters.at("p_star").get<double>() == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("reports are reproducible bit-for-bit from the seed") {
  auto mesh = unit_torus3(6);
  const nlohmann::json a = estimate_interpolation_constant(mesh, 2.0, 0.1, 99, 50);
  const nlohmann::json b = estimate_interpolation_constant(mesh, 2.0, 0.1, 99, 50);
  CHECK(a.dump() == b.dump());
  const nlohmann::json c = sobolev_constants(mesh, 2.0, 99, 50);
  const nlohmann::json d = sobolev_constants(mesh, 2.0, 99, 50);
  CHECK(c.dump() == d.dump());
}

TEST_CASE("l1 bound arithmetic example") {
  auto mesh = unit_torus3(4);
  const ProblemSpec s =
      ProblemSpec::make(mesh, 2.0, ScalarField::constant(mesh, 2.0), linear_f(), 0.5);
  const ScalarField u = ScalarField::constant(mesh, 1.0);
  const InequalityReport rep = check_l1_bound(s, u, 0.5);
  CHECK(rep.holds);
  CHECK(rep.lhs_max == doctest::Approx(1.0).epsilon(1e-12));   // ∫|u| = 1
  CHECK(rep.rhs_min == doctest::Approx(2.0).epsilon(1e-12));   // R/eta + 2 t0 vol = 1 + 1
  CHECK(rep.parameters.at("eta").get<double>() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l1 bound rejects a t0 where f is not positive") {
  auto mesh = unit_torus3(4);
  const ProblemSpec s = ProblemSpec::make(
      mesh, 2.0, ScalarField::constant(mesh, 2.0),
      Nonlinearity{parse("t - 2"), 1.0, 1.0, 0.0}, 0.5);
  CHECK_THROWS_AS(check_l1_bound(s, ScalarField::constant(mesh, 1.0), 0.5, 1e-8, false),
                  PreconditionError);
}

TEST_CASE("l1 bound verifies feasibility when asked") {
  auto mesh = unit_torus3(4);
  const ProblemSpec s =
      ProblemSpec::make(mesh, 2.0, ScalarField::constant(mesh, 2.0), linear_f(), 0.5);
  // B(2) = 2 != R = 0.5.
  CHECK_THROWS_AS(check_l1_bound(s, ScalarField::constant(mesh, 2.0), 0.5),
                  PreconditionError);
}

TEST_CASE("nondegeneracy margin") {
  ContinuationTrace trace;
  trace.R_target = 0.5;
  trace.rows.push_back({1, 0.6, 1.0, 0.7, 1.0, 0.0, 0.42});
  trace.rows.push_back({2, 0.55, 0.9, 0.6, 1.0, 0.0, 0.33});

  const InequalityReport rep = nondegeneracy_diagnostic(trace, 0.5, 2.0, 2.0, 6.0);
  // target = (R p*/c1)^(p/p*) = (0.5·6/2)^(1/3) = 1.5^(1/3).
  CHECK(rep.rhs_min == doctest::Approx(std::pow(1.5, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(rep.lhs_max == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.holds);

  ContinuationTrace neg = trace;
  neg.rows[0].mu = -1.0;
  neg.rows[1].mu = -0.2;
  const InequalityReport trivially = nondegeneracy_diagnostic(neg, 0.5, 2.0, 2.0, 6.0);
  CHECK(trivially.holds);

  CHECK_THROWS_AS(nondegeneracy_diagnostic(trace, 0.5, 0.0, 2.0, 6.0), PreconditionError);
  ContinuationTrace empty;
  empty.R_target = 0.5;
  CHECK_THROWS_AS(nondegeneracy_diagnostic(empty, 0.5, 2.0, 2.0, 6.0), PreconditionError);
}

TEST_CASE("positivity check") {
  auto mesh = unit_torus3(4);
  SolveResult res;
  res.u = ScalarField::constant(mesh, 1.0);
  res.lambda = 2.0;
  const InequalityReport holds = check_positivity(res, 1e-6);
  CHECK(holds.applicable);
  CHECK(holds.holds);

  res.lambda = -1.0;
  const InequalityReport na = check_positivity(res, 1e-6);
  CHECK_FALSE(na.applicable);

  res.lambda = 0.5;
  res.u.values[3] = 0.0;
  const InequalityReport fails = check_positivity(res, 1e-6);
  CHECK(fails.applicable);
  CHECK_FALSE(fails.holds);
}

TEST_CASE("samplers honor the seed and avoid the zero field") {
  auto mesh = unit_torus3(6);
  Rng r1(123), r2(123);
  const ScalarField a = random_sample_field(mesh, r1);
  const ScalarField b = random_sample_field(mesh, r2);
  CHECK(a.values == b.values);
  bool nonzero = false;
  for (double v : a.values) nonzero = nonzero || v != 0.0;
  CHECK(nonzero);
}

}  // TEST_SUITE
