#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "plap/functional.hpp"
#include "plap/mesh.hpp"
#include "plap/rng.hpp"

namespace test_helpers {

inline std::shared_ptr<const plap::Mesh> unit_torus3(int n) {
  return plap::build_torus(3, {n, n, n}, {1.0, 1.0, 1.0});
}

inline std::shared_ptr<const plap::Mesh> unit_torus2(int nx, int ny) {
  return plap::build_torus(2, {nx, ny}, {1.0, 1.0});
}

inline plap::ScalarField random_field(std::shared_ptr<const plap::Mesh> mesh, plap::Rng& rng,
                                      double lo, double hi) {
  plap::ScalarField u = plap::ScalarField::zeros(mesh);
  for (double& v : u.values) v = rng.uniform(lo, hi);
  return u;
}

inline plap::VectorField random_vector_field(std::shared_ptr<const plap::Mesh> mesh,
                                             plap::Rng& rng, double lo, double hi) {
  plap::VectorField w = plap::VectorField::zeros(mesh);
  for (double& v : w.values) v = rng.uniform(lo, hi);
  return w;
}

/// Unweighted nodal dot product, matching the pairing of grad_I / grad_B.
inline double dot(const plap::ScalarField& a, const plap::ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

inline plap::ScalarField axpy(const plap::ScalarField& u, double h,
                              const plap::ScalarField& phi) {
  plap::ScalarField v = u;
  for (std::size_t i = 0; i < v.size(); ++i) v.values[i] += h * phi.values[i];
  return v;
}

/// Central finite difference of a functional along phi.
template <typename Fn>
double central_difference(const Fn& value, const plap::ScalarField& u,
                          const plap::ScalarField& phi, double h) {
  return (value(axpy(u, h, phi)) - value(axpy(u, -h, phi))) / (2.0 * h);
}

/// Seeded generator of strictly increasing odd nonlinearities in source form.
/// Terms: positive multiples of t, t^3, t^5, sign(t)|t|^e, and t + 0.1 sin t,
/// optionally scaled by a strictly positive spatial factor.
inline std::string random_odd_increasing_expr(plap::Rng& rng) {
  auto coeff = [&rng]() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", 0.2 + 1.8 * rng.uniform());
    return std::string(buf);
  };
  const int terms = 1 + static_cast<int>(rng.below(3));
  std::string src;
  for (int k = 0; k < terms; ++k) {
    std::string term;
    switch (rng.below(5)) {
      case 0: term = coeff() + "*t"; break;
      case 1: term = coeff() + "*t^3"; break;
      case 2: term = coeff() + "*t^5"; break;
      case 3: {
        const char* exps[] = {"0.5", "1.5", "2.5"};
        term = coeff() + "*sign(t)*abs(t)^" + exps[rng.below(3)];
        break;
      }
      default: term = coeff() + "*(t + 0.1*sin(t))"; break;
    }
    if (rng.below(4) == 0)
      term += "*(1.5 + 0.5*cos(6.283185307179586*x1))";
    src += (k == 0 ? "" : " + ") + term;
  }
  return src;
}

}  // namespace test_helpers
