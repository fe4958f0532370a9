#include "plap/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "plap/errors.hpp"

namespace plap {

void Mesh::coordinates(std::size_t node, std::span<double> out) const {
  for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(a)] = coordinate(node, a);
}

std::size_t Mesh::flat_index(std::span<const int> multi) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat += static_cast<std::size_t>(multi[static_cast<std::size_t>(a)]) * stride_[a];
  return flat;
}

std::shared_ptr<const Mesh> build_torus(int dim, std::vector<int> shape,
                                        std::vector<double> lengths) {
  if (dim < 2) throw PreconditionError("build_torus: dimension must be at least 2");
  if (static_cast<int>(shape.size()) != dim)
    throw PreconditionError("build_torus: shape must have one entry per axis");
  if (static_cast<int>(lengths.size()) != dim)
    throw PreconditionError("build_torus: lengths must have one entry per axis");
  for (int s : shape)
    if (s < 3) throw PreconditionError("build_torus: every shape entry must be at least 3");
  for (double l : lengths)
    if (!(l > 0.0) || !std::isfinite(l))
      throw PreconditionError("build_torus: every side length must be positive and finite");

  auto mesh = std::shared_ptr<Mesh>(new Mesh());
  mesh->dim_ = dim;
  mesh->shape_ = std::move(shape);
  mesh->lengths_ = std::move(lengths);
  mesh->spacing_.resize(static_cast<std::size_t>(dim));
  mesh->stride_.assign(static_cast<std::size_t>(dim), 1);

  std::size_t count = 1;
  double vol = 1.0, weight = 1.0, hmin = 0.0;
  for (int a = dim - 1; a >= 0; --a) {
    mesh->stride_[static_cast<std::size_t>(a)] = count;
    count *= static_cast<std::size_t>(mesh->shape_[static_cast<std::size_t>(a)]);
  }
  for (int a = 0; a < dim; ++a) {
    const double h = mesh->lengths_[static_cast<std::size_t>(a)] / mesh->shape_[static_cast<std::size_t>(a)];
    mesh->spacing_[static_cast<std::size_t>(a)] = h;
    weight *= h;
    vol *= mesh->lengths_[static_cast<std::size_t>(a)];
    hmin = (a == 0) ? h : std::min(hmin, h);
  }
  mesh->node_count_ = count;
  mesh->volume_weight_ = weight;
  mesh->total_volume_ = vol;
  mesh->min_spacing_ = hmin;
  return mesh;
}

ScalarField ScalarField::constant(std::shared_ptr<const Mesh> mesh, double value) {
  ScalarField f;
  f.values.assign(mesh->node_count(), value);
  f.mesh = std::move(mesh);
  return f;
}

VectorField VectorField::zeros(std::shared_ptr<const Mesh> mesh) {
  VectorField w;
  w.values.assign(static_cast<std::size_t>(mesh->dim()) * mesh->node_count(), 0.0);
  w.mesh = std::move(mesh);
  return w;
}

VectorField gradient(const ScalarField& u) {
  const Mesh& m = *u.mesh;
  VectorField w = VectorField::zeros(u.mesh);
  const std::size_t n = m.node_count();
  for (int a = 0; a < m.dim(); ++a) {
    const double inv_h = 1.0 / m.spacing(a);
    double* wa = &w.values[static_cast<std::size_t>(a) * n];
    for (std::size_t i = 0; i < n; ++i)
      wa[i] = (u.values[m.neighbor(i, a, +1)] - u.values[i]) * inv_h;
  }
  ensure_finite(w, "gradient");
  return w;
}

ScalarField divergence(const VectorField& w) {
  const Mesh& m = *w.mesh;
  ScalarField d = ScalarField::zeros(w.mesh);
  const std::size_t n = m.node_count();
  for (int a = 0; a < m.dim(); ++a) {
    const double inv_h = 1.0 / m.spacing(a);
    const double* wa = &w.values[static_cast<std::size_t>(a) * n];
    for (std::size_t i = 0; i < n; ++i)
      d.values[i] += (wa[i] - wa[m.neighbor(i, a, -1)]) * inv_h;
  }
  ensure_finite(d, "divergence");
  return d;
}

double integrate(const ScalarField& u) {
  double s = 0.0;
  for (double v : u.values) s += v;
  return s * u.mesh->volume_weight();
}

double min_value(const ScalarField& u) {
  double m = u.values.empty() ? 0.0 : u.values[0];
  for (double v : u.values) m = std::min(m, v);
  return m;
}

double max_value(const ScalarField& u) {
  double m = u.values.empty() ? 0.0 : u.values[0];
  for (double v : u.values) m = std::max(m, v);
  return m;
}

void ensure_finite(const ScalarField& u, const char* what) {
  for (double v : u.values)
    if (!std::isfinite(v)) throw Error(std::string(what) + ": field contains a non-finite value");
}

void ensure_finite(const VectorField& w, const char* what) {
  for (double v : w.values)
    if (!std::isfinite(v)) throw Error(std::string(what) + ": field contains a non-finite value");
}

void dump_csv(const ScalarField& u, std::ostream& os) {
  const Mesh& m = *u.mesh;
  os << "index";
  for (int a = 0; a < m.dim(); ++a) os << ",x" << (a + 1);
  os << ",value\n";
  char buf[40];
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    os << i;
    for (int a = 0; a < m.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", m.coordinate(i, a));
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", u.values[i]);
    os << ',' << buf << '\n';
  }
}

}  // namespace plap
