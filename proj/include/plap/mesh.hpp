#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace plap {

/// Uniform lattice on a flat n-torus, n >= 2.  Nodes sit at the axis-aligned
/// lattice points of [0, lengths[i]) with periodic wrap-around.  Quadrature
/// weights are uniform (product of the spacings), so integrals of constants
/// are exact, and the forward-difference gradient / backward-difference
/// divergence pair below satisfies summation by parts to machine precision.
class Mesh {
 public:
  int dim() const { return dim_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& lengths() const { return lengths_; }
  double spacing(int axis) const { return spacing_[axis]; }
  double min_spacing() const { return min_spacing_; }
  double volume_weight() const { return volume_weight_; }
  double total_volume() const { return total_volume_; }
  std::size_t node_count() const { return node_count_; }

  /// Periodic neighbor of `node` along `axis`; `step` is +1 or -1.
  std::size_t neighbor(std::size_t node, int axis, int step) const {
    const std::size_t s = stride_[axis];
    const int n = shape_[axis];
    const int ia = static_cast<int>((node / s) % static_cast<std::size_t>(n));
    int ja = ia + step;
    if (ja < 0) ja += n;
    if (ja >= n) ja -= n;
    return node + static_cast<std::size_t>(ja) * s - static_cast<std::size_t>(ia) * s;
  }

  double coordinate(std::size_t node, int axis) const {
    const std::size_t s = stride_[axis];
    const int ia = static_cast<int>((node / s) % static_cast<std::size_t>(shape_[axis]));
    return static_cast<double>(ia) * spacing_[axis];
  }

  /// Fills `out` (size dim) with the coordinates of `node`.
  void coordinates(std::size_t node, std::span<double> out) const;

  std::size_t flat_index(std::span<const int> multi) const;

 private:
  friend std::shared_ptr<const Mesh> build_torus(int dim, std::vector<int> shape,
                                                 std::vector<double> lengths);
  Mesh() = default;

  int dim_ = 0;
  std::vector<int> shape_;
  std::vector<double> lengths_;
  std::vector<double> spacing_;
  std::vector<std::size_t> stride_;  // row-major, last axis fastest
  double volume_weight_ = 0;
  double total_volume_ = 0;
  double min_spacing_ = 0;
  std::size_t node_count_ = 0;
};

/// One real value per mesh node.
struct ScalarField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  static ScalarField constant(std::shared_ptr<const Mesh> mesh, double value);
  static ScalarField zeros(std::shared_ptr<const Mesh> mesh) { return constant(std::move(mesh), 0.0); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// dim real components per mesh node, axis-major: component a of node i is
/// values[a * node_count + i].  Component a lives on the staggered point
/// halfway to the +a neighbor.
struct VectorField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  static VectorField zeros(std::shared_ptr<const Mesh> mesh);

  double at(int axis, std::size_t node) const { return values[static_cast<std::size_t>(axis) * mesh->node_count() + node]; }
  double& at(int axis, std::size_t node) { return values[static_cast<std::size_t>(axis) * mesh->node_count() + node]; }
};

/// Builds the periodic lattice.  Rejects dim < 2, shape entries < 3 and
/// non-positive lengths.
std::shared_ptr<const Mesh> build_torus(int dim, std::vector<int> shape,
                                        std::vector<double> lengths);

/// Forward difference per axis with periodic wrap: (u[i+1] - u[i]) / h.
VectorField gradient(const ScalarField& u);

/// Backward-difference divergence, the exact negative adjoint of `gradient`
/// under the volume-weighted inner product.
ScalarField divergence(const VectorField& w);

/// Sum of nodal values times the volume weight.
double integrate(const ScalarField& u);

double min_value(const ScalarField& u);
double max_value(const ScalarField& u);

/// Throws Error if any value is NaN or infinite; `what` names the operation.
void ensure_finite(const ScalarField& u, const char* what);
void ensure_finite(const VectorField& w, const char* what);

/// CSV dump: header `index,x1..xn,value`, one row per node in row-major node
/// order, 17 significant digits.
void dump_csv(const ScalarField& u, std::ostream& os);

}  // namespace plap
