#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace branchcal {

/// Sphere-valued samples on a regular node grid in R^d.  Outside the box the
/// field equals a constant unit vector.
class GridField {
 public:
  GridField(Eigen::VectorXd lower, Eigen::VectorXd spacing, std::vector<Eigen::Index> counts,
            Eigen::VectorXd constant);

  Eigen::Index dim() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& spacing() const { return spacing_; }
  const std::vector<Eigen::Index>& counts() const { return counts_; }
  const Eigen::VectorXd& constant() const { return constant_; }
  Eigen::Index node_count() const { return samples_.cols(); }
  double cell_volume() const { return spacing_.prod(); }

  /// d x node_count, one unit vector per node (x-fastest ordering).
  const Eigen::MatrixXd& samples() const { return samples_; }
  Eigen::MatrixXd& samples() { return samples_; }
  auto value(Eigen::Index node) const { return samples_.col(node); }

  Eigen::VectorXd position(Eigen::Index node) const;
  std::vector<Eigen::Index> multi_index(Eigen::Index node) const;
  /// Node shifted by `step` along `axis`, or -1 outside the grid.
  Eigen::Index neighbor(Eigen::Index node, Eigen::Index axis, int step) const;
  bool same_grid(const GridField& other) const;

  /// Rescales every sample to unit length.
  void normalize();
  double max_unit_defect() const;
  /// Nodes on the outer layer of the box equal the constant within tol.
  bool boundary_is_constant(double tol = 0.0) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd spacing_;
  std::vector<Eigen::Index> counts_;
  std::vector<Eigen::Index> strides_;
  Eigen::VectorXd constant_;
  Eigen::MatrixXd samples_;
};

/// Node grid with spacing h covering [lo, hi] plus `margin` extra cells per side.
GridField make_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double h, int margin,
                    const Eigen::VectorXd& constant);

/// Per-node labels for piecewise differencing; empty means "one piece".
using OwnerLabels = std::vector<int>;

/// Central-difference differential Du(node) (d x d, column a = d_a u).
/// Neighbors outside the box, or carrying a different owner label than the
/// node, read as the constant value.  With `tangent`, each column is
/// projected onto the tangent plane of the sphere at u(node).
Eigen::MatrixXd differential(const GridField& u, Eigen::Index node, const OwnerLabels& owners = {},
                             bool tangent = true);

/// Cofactor matrix of a square matrix.
Eigen::MatrixXd cofactor(const Eigen::MatrixXd& m);

/// Pre-Jacobian ju, component a = det of Du with column a replaced by u.
Eigen::VectorXd pre_jacobian(const Eigen::MatrixXd& du, const Eigen::Ref<const Eigen::VectorXd>& u);

/// (d-1)^{-(d-1)/2}.
double pointwise_constant(Eigen::Index d);

/// Binary dump: "GSTFLD01", int64 dim, int64 counts[dim], f64 lower[dim],
/// f64 spacing[dim], f64 constant[dim], then node_count*dim f64 samples, all
/// little-endian.
void write_field(std::ostream& out, const GridField& field);
GridField read_field(std::istream& in);

}  // namespace branchcal
