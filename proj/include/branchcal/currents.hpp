#pragma once

#include <vector>

#include <Eigen/Dense>

#include "branchcal/alpha_norm.hpp"

namespace branchcal {

/// Integer multiplicity in Z^{n-1}.
using Multiplicity = Eigen::VectorXi;

/// Oriented segment between two nodes.  The multiplicity flows tail -> head.
struct Segment {
  Eigen::Index tail = 0;
  Eigen::Index head = 0;
  Multiplicity theta;
};

struct BoundaryAtom {
  Eigen::VectorXd point;
  Multiplicity weight;
};

/// Finite Z^{n-1}-valued point measure, e.g. the boundary mu+ - mu-.
struct BoundaryMeasure {
  std::vector<BoundaryAtom> atoms;

  bool empty() const { return atoms.empty(); }
  /// Sum of all weights; zero for every boundary of a current.
  Multiplicity total(Eigen::Index coeff_dim) const;
};

/// Polyhedral 1-current [[Sigma, tau, theta]] with coefficients in Z^{n-1}.
///
/// Construction normalises the segment soup: nodes closer than
/// node_tolerance are merged onto the first occurrence, every segment is
/// stored with its lexicographically smaller endpoint as tail (negating theta
/// when flipped), segments on the same node pair are summed, and segments
/// whose multiplicity vanishes are dropped.  Zero-length segments are
/// rejected.  Node ids are preserved; merged duplicates stay as isolated nodes.
class PolyhedralCurrent {
 public:
  static constexpr double kNodeTolerance = 1e-9;

  PolyhedralCurrent(Eigen::Index dim, Eigen::Index coeff_dim);
  /// points is dim x (node count), one node per column.
  PolyhedralCurrent(Eigen::MatrixXd points, Eigen::Index coeff_dim, std::vector<Segment> segments,
                    double node_tolerance = kNodeTolerance);

  Eigen::Index dim() const { return points_.rows(); }
  Eigen::Index coeff_dim() const { return coeff_dim_; }
  Eigen::Index node_count() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  auto point(Eigen::Index node) const { return points_.col(node); }
  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  double length(const Segment& s) const { return (point(s.head) - point(s.tail)).norm(); }
  /// Unit tangent tail -> head.
  Eigen::VectorXd tangent(const Segment& s) const {
    return (point(s.head) - point(s.tail)).normalized();
  }

 private:
  Eigen::MatrixXd points_;
  Eigen::Index coeff_dim_;
  std::vector<Segment> segments_;
};

/// Per node: incoming multiplicities minus outgoing ones.  Nodes with zero
/// net weight are omitted; atoms are ordered by node id.
BoundaryMeasure boundary(const PolyhedralCurrent& current);

/// sum over segments of psi(theta) * length.
double mass(const PolyhedralCurrent& current, const AlphaNorm& norm);

/// sum_j psi(p_j).
double boundary_mass(const BoundaryMeasure& measure, const AlphaNorm& norm);

/// Scalar component T^i (0-based index): same geometry, multiplicity theta_i.
PolyhedralCurrent component(const PolyhedralCurrent& current, Eigen::Index index);

/// True when the undirected support graph has no cycle.
bool is_acyclic(const PolyhedralCurrent& current);

struct NodeAngles {
  Eigen::Index node = 0;
  /// Pairwise angles in degrees between unit edge directions pointing away
  /// from the node, ordered by incident segment pairs.
  std::vector<double> angles_deg;
};

/// Reports every node of degree >= 3.
std::vector<NodeAngles> branch_angles(const PolyhedralCurrent& current);

/// Equality of two boundary measures up to atom order and point tolerance.
bool same_boundary(const BoundaryMeasure& a, const BoundaryMeasure& b, double point_tol = 1e-9);

}  // namespace branchcal
