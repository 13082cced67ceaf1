#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "branchcal/alpha_norm.hpp"
#include "branchcal/currents.hpp"
#include "branchcal/topology.hpp"

namespace branchcal {

/// Single-sink irrigation instance: unit masses at the sources flow to the sink.
struct Instance {
  Eigen::MatrixXd sources;  // d x (n-1), one source per column
  Eigen::VectorXd sink;
  double alpha = 0.5;

  Eigen::Index dim() const { return sink.size(); }
  int source_count() const { return static_cast<int>(sources.cols()); }
  AlphaNorm norm() const { return AlphaNorm(alpha, sources.cols()); }

  /// Throws std::invalid_argument unless d >= 2, there is at least one source
  /// and all points are distinct.
  void validate() const;
};

/// mu+ - mu-: +(e_1 + ... + e_{n-1}) at the sink, -e_i at source i.
BoundaryMeasure target_boundary(const Instance& instance);

/// Length of the star graph: every source wired straight to the sink.
double star_cost(const Instance& instance);

struct SolveOptions {
  /// Newton iterations per smoothing stage.
  int max_iterations = 200;
  /// Bound on the norm of the weighted unit-vector sum at a free branch point.
  double position_tolerance = 1e-6;
  /// Random topologies tried in heuristic mode.
  int restarts = 64;
  std::uint64_t seed = 0;
  /// Branch points closer than this to another node are merged into it.
  double collapse_tolerance = 1e-7;
  bool parallel = true;
  /// false selects the heuristic search (required beyond kMaxExactSources).
  bool exact = true;
};

struct PositionResult {
  PolyhedralCurrent current;
  /// Mass of the emitted current.
  double cost = 0.0;
  /// Unsmoothed objective sum_e psi(e_I) |x_u - x_v| before merging.
  double objective = 0.0;
  Eigen::MatrixXd branch_points;  // d x (k-1)
  int iterations = 0;
  bool converged = false;
};

/// Minimises sum over edges of psi_alpha(e_I) * |x_u - x_v| over the branch
/// points of a fixed topology.  The smoothed objective (|.| replaced by
/// sqrt(|.|^2 + eps^2)) is minimised by damped Newton steps with a
/// Weiszfeld/IRLS fallback while eps decreases to 1e-12; collapsed branch
/// points are then merged.
PositionResult optimize_positions(const FlowTopology& topology, const Instance& instance,
                                  const SolveOptions& options = {});

struct Solution {
  PolyhedralCurrent current;
  double cost = 0.0;
  FlowTopology topology;
  Eigen::MatrixXd branch_points;
  int iterations = 0;
  bool converged = false;
  /// True when every topology was examined (exact mode).
  bool exhaustive = false;
  std::size_t topologies_evaluated = 0;
};

/// Minimum over topologies of optimize_positions().  Ties within a relative
/// 1e-9 resolve to the first topology in key order.
Solution solve(const Instance& instance, const SolveOptions& options = {});

/// Network of a topology with the given branch point positions, merging
/// branch points that lie within `collapse_tolerance` of another node.
PolyhedralCurrent build_flow_current(const FlowTopology& topology, const Instance& instance,
                                     const Eigen::MatrixXd& branch_points,
                                     double collapse_tolerance);

}  // namespace branchcal
