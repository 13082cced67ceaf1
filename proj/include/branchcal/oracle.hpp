#pragma once

#include <cstdint>
#include <string>

#include "branchcal/currents.hpp"
#include "branchcal/solver.hpp"

namespace branchcal {

struct OracleOptions {
  double grid_step = 0.1;
  int restarts = 4;
  std::uint64_t seed = 0;
  int max_sweeps = 4;
  /// Refuse runs whose grid phase would exceed this many evaluations.
  std::uint64_t max_evaluations = 100'000'000;
};

struct OracleResult {
  double cost = 0.0;
  PolyhedralCurrent network{2, 1};
  std::string topology_key;
  std::uint64_t evaluations = 0;
};

/// Brute-force reference for small instances (<= 4 sources, d <= 3), kept
/// independent of solve(): its own recursive topology generator, then per
/// topology a block-coordinate grid search over the bounding box inflated by
/// 20%, polished by restarted Nelder-Mead from the grid optimum and from
/// `restarts` random starts.
OracleResult oracle_solve(const Instance& instance, const OracleOptions& options = {});

}  // namespace branchcal
