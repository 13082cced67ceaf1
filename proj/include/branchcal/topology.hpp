#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace branchcal {

/// Rooted full binary flow tree routing k sources to the sink.
///
/// Nodes 0..k-1 are the sources, k..2k-2 the branch points (post-order, so the
/// top branch point comes last).  parent(v) == kSink marks the edge into the
/// sink.  Every edge carries the label I = set of sources below it, stored as
/// a bitmask; its multiplicity is e_I.
class FlowTopology {
 public:
  static constexpr int kSink = -1;
  static constexpr int kMaxSources = 30;

  /// parent is indexed by node; sources first.  Validated.
  FlowTopology(int source_count, std::vector<int> parent);

  int source_count() const { return sources_; }
  int branch_count() const { return sources_ - 1; }
  int node_count() const { return static_cast<int>(parent_.size()); }
  int parent(int node) const { return parent_[node]; }
  const std::vector<int>& parents() const { return parent_; }
  std::uint32_t label(int node) const { return labels_[node]; }
  /// Canonical nested-pair encoding with 1-based source ids, e.g. "((1,2),3)".
  const std::string& key() const { return key_; }

 private:
  int sources_;
  std::vector<int> parent_;
  std::vector<std::uint32_t> labels_;
  std::string key_;
};

/// Hard cap of the exhaustive enumeration; (2*8-3)!! = 135135 topologies.
constexpr int kMaxExactSources = 8;

/// All full flow trees with the given number of sources, sorted by key.
/// Count is (2k-3)!!.  Throws std::length_error beyond kMaxExactSources.
std::vector<FlowTopology> enumerate_topologies(int n_sources);

/// Uniformly random insertion-order topology (for the heuristic mode).
FlowTopology random_topology(int n_sources, std::mt19937_64& rng);

/// (2k-3)!!.
std::uint64_t topology_count(int n_sources);

}  // namespace branchcal
