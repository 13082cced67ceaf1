#include "branchcal/topology.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace branchcal {

namespace {

// Growing tree during insertion: arbitrary node ids, leaves tagged by source.
struct RawTree {
  std::vector<int> parent;  // kSink for the root edge
  std::vector<int> source;  // source index for leaves, -1 for branch nodes
};

// Relabels a raw tree into the canonical node numbering.
FlowTopology canonicalize(const RawTree& raw, int k) {
  const int n = static_cast<int>(raw.parent.size());
  std::vector<std::vector<int>> children(n);
  int top = -1;
  for (int v = 0; v < n; ++v) {
    if (raw.parent[v] == FlowTopology::kSink) {
      top = v;
    } else {
      children[raw.parent[v]].push_back(v);
    }
  }
  std::vector<int> min_leaf(n, k);
  std::function<int(int)> fill = [&](int v) {
    if (raw.source[v] >= 0) return min_leaf[v] = raw.source[v];
    int m = k;
    for (int c : children[v]) m = std::min(m, fill(c));
    return min_leaf[v] = m;
  };
  fill(top);

  std::vector<int> new_id(n, -1);
  int next_branch = k;
  std::function<void(int)> number = [&](int v) {
    if (raw.source[v] >= 0) {
      new_id[v] = raw.source[v];
      return;
    }
    auto& ch = children[v];
    std::sort(ch.begin(), ch.end(), [&](int a, int b) { return min_leaf[a] < min_leaf[b]; });
    for (int c : ch) number(c);
    new_id[v] = next_branch++;
  };
  number(top);

  std::vector<int> parent(n);
  for (int v = 0; v < n; ++v) {
    parent[new_id[v]] = raw.parent[v] == FlowTopology::kSink ? FlowTopology::kSink
                                                             : new_id[raw.parent[v]];
  }
  return FlowTopology(k, std::move(parent));
}

// Inserts source `leaf` on the edge above node v.
RawTree insert_leaf(const RawTree& t, int v, int leaf) {
  RawTree out = t;
  const int branch = static_cast<int>(out.parent.size());
  out.parent.push_back(t.parent[v]);
  out.source.push_back(-1);
  out.parent[v] = branch;
  out.parent.push_back(branch);
  out.source.push_back(leaf);
  return out;
}

}  // namespace

FlowTopology::FlowTopology(int source_count, std::vector<int> parent)
    : sources_(source_count), parent_(std::move(parent)) {
  if (sources_ < 1 || sources_ > kMaxSources) {
    throw std::invalid_argument("FlowTopology: source count out of range");
  }
  const int n = 2 * sources_ - 1;
  if (static_cast<int>(parent_.size()) != n) {
    throw std::invalid_argument("FlowTopology: expected 2k-1 nodes");
  }
  std::vector<int> child_count(n, 0);
  int roots = 0;
  for (int v = 0; v < n; ++v) {
    const int p = parent_[v];
    if (p == kSink) {
      ++roots;
    } else if (p < sources_ || p >= n || p == v) {
      throw std::invalid_argument("FlowTopology: parent must be a branch node");
    } else {
      ++child_count[p];
    }
  }
  if (roots != 1) throw std::invalid_argument("FlowTopology: exactly one edge must reach the sink");
  for (int v = sources_; v < n; ++v) {
    if (child_count[v] != 2) {
      throw std::invalid_argument("FlowTopology: branch nodes need exactly two children");
    }
  }

  labels_.assign(n, 0);
  for (int s = 0; s < sources_; ++s) {
    int v = s;
    int guard = 0;
    while (v != kSink) {
      labels_[v] |= std::uint32_t{1} << s;
      v = parent_[v];
      if (++guard > n) throw std::invalid_argument("FlowTopology: parent array has a cycle");
    }
  }

  std::vector<std::vector<int>> children(n);
  int top = 0;
  for (int v = 0; v < n; ++v) {
    if (parent_[v] == kSink) {
      top = v;
    } else {
      children[parent_[v]].push_back(v);
    }
  }
  std::function<std::string(int)> encode = [&](int v) -> std::string {
    if (v < sources_) return std::to_string(v + 1);
    auto ch = children[v];
    std::sort(ch.begin(), ch.end(), [&](int a, int b) {
      return (labels_[a] & -labels_[a]) < (labels_[b] & -labels_[b]);
    });
    return "(" + encode(ch[0]) + "," + encode(ch[1]) + ")";
  };
  key_ = encode(top);
}

std::uint64_t topology_count(int n_sources) {
  std::uint64_t c = 1;
  for (int j = 3; j <= 2 * n_sources - 3; j += 2) c *= static_cast<std::uint64_t>(j);
  return c;
}

std::vector<FlowTopology> enumerate_topologies(int n_sources) {
  if (n_sources < 1) throw std::invalid_argument("enumerate_topologies: need at least one source");
  if (n_sources > kMaxExactSources) {
    throw std::length_error("enumerate_topologies: " + std::to_string(n_sources) +
                            " sources exceed the exact-mode cap of " +
                            std::to_string(kMaxExactSources) + "; use the heuristic mode");
  }
  std::vector<RawTree> level{RawTree{{FlowTopology::kSink}, {0}}};
  for (int leaf = 1; leaf < n_sources; ++leaf) {
    std::vector<RawTree> next;
    next.reserve(level.size() * (2 * leaf - 1));
    for (const auto& t : level) {
      for (int v = 0; v < static_cast<int>(t.parent.size()); ++v) {
        next.push_back(insert_leaf(t, v, leaf));
      }
    }
    level = std::move(next);
  }
  std::vector<FlowTopology> out;
  out.reserve(level.size());
  for (const auto& t : level) out.push_back(canonicalize(t, n_sources));
  std::sort(out.begin(), out.end(),
            [](const FlowTopology& a, const FlowTopology& b) { return a.key() < b.key(); });
  return out;
}

FlowTopology random_topology(int n_sources, std::mt19937_64& rng) {
  if (n_sources < 1 || n_sources > FlowTopology::kMaxSources) {
    throw std::invalid_argument("random_topology: source count out of range");
  }
  RawTree t{{FlowTopology::kSink}, {0}};
  for (int leaf = 1; leaf < n_sources; ++leaf) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(t.parent.size()) - 1);
    t = insert_leaf(t, pick(rng), leaf);
  }
  return canonicalize(t, n_sources);
}

}  // namespace branchcal
