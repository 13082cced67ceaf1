#pragma once

#include <vector>

namespace branchcal {

/// Calls visit(blocks) for every set partition of {0, ..., n-1} whose blocks
/// only group pairwise compatible elements.  Partitions are generated as
/// restricted growth strings, so the all-singletons partition always comes
/// first.  Bell(n) grows fast; callers keep n small.
template <typename Compatible, typename Visit>
void for_each_compatible_partition(int n, Compatible&& compatible, Visit&& visit) {
  std::vector<std::vector<int>> blocks;
  blocks.reserve(n);
  // Singletons first: open a new block before trying existing ones.
  auto recurse = [&](auto&& self, int next) -> void {
    if (next == n) {
      visit(static_cast<const std::vector<std::vector<int>>&>(blocks));
      return;
    }
    blocks.push_back({next});
    self(self, next + 1);
    blocks.pop_back();
    for (auto& block : blocks) {
      bool ok = true;
      for (int member : block) {
        if (!compatible(member, next)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      block.push_back(next);
      self(self, next + 1);
      block.pop_back();
    }
  };
  recurse(recurse, 0);
}

}  // namespace branchcal
