#include "branchcal/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace branchcal {

namespace {

// Tree built by recursive bipartition of the source set.  Node ids: sources
// 0..k-1, branch points k..2k-2, sink -1.
struct SplitTree {
  std::vector<int> parent;
  std::vector<std::uint32_t> label;
  std::string key;
};

std::string leaf_key(int s) { return std::to_string(s + 1); }

// All binary trees over the sources in `set`.
std::vector<SplitTree> split_trees(std::uint32_t set, int k) {
  // Yields (key, subsets of every branch node).
  struct Gen {
    std::vector<std::pair<std::string, std::vector<std::uint32_t>>> run(std::uint32_t s) const {
      if (std::popcount(s) == 1) {
        return {{leaf_key(std::countr_zero(s)), {}}};
      }
      std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
      const std::uint32_t low = s & (~s + 1);
      const std::uint32_t rest = s ^ low;
      // Subsets a of s containing `low`, proper.
      for (std::uint32_t extra = rest;; extra = (extra - 1) & rest) {
        const std::uint32_t a = low | extra;
        const std::uint32_t b = s ^ a;
        if (b != 0) {
          for (const auto& [ka, ma] : run(a)) {
            for (const auto& [kb, mb] : run(b)) {
              std::vector<std::uint32_t> merged = ma;
              merged.insert(merged.end(), mb.begin(), mb.end());
              merged.push_back(s);
              out.push_back({"(" + ka + "," + kb + ")", std::move(merged)});
            }
          }
        }
        if (extra == 0) break;
      }
      return out;
    }
  };
  std::vector<SplitTree> trees;
  for (auto& [key, branches] : Gen{}.run(set)) {
    // Branch subsets determine the tree: the parent of a subset is the
    // smallest branch subset strictly containing it.
    SplitTree t;
    t.key = key;
    const int n = 2 * k - 1;
    t.parent.assign(n, -1);
    t.label.assign(n, 0);
    for (int s = 0; s < k; ++s) t.label[s] = std::uint32_t{1} << s;
    for (int j = 0; j < k - 1; ++j) t.label[k + j] = branches[j];
    for (int v = 0; v < n; ++v) {
      int best = -1;
      for (int j = 0; j < k - 1; ++j) {
        const std::uint32_t c = branches[j];
        if (c != t.label[v] && (c & t.label[v]) == t.label[v]) {
          if (best < 0 || std::popcount(c) < std::popcount(branches[best])) best = j;
        }
      }
      t.parent[v] = best < 0 ? -1 : k + best;
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

class Cost {
 public:
  Cost(const SplitTree& tree, const Instance& inst)
      : tree_(tree), inst_(inst), k_(inst.source_count()), d_(static_cast<int>(inst.dim())) {
    for (std::size_t v = 0; v < tree.parent.size(); ++v) {
      weight_.push_back(std::pow(static_cast<double>(std::popcount(tree.label[v])), inst.alpha));
    }
  }

  int free_count() const { return k_ - 1; }
  int dim() const { return d_; }

  // x holds the branch points stacked column-wise (size d*(k-1)).
  double operator()(const Eigen::VectorXd& x) const {
    ++evaluations;
    double total = 0.0;
    for (std::size_t v = 0; v < tree_.parent.size(); ++v) {
      total += weight_[v] * (at(static_cast<int>(v), x) - at(tree_.parent[v], x)).norm();
    }
    return total;
  }

  Eigen::VectorXd at(int node, const Eigen::VectorXd& x) const {
    if (node < 0) return inst_.sink;
    if (node < k_) return inst_.sources.col(node);
    return x.segment((node - k_) * d_, d_);
  }

  mutable std::uint64_t evaluations = 0;

 private:
  const SplitTree& tree_;
  const Instance& inst_;
  int k_;
  int d_;
  std::vector<double> weight_;
};

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

Box bounding_box(const Instance& inst) {
  Eigen::VectorXd lo = inst.sink;
  Eigen::VectorXd hi = inst.sink;
  for (Eigen::Index s = 0; s < inst.sources.cols(); ++s) {
    lo = lo.cwiseMin(inst.sources.col(s));
    hi = hi.cwiseMax(inst.sources.col(s));
  }
  const double extent = (hi - lo).maxCoeff();
  const Eigen::VectorXd pad = Eigen::VectorXd::Constant(lo.size(), 0.1 * extent);
  return {lo - pad, hi + pad};
}

std::vector<std::vector<double>> axis_grids(const Box& box, double step) {
  std::vector<std::vector<double>> axes(box.lo.size());
  for (Eigen::Index a = 0; a < box.lo.size(); ++a) {
    const auto cells = static_cast<long>(std::ceil((box.hi[a] - box.lo[a]) / step));
    for (long i = 0; i <= cells; ++i) {
      axes[a].push_back(std::min(box.lo[a] + static_cast<double>(i) * step, box.hi[a]));
    }
  }
  return axes;
}

// Exhaustive scan of one branch point over the grid with the others fixed.
void scan_point(const Cost& cost, Eigen::VectorXd& x, double& best, int slot,
                const std::vector<std::vector<double>>& axes) {
  const int d = cost.dim();
  std::vector<std::size_t> idx(d, 0);
  Eigen::VectorXd trial = x;
  Eigen::VectorXd winner = x.segment(slot * d, d);
  for (;;) {
    for (int a = 0; a < d; ++a) trial[slot * d + a] = axes[a][idx[a]];
    const double f = cost(trial);
    if (f < best) {
      best = f;
      winner = trial.segment(slot * d, d);
    }
    int a = 0;
    while (a < d && ++idx[a] == axes[a].size()) idx[a++] = 0;
    if (a == d) break;
  }
  x.segment(slot * d, d) = winner;
}

// Nelder-Mead with standard coefficients; restarted from the incumbent until
// a restart fails to improve.
Eigen::VectorXd nelder_mead(const Cost& cost, Eigen::VectorXd x0, double size) {
  const Eigen::Index n = x0.size();
  double fbest = cost(x0);
  for (int restart = 0; restart < 50; ++restart) {
    std::vector<Eigen::VectorXd> simplex{x0};
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd v = x0;
      v[i] += size;
      simplex.push_back(v);
    }
    std::vector<double> f;
    for (const auto& v : simplex) f.push_back(cost(v));
    std::vector<std::size_t> order(n + 1);
    for (int it = 0; it < 4000 * static_cast<int>(n); ++it) {
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[n - 1];
      double spread = 0.0;
      for (const auto& v : simplex) spread = std::max(spread, (v - simplex[lo]).cwiseAbs().maxCoeff());
      if (spread < 1e-13 * (1.0 + size)) break;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        if (i != hi) centroid += simplex[i];
      }
      centroid /= static_cast<double>(n);
      const Eigen::VectorXd xr = centroid + (centroid - simplex[hi]);
      const double fr = cost(xr);
      if (fr < f[lo]) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[hi]);
        const double fe = cost(xe);
        if (fe < fr) {
          simplex[hi] = xe;
          f[hi] = fe;
        } else {
          simplex[hi] = xr;
          f[hi] = fr;
        }
      } else if (fr < f[second]) {
        simplex[hi] = xr;
        f[hi] = fr;
      } else {
        const bool outside = fr < f[hi];
        const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                           : Eigen::VectorXd(centroid + 0.5 * (simplex[hi] - centroid));
        const double fc = cost(xc);
        if (fc < std::min(fr, f[hi])) {
          simplex[hi] = xc;
          f[hi] = fc;
        } else {
          for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
            if (i == lo) continue;
            simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
            f[i] = cost(simplex[i]);
          }
        }
      }
    }
    const auto lo = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    const bool improved = f[lo] < fbest * (1.0 - 1e-14);
    if (f[lo] <= fbest) {
      fbest = f[lo];
      x0 = simplex[lo];
    }
    if (!improved && restart > 0) break;
    size *= 0.5;
  }
  return x0;
}

PolyhedralCurrent emit_network(const SplitTree& tree, const Instance& inst,
                               const Eigen::VectorXd& x, double snap) {
  const int k = inst.source_count();
  const Eigen::Index d = inst.dim();
  std::vector<Eigen::VectorXd> nodes;
  for (int s = 0; s < k; ++s) nodes.push_back(inst.sources.col(s));
  nodes.push_back(inst.sink);
  std::vector<int> id(2 * k - 1);
  for (int s = 0; s < k; ++s) id[s] = s;
  for (int j = 0; j < k - 1; ++j) {
    const Eigen::VectorXd p = x.segment(j * d, d);
    id[k + j] = -1;
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      if ((nodes[t] - p).norm() <= snap) {
        id[k + j] = static_cast<int>(t);
        break;
      }
    }
    if (id[k + j] < 0) {
      id[k + j] = static_cast<int>(nodes.size());
      nodes.push_back(p);
    }
  }
  Eigen::MatrixXd points(d, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = nodes[i];
  std::vector<Segment> segments;
  for (int v = 0; v < 2 * k - 1; ++v) {
    const int a = id[v];
    const int b = tree.parent[v] < 0 ? k : id[tree.parent[v]];
    if (a == b) continue;
    Multiplicity theta = Multiplicity::Zero(k);
    for (int s = 0; s < k; ++s) theta[s] = (tree.label[v] >> s) & 1u;
    segments.push_back({a, b, theta});
  }
  return PolyhedralCurrent(points, k, std::move(segments));
}

}  // namespace

OracleResult oracle_solve(const Instance& instance, const OracleOptions& options) {
  instance.validate();
  const int k = instance.source_count();
  const Eigen::Index d = instance.dim();
  if (k > 4) throw std::invalid_argument("oracle_solve: at most 4 sources");
  if (d > 3) throw std::invalid_argument("oracle_solve: grid mode needs d <= 3");
  if (!(options.grid_step > 0.0)) throw std::invalid_argument("oracle_solve: grid_step must be positive");
  if (options.restarts < 0 || options.max_sweeps < 1) {
    throw std::invalid_argument("oracle_solve: restarts >= 0 and max_sweeps >= 1 required");
  }

  const Box box = bounding_box(instance);
  const auto axes = axis_grids(box, options.grid_step);
  const std::uint32_t all = (k >= 32) ? ~0u : ((std::uint32_t{1} << k) - 1);
  const std::vector<SplitTree> trees = split_trees(all, k);

  double cells = 1.0;
  for (const auto& a : axes) cells *= static_cast<double>(a.size());
  const double planned = cells * (k - 1) * options.max_sweeps * static_cast<double>(trees.size());
  if (planned > static_cast<double>(options.max_evaluations)) {
    throw std::length_error("oracle_solve: grid search needs about " +
                            std::to_string(static_cast<long long>(planned)) +
                            " evaluations, above the limit; increase grid_step");
  }

  const double extent = (box.hi - box.lo).maxCoeff();
  std::mt19937_64 rng(options.seed);
  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  std::size_t best_tree = 0;
  Eigen::VectorXd best_x;

  for (std::size_t t = 0; t < trees.size(); ++t) {
    const Cost cost(trees[t], instance);
    const Eigen::Index n = d * (k - 1);
    Eigen::VectorXd x(n);
    const Eigen::VectorXd centre = 0.5 * (box.lo + box.hi);
    for (int j = 0; j < k - 1; ++j) x.segment(j * d, d) = centre;

    double f = cost(x);
    for (int sweep = 0; sweep < options.max_sweeps && k > 1; ++sweep) {
      const double before = f;
      for (int j = 0; j < k - 1; ++j) scan_point(cost, x, f, j, axes);
      if (!(f < before)) break;
    }

    std::vector<Eigen::VectorXd> starts{x};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < options.restarts; ++r) {
      Eigen::VectorXd s(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index a = i % d;
        s[i] = box.lo[a] + unit(rng) * (box.hi[a] - box.lo[a]);
      }
      starts.push_back(s);
    }

    Eigen::VectorXd tree_best = x;
    double tree_cost = f;
    if (n > 0) {
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const double size = s == 0 ? options.grid_step : 0.25 * extent;
        const Eigen::VectorXd y = nelder_mead(cost, starts[s], size);
        const double fy = cost(y);
        if (fy < tree_cost) {
          tree_cost = fy;
          tree_best = y;
        }
      }
    }
    best.evaluations += cost.evaluations;
    if (tree_cost < best.cost) {
      best.cost = tree_cost;
      best_tree = t;
      best_x = tree_best;
    }
  }

  best.topology_key = trees[best_tree].key;
  best.network = emit_network(trees[best_tree], instance, best_x, 1e-6 * std::max(extent, 1.0));
  return best;
}

}  // namespace branchcal
