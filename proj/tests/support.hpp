#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "branchcal/currents.hpp"
#include "branchcal/io.hpp"
#include "branchcal/solver.hpp"

namespace branchcal::testing {

inline std::string data_path(const std::string& name) {
  return std::string(BRANCHCAL_DATA_DIR) + "/" + name;
}

inline NetworkFile load_network(const std::string& name) {
  return parse_network(read_text(data_path(name)));
}

inline Instance load_instance(const std::string& name) {
  return parse_instance(read_text(data_path(name)));
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Eigen::VectorXd gaussian(Eigen::Index n) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng_);
    return v;
  }

  Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c) {
    return gaussian(r * c).reshaped(r, c);
  }

  Eigen::VectorXd box(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  Multiplicity multiplicity(Eigen::Index n, int bound) {
    Multiplicity h(n);
    for (auto& x : h) x = integer(-bound, bound);
    return h;
  }

  Multiplicity nonzero_multiplicity(Eigen::Index n, int bound) {
    for (;;) {
      Multiplicity h = multiplicity(n, bound);
      if (h.any()) return h;
    }
  }

  /// Vectors of varied character: gaussian, near sign patterns, near axes.
  Eigen::VectorXd varied(Eigen::Index n) {
    switch (integer(0, 2)) {
      case 0:
        return gaussian(n);
      case 1: {
        Eigen::VectorXd v(n);
        for (auto& x : v) x = (coin() ? 1.0 : -1.0) * (1.0 + 0.02 * uniform());
        return v;
      }
      default: {
        Eigen::VectorXd v = 0.02 * gaussian(n);
        v[integer(0, static_cast<int>(n) - 1)] += coin() ? 1.0 : -1.0;
        return v;
      }
    }
  }

  /// Random single-sink instance with well separated points.
  Instance instance(int sources, Eigen::Index d, double alpha) {
    for (;;) {
      Instance inst;
      inst.alpha = alpha;
      inst.sources.resize(d, sources);
      for (int s = 0; s < sources; ++s) inst.sources.col(s) = box(d);
      inst.sink = box(d);
      bool ok = true;
      for (int s = 0; s < sources && ok; ++s) {
        ok = (inst.sources.col(s) - inst.sink).norm() > 0.1;
        for (int t = 0; t < s && ok; ++t) ok = (inst.sources.col(s) - inst.sources.col(t)).norm() > 0.1;
      }
      if (ok) return inst;
    }
  }

  /// Segment soup on random points; may contain cycles.
  PolyhedralCurrent current(Eigen::Index d, Eigen::Index coeff_dim, int nodes, int segments) {
    Eigen::MatrixXd pts(d, nodes);
    for (int i = 0; i < nodes; ++i) pts.col(i) = box(d, -2.0, 2.0);
    std::vector<Segment> segs;
    for (int s = 0; s < segments; ++s) {
      const int a = integer(0, nodes - 1);
      int b = integer(0, nodes - 2);
      if (b >= a) ++b;
      segs.push_back({a, b, multiplicity(coeff_dim, 2)});
    }
    return PolyhedralCurrent(pts, coeff_dim, segs);
  }

 private:
  std::mt19937_64 rng_;
};

/// Replaces every segment by a two-segment path through a random detour point.
inline PolyhedralCurrent reroute(const PolyhedralCurrent& t, Gen& gen, double size) {
  Eigen::MatrixXd pts(t.dim(), t.node_count() + static_cast<Eigen::Index>(t.segments().size()));
  pts.leftCols(t.node_count()) = t.points();
  std::vector<Segment> segs;
  Eigen::Index next = t.node_count();
  for (const auto& s : t.segments()) {
    pts.col(next) = 0.5 * (t.point(s.tail) + t.point(s.head)) + size * gen.gaussian(t.dim());
    segs.push_back({s.tail, next, s.theta});
    segs.push_back({next, s.head, s.theta});
    ++next;
  }
  return PolyhedralCurrent(pts, t.coeff_dim(), segs);
}

}  // namespace branchcal::testing
