#include "branchcal/currents.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace branchcal {

namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

}  // namespace

Multiplicity BoundaryMeasure::total(Eigen::Index coeff_dim) const {
  Multiplicity sum = Multiplicity::Zero(coeff_dim);
  for (const auto& atom : atoms) sum += atom.weight;
  return sum;
}

PolyhedralCurrent::PolyhedralCurrent(Eigen::Index dim, Eigen::Index coeff_dim)
    : points_(dim, 0), coeff_dim_(coeff_dim) {
  if (dim < 1 || coeff_dim < 1) {
    throw std::invalid_argument("PolyhedralCurrent: dimensions must be positive");
  }
}

PolyhedralCurrent::PolyhedralCurrent(Eigen::MatrixXd points, Eigen::Index coeff_dim,
                                     std::vector<Segment> segments, double node_tolerance)
    : points_(std::move(points)), coeff_dim_(coeff_dim) {
  if (points_.rows() < 1 || coeff_dim_ < 1) {
    throw std::invalid_argument("PolyhedralCurrent: dimensions must be positive");
  }
  if (!points_.allFinite()) throw std::invalid_argument("PolyhedralCurrent: non-finite point");

  const Eigen::Index n = points_.cols();
  std::vector<Eigen::Index> rep(n);
  std::iota(rep.begin(), rep.end(), Eigen::Index{0});
  for (Eigen::Index j = 1; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (rep[i] == i && (points_.col(i) - points_.col(j)).norm() <= node_tolerance) {
        rep[j] = i;
        break;
      }
    }
  }

  std::map<std::pair<Eigen::Index, Eigen::Index>, Multiplicity> merged;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> order;
  for (auto& s : segments) {
    if (s.tail < 0 || s.tail >= n || s.head < 0 || s.head >= n) {
      throw std::invalid_argument("PolyhedralCurrent: segment references unknown node");
    }
    if (s.theta.size() != coeff_dim_) {
      throw std::invalid_argument("PolyhedralCurrent: multiplicity has dimension " +
                                  std::to_string(s.theta.size()) + ", expected " +
                                  std::to_string(coeff_dim_));
    }
    Eigen::Index a = rep[s.tail];
    Eigen::Index b = rep[s.head];
    if (a == b) throw std::invalid_argument("PolyhedralCurrent: zero-length segment");
    Multiplicity theta = s.theta;
    if (lex_less(points_.col(b), points_.col(a))) {
      std::swap(a, b);
      theta = -theta;
    }
    auto key = std::make_pair(a, b);
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, theta);
      order.push_back(key);
    } else {
      it->second += theta;
    }
  }
  for (const auto& key : order) {
    const Multiplicity& theta = merged[key];
    if (theta.isZero()) continue;
    segments_.push_back({key.first, key.second, theta});
  }
}

BoundaryMeasure boundary(const PolyhedralCurrent& current) {
  const Eigen::Index n = current.node_count();
  std::vector<Multiplicity> net(n, Multiplicity::Zero(current.coeff_dim()));
  for (const auto& s : current.segments()) {
    net[s.head] += s.theta;
    net[s.tail] -= s.theta;
  }
  BoundaryMeasure out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!net[i].isZero()) out.atoms.push_back({current.point(i), net[i]});
  }
  return out;
}

double mass(const PolyhedralCurrent& current, const AlphaNorm& norm) {
  if (norm.coeff_dim() != current.coeff_dim()) {
    throw std::invalid_argument("mass: norm and current coefficient dimensions differ");
  }
  double total = 0.0;
  for (const auto& s : current.segments()) total += norm(s.theta) * current.length(s);
  return total;
}

double boundary_mass(const BoundaryMeasure& measure, const AlphaNorm& norm) {
  double total = 0.0;
  for (const auto& atom : measure.atoms) total += norm(atom.weight);
  return total;
}

PolyhedralCurrent component(const PolyhedralCurrent& current, Eigen::Index index) {
  if (index < 0 || index >= current.coeff_dim()) {
    throw std::out_of_range("component: index " + std::to_string(index) +
                            " outside [0, " + std::to_string(current.coeff_dim()) + ")");
  }
  std::vector<Segment> segs;
  for (const auto& s : current.segments()) {
    if (s.theta[index] == 0) continue;
    segs.push_back({s.tail, s.head, Multiplicity::Constant(1, s.theta[index])});
  }
  return PolyhedralCurrent(current.points(), 1, std::move(segs));
}

bool is_acyclic(const PolyhedralCurrent& current) {
  std::vector<Eigen::Index> parent(current.node_count());
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& s : current.segments()) {
    const Eigen::Index a = find(s.tail);
    const Eigen::Index b = find(s.head);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

std::vector<NodeAngles> branch_angles(const PolyhedralCurrent& current) {
  std::vector<std::vector<Eigen::VectorXd>> dirs(current.node_count());
  for (const auto& s : current.segments()) {
    const Eigen::VectorXd t = current.tangent(s);
    dirs[s.tail].push_back(t);
    dirs[s.head].push_back(-t);
  }
  std::vector<NodeAngles> out;
  for (Eigen::Index i = 0; i < current.node_count(); ++i) {
    const auto& d = dirs[i];
    if (d.size() < 3) continue;
    NodeAngles entry{i, {}};
    for (std::size_t a = 0; a < d.size(); ++a) {
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        const double c = std::clamp(d[a].dot(d[b]), -1.0, 1.0);
        entry.angles_deg.push_back(std::acos(c) * 180.0 / std::numbers::pi);
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

bool same_boundary(const BoundaryMeasure& a, const BoundaryMeasure& b, double point_tol) {
  if (a.atoms.size() != b.atoms.size()) return false;
  std::vector<char> used(b.atoms.size(), 0);
  for (const auto& x : a.atoms) {
    bool found = false;
    for (std::size_t j = 0; j < b.atoms.size(); ++j) {
      if (used[j]) continue;
      const auto& y = b.atoms[j];
      if (x.point.size() == y.point.size() && (x.point - y.point).norm() <= point_tol &&
          x.weight == y.weight) {
        used[j] = 1;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace branchcal
