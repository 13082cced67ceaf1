#include "branchcal/alpha_norm.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "branchcal/partition.hpp"

namespace branchcal {

namespace {

constexpr int kMaxSignEnumerationRows = 24;
constexpr int kMaxPartitionCluster = 10;

// Gradient of psi* at y (a subgradient where psi* is not differentiable).
Eigen::VectorXd dual_gradient(const Eigen::VectorXd& y, const AlphaNorm& norm) {
  const double alpha = norm.alpha();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(y.size());
  if (alpha == 1.0) {
    Eigen::Index k = 0;
    y.cwiseAbs().maxCoeff(&k);
    g[k] = y[k] >= 0.0 ? 1.0 : -1.0;
    return g;
  }
  if (alpha == 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) g[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    return g;
  }
  const double q = 1.0 / (1.0 - alpha);
  const double top = y.cwiseAbs().maxCoeff();
  if (top == 0.0) return g;
  const Eigen::ArrayXd a = y.cwiseAbs().array() / top;
  const double nq = std::pow(a.pow(q).sum(), 1.0 / q);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double s = y[i] >= 0.0 ? 1.0 : -1.0;
    g[i] = s * std::pow(a[i] / nq, q - 1.0);
  }
  return g;
}

double sign_enumeration_comass(const CovectorMatrix& omega) {
  const int rows = static_cast<int>(omega.rows());
  // s and -s give the same norm, so the first sign is pinned to +1.
  const std::uint64_t count = std::uint64_t{1} << (rows - 1);
  double best = 0.0;
  Eigen::RowVectorXd acc(omega.cols());
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    acc = omega.row(0);
    for (int i = 1; i < rows; ++i) {
      if (mask & (std::uint64_t{1} << (i - 1))) {
        acc -= omega.row(i);
      } else {
        acc += omega.row(i);
      }
    }
    best = std::max(best, acc.norm());
  }
  return best;
}

struct BlockChoice {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> blocks;
};

double block_cost(const Eigen::MatrixXd& v, const std::vector<int>& block, const AlphaNorm& norm,
                  Eigen::RowVectorXd* mean_out = nullptr) {
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(v.cols());
  for (int i : block) mean += v.row(i);
  mean /= static_cast<double>(block.size());
  double residual = 0.0;
  for (int i : block) residual += (v.row(i) - mean).norm();
  if (mean_out) *mean_out = mean;
  return norm.of_index_set(static_cast<Eigen::Index>(block.size())) * mean.norm() + residual;
}

// Best partition of the rows listed in `members`, all of which sit in one
// cluster of the row-matching graph.
BlockChoice best_cluster_partition(const Eigen::MatrixXd& v, const std::vector<int>& members,
                                   const std::vector<std::vector<char>>& match,
                                   const AlphaNorm& norm) {
  BlockChoice best;
  const int m = static_cast<int>(members.size());
  if (m > kMaxPartitionCluster) {
    // Too many partitions; greedy agglomeration keeps the bound valid.
    std::vector<std::vector<int>> blocks;
    for (int i : members) {
      bool placed = false;
      for (auto& b : blocks) {
        if (std::all_of(b.begin(), b.end(), [&](int j) { return match[i][j] != 0; })) {
          b.push_back(i);
          placed = true;
          break;
        }
      }
      if (!placed) blocks.push_back({i});
    }
    best.cost = 0.0;
    for (const auto& b : blocks) best.cost += block_cost(v, b, norm);
    best.blocks = std::move(blocks);
    return best;
  }
  for_each_compatible_partition(
      m, [&](int a, int b) { return match[members[a]][members[b]] != 0; },
      [&](const std::vector<std::vector<int>>& local) {
        double cost = 0.0;
        std::vector<std::vector<int>> mapped;
        mapped.reserve(local.size());
        for (const auto& blk : local) {
          std::vector<int> rows;
          rows.reserve(blk.size());
          for (int k : blk) rows.push_back(members[k]);
          cost += block_cost(v, rows, norm);
          mapped.push_back(std::move(rows));
        }
        if (cost < best.cost) {
          best.cost = cost;
          best.blocks = std::move(mapped);
        }
      });
  return best;
}

double exact_or_upper_comass(const CovectorMatrix& w, const AlphaNorm& norm) {
  if (norm.has_closed_form_comass() &&
      !(norm.alpha() == 0.0 && w.rows() > kMaxSignEnumerationRows)) {
    return comass(w, norm).value;
  }
  return comass_upper_bound(w, norm);
}

}  // namespace

ComassResult comass(const CovectorMatrix& omega, const AlphaNorm& norm,
                    const AscentOptions& options) {
  if (omega.rows() != norm.coeff_dim()) {
    throw std::invalid_argument("comass: form has " + std::to_string(omega.rows()) +
                                " rows, norm expects " + std::to_string(norm.coeff_dim()));
  }
  if (!omega.allFinite()) throw std::invalid_argument("comass: non-finite entries");
  if (omega.size() == 0 || omega.isZero(0.0)) return {0.0, true};

  if (norm.alpha() == 0.5) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(omega);
    return {svd.singularValues()(0), true};
  }
  if (norm.alpha() == 1.0) {
    return {omega.rowwise().norm().maxCoeff(), true};
  }
  if (norm.alpha() == 0.0 && omega.rows() <= kMaxSignEnumerationRows) {
    return {sign_enumeration_comass(omega), true};
  }
  return {comass_ascent(omega, norm, options), false};
}

double comass_ascent(const CovectorMatrix& omega, const AlphaNorm& norm,
                     const AscentOptions& options) {
  if (omega.rows() != norm.coeff_dim()) {
    throw std::invalid_argument("comass_ascent: row count does not match the norm");
  }
  const Eigen::Index d = omega.cols();
  if (d == 0 || omega.isZero(0.0)) return 0.0;

  auto value = [&](const Eigen::VectorXd& tau) { return norm.dual(omega * tau); };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = omega.norm();
  double best = 0.0;

  for (int restart = 0; restart < options.restarts; ++restart) {
    Eigen::VectorXd tau(d);
    for (Eigen::Index k = 0; k < d; ++k) tau[k] = gauss(rng);
    if (tau.norm() == 0.0) tau[0] = 1.0;
    tau.normalize();

    double current = value(tau);
    double step = 1.0 / scale;
    for (int it = 0; it < options.iterations && step * scale > 1e-15; ++it) {
      Eigen::VectorXd grad = omega.transpose() * dual_gradient(omega * tau, norm);
      grad -= grad.dot(tau) * tau;
      if (grad.norm() == 0.0) break;
      Eigen::VectorXd trial = tau + step * grad;
      const double n = trial.norm();
      if (n == 0.0) {
        step *= 0.5;
        continue;
      }
      trial /= n;
      const double tv = value(trial);
      if (tv > current) {
        tau = trial;
        current = tv;
        step = std::min(step * 2.0, 1e6 / scale);
      } else {
        step *= 0.5;
      }
    }
    // Support-point iteration tau <- grad / |grad|; monotone since the
    // objective is convex and one-homogeneous.
    for (int it = 0; it < options.iterations; ++it) {
      Eigen::VectorXd grad = omega.transpose() * dual_gradient(omega * tau, norm);
      const double n = grad.norm();
      if (n == 0.0) break;
      grad /= n;
      const double tv = value(grad);
      if (!(tv > current)) break;
      tau = grad;
      current = tv;
    }
    best = std::max(best, current);
  }
  return best;
}

double comass_upper_bound(const CovectorMatrix& omega, const AlphaNorm& norm) {
  if (omega.size() == 0) return 0.0;
  const double rows_sum = omega.rowwise().norm().sum();
  if (norm.alpha() == 1.0) return omega.rowwise().norm().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(omega);
  const double sigma = svd.singularValues()(0);
  // |y|_q <= (n-1)^{max(0, 1/q - 1/2)} |y|_2
  const double inv_q = 1.0 - norm.alpha();
  const double factor =
      std::pow(static_cast<double>(omega.rows()), std::max(0.0, inv_q - 0.5));
  return std::min(rows_sum, sigma * factor);
}

bool rows_match(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double tol) {
  const double scale = std::max({a.norm(), b.norm(), 1e-30});
  return (a - b).norm() <= tol * scale;
}

MassBounds mass_norm_bounds(const Eigen::MatrixXd& v, const AlphaNorm& norm, double tol) {
  if (v.rows() != norm.coeff_dim()) {
    throw std::invalid_argument("mass_norm_bounds: row count does not match the norm");
  }
  if (v.isZero(0.0)) return {0.0, 0.0};

  const int n = static_cast<int>(v.rows());
  std::vector<std::vector<char>> match(n, std::vector<char>(n, 0));
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    match[i][i] = 1;
    for (int j = i + 1; j < n; ++j) {
      if (rows_match(v.row(i), v.row(j), tol)) {
        match[i][j] = match[j][i] = 1;
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<std::vector<int>> clusters;
  {
    std::vector<int> slot(n, -1);
    for (int i = 0; i < n; ++i) {
      const int r = find(i);
      if (slot[r] < 0) {
        slot[r] = static_cast<int>(clusters.size());
        clusters.emplace_back();
      }
      clusters[slot[r]].push_back(i);
    }
  }

  MassBounds out;
  std::vector<std::vector<int>> blocks;
  for (const auto& members : clusters) {
    BlockChoice choice = best_cluster_partition(v, members, match, norm);
    out.hi += choice.cost;
    for (auto& b : choice.blocks) blocks.push_back(std::move(b));
  }

  // Dual candidates, each rescaled to comass 1.
  std::vector<CovectorMatrix> candidates;
  candidates.push_back(v);
  {
    CovectorMatrix w = CovectorMatrix::Zero(v.rows(), v.cols());
    for (const auto& b : blocks) {
      Eigen::RowVectorXd mean;
      block_cost(v, b, norm, &mean);
      const double len = mean.norm();
      if (len == 0.0) continue;
      const double weight =
          norm.of_index_set(static_cast<Eigen::Index>(b.size())) / static_cast<double>(b.size());
      for (int i : b) w.row(i) = weight * mean / len;
    }
    candidates.push_back(std::move(w));
  }
  for (const auto& w : candidates) {
    const double c = exact_or_upper_comass(w, norm);
    if (c <= 0.0) continue;
    out.lo = std::max(out.lo, (w.array() * v.array()).sum() / c);
  }
  out.lo = std::min(out.lo, out.hi);
  return out;
}

}  // namespace branchcal
