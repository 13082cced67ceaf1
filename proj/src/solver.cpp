#include "branchcal/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

namespace branchcal {

namespace {

constexpr double kFinalSmoothing = 1e-12;
constexpr double kTieTolerance = 1e-9;

struct Edge {
  int child;   // topology node
  int parent;  // topology node or kSink
  double weight;
};

class TreeObjective {
 public:
  TreeObjective(const FlowTopology& topology, const Instance& instance)
      : topology_(topology),
        instance_(instance),
        k_(topology.source_count()),
        m_(topology.branch_count()),
        d_(static_cast<int>(instance.dim())) {
    const AlphaNorm norm = instance.norm();
    for (int v = 0; v < topology.node_count(); ++v) {
      const int size = std::popcount(topology.label(v));
      edges_.push_back({v, topology.parent(v), norm.of_index_set(size)});
      total_weight_ += edges_.back().weight;
    }
  }

  int branch_count() const { return m_; }
  int dim() const { return d_; }
  double total_weight() const { return total_weight_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_free(int node) const { return node >= k_; }
  int slot(int node) const { return node - k_; }

  Eigen::VectorXd position(int node, const Eigen::MatrixXd& x) const {
    if (node == FlowTopology::kSink) return instance_.sink;
    if (node < k_) return instance_.sources.col(node);
    return x.col(node - k_);
  }

  double value(const Eigen::MatrixXd& x, double eps) const {
    double f = 0.0;
    for (const auto& e : edges_) {
      const double len2 = (position(e.child, x) - position(e.parent, x)).squaredNorm();
      f += e.weight * std::sqrt(len2 + eps * eps);
    }
    return f;
  }

  void gradient_hessian(const Eigen::MatrixXd& x, double eps, Eigen::VectorXd& g,
                        Eigen::MatrixXd& h) const {
    const int n = m_ * d_;
    g.setZero(n);
    h.setZero(n, n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d_, d_);
    for (const auto& e : edges_) {
      const Eigen::VectorXd delta = position(e.child, x) - position(e.parent, x);
      const double s = std::sqrt(delta.squaredNorm() + eps * eps);
      const Eigen::VectorXd ge = e.weight * delta / s;
      const Eigen::MatrixXd he = e.weight * (eye / s - delta * delta.transpose() / (s * s * s));
      const bool a = is_free(e.child);
      const bool b = e.parent != FlowTopology::kSink && is_free(e.parent);
      if (a) {
        g.segment(slot(e.child) * d_, d_) += ge;
        h.block(slot(e.child) * d_, slot(e.child) * d_, d_, d_) += he;
      }
      if (b) {
        g.segment(slot(e.parent) * d_, d_) -= ge;
        h.block(slot(e.parent) * d_, slot(e.parent) * d_, d_, d_) += he;
      }
      if (a && b) {
        h.block(slot(e.child) * d_, slot(e.parent) * d_, d_, d_) -= he;
        h.block(slot(e.parent) * d_, slot(e.child) * d_, d_, d_) -= he;
      }
    }
  }

  // One joint Weiszfeld step: minimise the quadratic majorant
  // sum_e (w_e / s_e) |x_u - x_v|^2, a weighted Laplacian solve.
  Eigen::MatrixXd weiszfeld_step(const Eigen::MatrixXd& x, double eps) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m_, m_);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m_, d_);
    for (const auto& e : edges_) {
      const double s = std::sqrt((position(e.child, x) - position(e.parent, x)).squaredNorm() +
                                 eps * eps);
      const double c = e.weight / s;
      const bool fa = is_free(e.child);
      const bool fb = e.parent != FlowTopology::kSink && is_free(e.parent);
      if (fa) a(slot(e.child), slot(e.child)) += c;
      if (fb) a(slot(e.parent), slot(e.parent)) += c;
      if (fa && fb) {
        a(slot(e.child), slot(e.parent)) -= c;
        a(slot(e.parent), slot(e.child)) -= c;
      } else if (fa) {
        rhs.row(slot(e.child)) += c * position(e.parent, x).transpose();
      } else if (fb) {
        rhs.row(slot(e.parent)) += c * position(e.child, x).transpose();
      }
    }
    return a.ldlt().solve(rhs).transpose();
  }

  double unsmoothed(const Eigen::MatrixXd& x) const { return value(x, 0.0); }

 private:
  const FlowTopology& topology_;
  const Instance& instance_;
  int k_;
  int m_;
  int d_;
  std::vector<Edge> edges_;
  double total_weight_ = 0.0;
};

Eigen::MatrixXd initial_positions(const FlowTopology& topology, const Instance& instance) {
  const int k = topology.source_count();
  Eigen::MatrixXd x(instance.dim(), topology.branch_count());
  for (int j = 0; j < topology.branch_count(); ++j) {
    const std::uint32_t label = topology.label(k + j);
    Eigen::VectorXd acc = instance.sink;
    int count = 1;
    for (int s = 0; s < k; ++s) {
      if (label & (std::uint32_t{1} << s)) {
        acc += instance.sources.col(s);
        ++count;
      }
    }
    x.col(j) = acc / count;
  }
  return x;
}

double instance_scale(const Instance& instance) {
  double scale = 0.0;
  for (Eigen::Index s = 0; s < instance.sources.cols(); ++s) {
    scale = std::max(scale, (instance.sources.col(s) - instance.sink).norm());
  }
  return std::max(scale, 1.0);
}

bool first_order_ok(const TreeObjective& obj, const Eigen::MatrixXd& x,
                    const SolveOptions& options) {
  const int m = obj.branch_count();
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(obj.dim());
    bool collapsed = false;
    const Eigen::VectorXd xj = x.col(j);
    for (const auto& e : obj.edges()) {
      int other;
      if (obj.is_free(e.child) && obj.slot(e.child) == j) {
        other = e.parent;
      } else if (e.parent != FlowTopology::kSink && obj.is_free(e.parent) &&
                 obj.slot(e.parent) == j) {
        other = e.child;
      } else {
        continue;
      }
      const Eigen::VectorXd delta = xj - obj.position(other, x);
      const double len = delta.norm();
      if (len <= options.collapse_tolerance) {
        collapsed = true;
        break;
      }
      sum += e.weight * delta / len;
    }
    if (!collapsed && sum.norm() > options.position_tolerance) return false;
  }
  return true;
}

struct Evaluation {
  double cost = std::numeric_limits<double>::infinity();
};

template <typename Fn>
void for_each_index(std::size_t count, bool parallel, Fn&& fn) {
  unsigned workers = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void Instance::validate() const {
  if (sink.size() < 2) throw std::invalid_argument("Instance: ambient dimension must be >= 2");
  if (sources.cols() < 1) throw std::invalid_argument("Instance: need at least one source");
  if (sources.rows() != sink.size()) {
    throw std::invalid_argument("Instance: sources and sink have different dimensions");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("Instance: alpha outside [0,1]");
  if (sources.cols() > FlowTopology::kMaxSources) {
    throw std::invalid_argument("Instance: too many sources");
  }
  if (!sources.allFinite() || !sink.allFinite()) {
    throw std::invalid_argument("Instance: non-finite coordinate");
  }
  const Eigen::Index k = sources.cols();
  for (Eigen::Index i = 0; i < k; ++i) {
    if ((sources.col(i) - sink).norm() == 0.0) {
      throw std::invalid_argument("Instance: source coincides with the sink");
    }
    for (Eigen::Index j = i + 1; j < k; ++j) {
      if ((sources.col(i) - sources.col(j)).norm() == 0.0) {
        throw std::invalid_argument("Instance: duplicate source");
      }
    }
  }
}

BoundaryMeasure target_boundary(const Instance& instance) {
  const Eigen::Index k = instance.sources.cols();
  BoundaryMeasure out;
  for (Eigen::Index i = 0; i < k; ++i) {
    out.atoms.push_back({instance.sources.col(i), -Multiplicity::Unit(k, i)});
  }
  out.atoms.push_back({instance.sink, Multiplicity::Ones(k)});
  return out;
}

double star_cost(const Instance& instance) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < instance.sources.cols(); ++i) {
    total += (instance.sources.col(i) - instance.sink).norm();
  }
  return total;
}

PolyhedralCurrent build_flow_current(const FlowTopology& topology, const Instance& instance,
                                     const Eigen::MatrixXd& branch_points,
                                     double collapse_tolerance) {
  const int k = topology.source_count();
  const Eigen::Index d = instance.dim();
  std::vector<Eigen::VectorXd> nodes;
  for (int s = 0; s < k; ++s) nodes.push_back(instance.sources.col(s));
  nodes.push_back(instance.sink);
  std::vector<int> rep(topology.branch_count(), -1);
  for (int j = 0; j < topology.branch_count(); ++j) {
    const Eigen::VectorXd p = branch_points.col(j);
    for (int t = 0; t < static_cast<int>(nodes.size()); ++t) {
      if ((nodes[t] - p).norm() <= collapse_tolerance) {
        rep[j] = t;
        break;
      }
    }
    if (rep[j] < 0) {
      rep[j] = static_cast<int>(nodes.size());
      nodes.push_back(p);
    }
  }

  auto id = [&](int node) {
    if (node == FlowTopology::kSink) return k;
    if (node < k) return node;
    return rep[node - k];
  };

  Eigen::MatrixXd points(d, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = nodes[i];

  std::vector<Segment> segments;
  for (int v = 0; v < topology.node_count(); ++v) {
    const int a = id(v);
    const int b = id(topology.parent(v));
    if (a == b) continue;
    Multiplicity theta = Multiplicity::Zero(k);
    for (int s = 0; s < k; ++s) {
      if (topology.label(v) & (std::uint32_t{1} << s)) theta[s] = 1;
    }
    segments.push_back({a, b, theta});
  }
  return PolyhedralCurrent(points, k, std::move(segments));
}

PositionResult optimize_positions(const FlowTopology& topology, const Instance& instance,
                                  const SolveOptions& options) {
  if (topology.source_count() != instance.source_count()) {
    throw std::invalid_argument("optimize_positions: topology and instance disagree on sources");
  }
  const TreeObjective obj(topology, instance);
  const int m = obj.branch_count();
  Eigen::MatrixXd x = initial_positions(topology, instance);
  int iterations = 0;

  if (m > 0) {
    const double scale = instance_scale(instance);
    const double eps_final = kFinalSmoothing * scale;
    const double gtol = 1e-13 * obj.total_weight();
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    for (double eps = 1e-2 * scale;; eps = std::max(eps * 0.1, eps_final)) {
      for (int it = 0; it < options.max_iterations; ++it) {
        ++iterations;
        const double f = obj.value(x, eps);
        obj.gradient_hessian(x, eps, g, h);
        if (g.norm() <= gtol) break;

        bool moved = false;
        const Eigen::VectorXd p = h.ldlt().solve(-g);
        const double slope = g.dot(p);
        if (p.allFinite() && slope < 0.0) {
          double t = 1.0;
          for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            Eigen::MatrixXd trial = x + t * p.reshaped(obj.dim(), m);
            const double ft = obj.value(trial, eps);
            if (ft <= f + 1e-4 * t * slope) {
              x = std::move(trial);
              moved = true;
              break;
            }
          }
        }
        if (!moved) {
          Eigen::MatrixXd trial = obj.weiszfeld_step(x, eps);
          if (trial.allFinite() && obj.value(trial, eps) < f) {
            x = std::move(trial);
            moved = true;
          }
        }
        if (!moved) break;
      }
      if (eps <= eps_final) break;
    }
  }

  PositionResult out{build_flow_current(topology, instance, x, options.collapse_tolerance), 0.0,
                     obj.unsmoothed(x), x, iterations, m == 0 || first_order_ok(obj, x, options)};
  out.cost = mass(out.current, instance.norm());
  return out;
}

Solution solve(const Instance& instance, const SolveOptions& options) {
  instance.validate();
  const int k = instance.source_count();

  std::vector<FlowTopology> topologies;
  if (options.exact) {
    topologies = enumerate_topologies(k);
  } else {
    std::mt19937_64 rng(options.seed);
    std::set<std::string> seen;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      FlowTopology t = random_topology(k, rng);
      if (seen.insert(t.key()).second) topologies.push_back(std::move(t));
    }
  }

  std::vector<Evaluation> evals(topologies.size());
  for_each_index(topologies.size(), options.parallel, [&](std::size_t i) {
    evals[i].cost = optimize_positions(topologies[i], instance, options).cost;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < evals.size(); ++i) {
    if (evals[i].cost < evals[best].cost) best = i;
  }
  const double cutoff = evals[best].cost * (1.0 + kTieTolerance) + 1e-15;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (evals[i].cost <= cutoff) {
      best = i;
      break;
    }
  }

  PositionResult r = optimize_positions(topologies[best], instance, options);
  return Solution{std::move(r.current), r.cost,
                  topologies[best],     std::move(r.branch_points),
                  r.iterations,         r.converged,
                  options.exact,        topologies.size()};
}

}  // namespace branchcal
