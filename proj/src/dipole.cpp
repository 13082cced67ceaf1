#include "branchcal/dipole.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "branchcal/partition.hpp"

namespace branchcal {

namespace {

constexpr double kMinCellsAcrossBeta = 8.0;

Eigen::VectorXd north_pole(Eigen::Index d) { return Eigen::VectorXd::Unit(d, d - 1); }

// Dipole along one segment with a cached orthonormal frame (e, f_1..f_{d-1}).
class DipoleShape {
 public:
  DipoleShape(const PencilRegion& region, double scale) : region_(region), scale_(scale) {
    region.validate();
    if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("dipole: scale must lie in (0, 1]");
    const Eigen::Index d = region.a.size();
    length_ = region.length();
    axis_ = (region.b - region.a) / length_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(axis_);
    frame_ = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    frame_.col(0) = axis_;
    // Negatively oriented frame: this makes the charge at A positive.
    if (frame_.determinant() > 0.0) frame_.col(d - 1) *= -1.0;
    rim_ = 2.0 * std::atan(scale_);
  }

  bool supports(const Eigen::Ref<const Eigen::VectorXd>& x, double& t, Eigen::VectorXd& y,
                double& r, double& rho) const {
    const Eigen::VectorXd rel = x - region_.a;
    t = rel.dot(axis_);
    if (!(t > 0.0 && t < length_)) return false;
    y = rel - t * axis_;
    r = y.norm();
    rho = pencil_radius(region_, t);
    return r < rho;
  }

  Eigen::VectorXd value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::Index d = x.size();
    Eigen::VectorXd out = north_pole(d);
    double t = 0.0;
    double r = 0.0;
    double rho = 0.0;
    Eigen::VectorXd y;
    if (!supports(x, t, y, r, rho)) return out;
    const double q = r / rho;
    const double theta = (q == 0.0 ? std::numbers::pi : 2.0 * std::atan(scale_ / q)) - q * rim_;
    const double s = std::sin(theta);
    for (Eigen::Index j = 0; j + 1 < d; ++j) {
      out[j] = r == 0.0 ? 0.0 : s * frame_.col(j + 1).dot(y) / r;
    }
    out[d - 1] = std::cos(theta);
    return out;
  }

 private:
  PencilRegion region_;
  double scale_;
  double length_ = 0.0;
  Eigen::VectorXd axis_;
  Eigen::MatrixXd frame_;
  double rim_ = 0.0;
};

void check_resolution(double beta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("dipole: grid spacing must be positive");
  if (beta / h < kMinCellsAcrossBeta) {
    throw std::invalid_argument("dipole: grid under-resolves the pencil (need beta/h >= 8, got " +
                                std::to_string(beta / h) + ")");
  }
}

// |Du|_F^{d-1} and ju for every field at a node.
struct NodeData {
  Eigen::VectorXd g;
  Eigen::MatrixXd ju;
  bool any = false;
};

NodeData node_data(const MapTuple& tuple, Eigen::Index node, bool need_ju) {
  const Eigen::Index n = tuple.size();
  const Eigen::Index d = tuple.fields.front().dim();
  NodeData out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, d), false};
  for (Eigen::Index i = 0; i < n; ++i) {
    const GridField& u = tuple.fields[i];
    const Eigen::MatrixXd du = differential(u, node, tuple.owners);
    const double f = du.norm();
    if (f == 0.0) continue;
    out.any = true;
    out.g[i] = std::pow(f, static_cast<double>(d - 1));
    if (need_ju) out.ju.row(i) = pre_jacobian(du, u.value(node)).transpose();
  }
  return out;
}

double segment_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ab = b - a;
  const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (x - a - t * ab).norm();
}

}  // namespace

void PencilRegion::validate() const {
  if (a.size() < 2 || a.size() != b.size()) {
    throw std::invalid_argument("PencilRegion: endpoints must share a dimension >= 2");
  }
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("PencilRegion: beta, gamma must be positive");
  if (length() == 0.0) throw std::invalid_argument("PencilRegion: A and B coincide");
}

bool pencil_contains(const PencilRegion& region, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double to_segment = segment_distance(x, region.a, region.b);
  const double to_ends = std::min((x - region.a).norm(), (x - region.b).norm());
  return to_segment < std::min(region.beta, region.gamma * to_ends);
}

double pencil_radius(const PencilRegion& region, double t) {
  const double l = region.length();
  if (t <= 0.0 || t >= l) return 0.0;
  return std::min(region.beta, region.gamma * std::min(t, l - t));
}

Eigen::VectorXd dipole_value(const PencilRegion& region, double scale,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
  return DipoleShape(region, scale).value(x);
}

GridField build_dipole(const PencilRegion& region, double scale, double h) {
  const DipoleShape shape(region, scale);
  check_resolution(region.beta, h);
  const Eigen::Index d = region.a.size();
  const Eigen::VectorXd lo = region.a.cwiseMin(region.b).array() - region.beta;
  const Eigen::VectorXd hi = region.a.cwiseMax(region.b).array() + region.beta;
  GridField u = make_grid(lo, hi, h, 2, north_pole(d));
  for (Eigen::Index node = 0; node < u.node_count(); ++node) {
    u.samples().col(node) = shape.value(u.position(node));
  }
  u.normalize();
  return u;
}

double surface_constant(int d) {
  if (d < 2) throw std::invalid_argument("surface_constant: d must be >= 2");
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

void MapTuple::validate() const {
  if (fields.empty()) throw std::invalid_argument("MapTuple: no fields");
  for (const auto& f : fields) {
    if (!f.same_grid(fields.front())) throw std::invalid_argument("MapTuple: fields must share one grid");
  }
  if (!owners.empty() && static_cast<Eigen::Index>(owners.size()) != fields.front().node_count()) {
    throw std::invalid_argument("MapTuple: owner labels do not match the grid");
  }
}

double energy_H(const MapTuple& tuple, const AlphaNorm& norm) {
  tuple.validate();
  const GridField& grid = tuple.fields.front();
  double total = 0.0;
  for (Eigen::Index node = 0; node < grid.node_count(); ++node) {
    const NodeData nd = node_data(tuple, node, false);
    if (nd.any) total += norm(nd.g);
  }
  return total * grid.cell_volume();
}

double energy_density_e(const MapTuple& tuple, Eigen::Index node, const AlphaNorm& norm,
                        double row_tol) {
  const NodeData nd = node_data(tuple, node, true);
  if (!nd.any) return 0.0;
  const int n = static_cast<int>(tuple.size());
  double best = std::numeric_limits<double>::infinity();
  for_each_compatible_partition(
      n, [&](int i, int l) { return rows_match(nd.ju.row(i), nd.ju.row(l), row_tol); },
      [&](const std::vector<std::vector<int>>& blocks) {
        double sum = 0.0;
        for (const auto& block : blocks) {
          double top = 0.0;
          for (int i : block) top = std::max(top, nd.g[i]);
          sum += norm.of_index_set(static_cast<Eigen::Index>(block.size())) * top;
        }
        best = std::min(best, sum);
      });
  return pointwise_constant(tuple.fields.front().dim()) * best;
}

double energy_E(const MapTuple& tuple, const AlphaNorm& norm, double row_tol) {
  tuple.validate();
  const GridField& grid = tuple.fields.front();
  double total = 0.0;
  for (Eigen::Index node = 0; node < grid.node_count(); ++node) {
    total += energy_density_e(tuple, node, norm, row_tol);
  }
  return total * grid.cell_volume();
}

TestFunction radial_bump(const Eigen::VectorXd& centre, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radial_bump: radius must be positive");
  // s in [0, 1] runs from the outer radius (0) to the plateau (1).
  auto profile = [radius](double r, double& slope) {
    const double s = std::clamp(2.0 * (radius - r) / radius, 0.0, 1.0);
    const double ds = (s <= 0.0 || s >= 1.0) ? 0.0 : -2.0 / radius;
    slope = 30.0 * s * s * (1.0 - s) * (1.0 - s) * ds;
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  };
  TestFunction phi;
  phi.value = [centre, profile](const Eigen::VectorXd& x) {
    double slope = 0.0;
    return profile((x - centre).norm(), slope);
  };
  phi.gradient = [centre, profile](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::VectorXd rel = x - centre;
    const double r = rel.norm();
    double slope = 0.0;
    profile(r, slope);
    if (r == 0.0 || slope == 0.0) return Eigen::VectorXd::Zero(x.size());
    return slope * rel / r;
  };
  return phi;
}

double jacobian_pairing(const GridField& u, const TestFunction& phi, const OwnerLabels& owners) {
  const Eigen::Index d = u.dim();
  double total = 0.0;
  for (Eigen::Index node = 0; node < u.node_count(); ++node) {
    const Eigen::VectorXd grad = phi.gradient(u.position(node));
    if (grad.isZero(0.0)) continue;
    const Eigen::MatrixXd du = differential(u, node, owners);
    total += grad.dot(pre_jacobian(du, u.value(node)));
  }
  return -total * u.cell_volume() / static_cast<double>(d);
}

MassBounds mass_of_prejacobian(const MapTuple& tuple, const AlphaNorm& norm, double row_tol) {
  tuple.validate();
  const GridField& grid = tuple.fields.front();
  MassBounds total;
  for (Eigen::Index node = 0; node < grid.node_count(); ++node) {
    const NodeData nd = node_data(tuple, node, true);
    if (!nd.any || nd.ju.isZero(0.0)) continue;
    const MassBounds b = mass_norm_bounds(nd.ju, norm, row_tol);
    total.lo += b.lo;
    total.hi += b.hi;
  }
  total.lo *= grid.cell_volume();
  total.hi *= grid.cell_volume();
  return total;
}

DipoleReport dipole_energy_check(const PencilRegion& region, const std::vector<ScheduleEntry>& schedule,
                                 double lower_slack, double upper_slack) {
  region.validate();
  if (schedule.empty()) throw std::invalid_argument("dipole_energy_check: empty schedule");
  const Eigen::Index d = region.a.size();
  if (d != 3) throw std::invalid_argument("dipole_energy_check: only d = 3 is supported");
  const double factor = pointwise_constant(d) / surface_constant(static_cast<int>(d));

  DipoleReport report;
  report.length = region.length();
  report.best = std::numeric_limits<double>::infinity();
  for (const auto& entry : schedule) {
    const auto start = std::chrono::steady_clock::now();
    MapTuple tuple{{build_dipole(region, entry.scale, entry.h)}, {}};
    const double energy = energy_H(tuple, AlphaNorm(1.0, 1));
    EnergyRow row;
    row.scale = entry.scale;
    row.h = entry.h;
    row.normalized = factor * energy;
    row.gap = row.normalized - report.length;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.best = std::min(report.best, row.normalized);
    report.rows.push_back(row);
  }
  report.bound_met = report.best >= (1.0 - lower_slack) * report.length &&
                     report.best <= (1.0 + upper_slack) * report.length;
  return report;
}

MapTuple network_tuple(const PolyhedralCurrent& current, const NetworkTupleOptions& options) {
  if (current.empty()) throw std::invalid_argument("network_tuple: empty network");
  check_resolution(options.beta, options.h);
  const Eigen::Index d = current.dim();
  const Eigen::Index n = current.coeff_dim();
  const auto& segments = current.segments();

  std::vector<PencilRegion> pencils;
  std::vector<int> sign;
  for (const auto& s : segments) {
    const int lo = s.theta.minCoeff();
    const int hi = s.theta.maxCoeff();
    if (lo < -1 || hi > 1) throw std::invalid_argument("network_tuple: multiplicity entries must be in {-1, 0, 1}");
    if (lo < 0 && hi > 0) throw std::invalid_argument("network_tuple: segment mixes signs");
    sign.push_back(hi > 0 ? 1 : -1);
    PencilRegion p{current.point(s.tail), current.point(s.head), options.beta, options.gamma};
    if (sign.back() < 0) std::swap(p.a, p.b);
    pencils.push_back(p);
  }
  std::vector<DipoleShape> shapes;
  for (const auto& p : pencils) shapes.emplace_back(p, options.scale);

  const Eigen::MatrixXd& pts = current.points();
  const Eigen::VectorXd lo = pts.rowwise().minCoeff().array() - options.beta;
  const Eigen::VectorXd hi = pts.rowwise().maxCoeff().array() + options.beta;
  GridField grid = make_grid(lo, hi, options.h, 2, north_pole(d));

  MapTuple tuple;
  tuple.owners.assign(grid.node_count(), -1);
  Eigen::MatrixXd values = grid.samples();
  for (Eigen::Index node = 0; node < grid.node_count(); ++node) {
    const Eigen::VectorXd x = grid.position(node);
    int owner = -1;
    double nearest = std::numeric_limits<double>::infinity();
    int closest = 0;
    for (std::size_t s = 0; s < pencils.size(); ++s) {
      if (pencil_contains(pencils[s], x)) {
        if (owner >= 0) {
          throw std::invalid_argument("network_tuple: pencils overlap; shrink beta or gamma");
        }
        owner = static_cast<int>(s);
      }
      const double dist = segment_distance(x, pencils[s].a, pencils[s].b);
      if (dist < nearest) {
        nearest = dist;
        closest = static_cast<int>(s);
      }
    }
    tuple.owners[node] = owner >= 0 ? owner : closest;
    if (owner >= 0) values.col(node) = shapes[owner].value(x);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    GridField u = grid;
    for (Eigen::Index node = 0; node < grid.node_count(); ++node) {
      if (segments[tuple.owners[node]].theta[i] != 0) u.samples().col(node) = values.col(node);
    }
    u.normalize();
    tuple.fields.push_back(std::move(u));
  }
  return tuple;
}

}  // namespace branchcal
