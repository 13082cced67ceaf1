#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "branchcal/alpha_norm.hpp"
#include "branchcal/currents.hpp"
#include "branchcal/grid_field.hpp"

namespace branchcal {

/// { x : dist(x, AB) < min(beta, gamma * dist(x, {A, B})) }.
struct PencilRegion {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  double beta = 0.25;
  double gamma = 0.5;

  double length() const { return (b - a).norm(); }
  /// Throws unless beta, gamma > 0, A != B and the dimensions agree.
  void validate() const;
};

bool pencil_contains(const PencilRegion& region, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Cross-section radius min(beta, gamma * min(t, L - t)) at abscissa t.
double pencil_radius(const PencilRegion& region, double t);

/// Dipole value at x: the north pole e_d outside the pencil; inside, on the
/// cross-section disk of radius rho(t), a degree-one disk-to-sphere map whose
/// polar angle from the north pole is
///   Theta(q) = 2 atan(scale / q) - 2 q atan(scale),   q = |y| / rho(t),
/// i.e. inverse stereographic projection of y / (scale rho) corrected to
/// reach the north pole on the rim.  Oriented so that the Jacobian charge is
/// positive at A.
Eigen::VectorXd dipole_value(const PencilRegion& region, double scale,
                             const Eigen::Ref<const Eigen::VectorXd>& x);

/// Samples the dipole on a grid of spacing h covering the pencil.  Throws
/// when scale is outside (0, 1] or fewer than 8 cells span beta.
GridField build_dipole(const PencilRegion& region, double scale, double h);

/// Surface area of the unit sphere in R^d, 2 pi^{d/2} / Gamma(d/2).
double surface_constant(int d);

/// Fields u_1..u_{n-1} on a common grid, plus optional owner labels for
/// piecewise differencing (see differential()).
struct MapTuple {
  std::vector<GridField> fields;
  OwnerLabels owners;

  Eigen::Index size() const { return static_cast<Eigen::Index>(fields.size()); }
  /// Throws unless the tuple is nonempty and all fields share one grid.
  void validate() const;
};

/// Quadrature of psi(|Du_1|^{d-1}, ..., |Du_{n-1}|^{d-1}).
double energy_H(const MapTuple& tuple, const AlphaNorm& norm);

/// c_d * min over partitions into blocks of equal ju rows of
/// sum_I psi(e_I) max_{i in I} |Du_i|^{d-1}.
double energy_density_e(const MapTuple& tuple, Eigen::Index node, const AlphaNorm& norm,
                        double row_tol = 1e-9);

double energy_E(const MapTuple& tuple, const AlphaNorm& norm, double row_tol = 1e-9);

struct TestFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// 1 on the ball of radius r/2 about the centre, 0 outside radius r, with a
/// quintic smoothstep in between.
TestFunction radial_bump(const Eigen::VectorXd& centre, double radius);

/// -(1/d) * sum over nodes of grad(phi) . ju * cell volume.
double jacobian_pairing(const GridField& u, const TestFunction& phi, const OwnerLabels& owners = {});

/// Integrated bounds of the mass norm of the (n-1) x d matrix ju(x).
MassBounds mass_of_prejacobian(const MapTuple& tuple, const AlphaNorm& norm,
                               double row_tol = 1e-9);

struct ScheduleEntry {
  double scale = 0.2;
  double h = 1.0 / 64.0;
};

struct EnergyRow {
  double scale = 0.0;
  double h = 0.0;
  /// c_d / alpha_{d-1} * integral of |Du|^{d-1}.
  double normalized = 0.0;
  double gap = 0.0;  // normalized - |AB|
  double seconds = 0.0;
};

struct DipoleReport {
  std::vector<EnergyRow> rows;
  double length = 0.0;
  double best = 0.0;  // smallest normalized energy
  bool bound_met = false;
};

/// Builds the dipole for every schedule entry and checks
/// (1 - lower_slack)|AB| <= best <= (1 + upper_slack)|AB|.  d = 3 only.
DipoleReport dipole_energy_check(const PencilRegion& region, const std::vector<ScheduleEntry>& schedule,
                                 double lower_slack = 0.02, double upper_slack = 0.15);

struct NetworkTupleOptions {
  double beta = 0.25;
  double gamma = 0.5;
  double scale = 0.2;
  double h = 1.0 / 32.0;
};

/// Tuple realising a network: u_i is the concatenation of the dipoles on the
/// segments where theta_i != 0, each oriented by the sign of theta_i.  Fields
/// sharing a segment share its dipole exactly.  Nodes are owned by the pencil
/// containing them (else by the nearest segment).  Throws when two pencils
/// meet on a grid node, when a multiplicity entry exceeds 1 in absolute value
/// or a segment mixes signs.
MapTuple network_tuple(const PolyhedralCurrent& current, const NetworkTupleOptions& options = {});

}  // namespace branchcal
