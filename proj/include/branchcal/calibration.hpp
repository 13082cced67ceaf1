#pragma once

#include <string>
#include <vector>

#include "branchcal/alpha_norm.hpp"
#include "branchcal/currents.hpp"

namespace branchcal {

/// Constant (R^{n-1})*-valued 1-form omega = sum_i w_i e*_i.  Constant forms
/// are closed, so only the pointwise calibration conditions need checking.
class ConstantForm {
 public:
  explicit ConstantForm(CovectorMatrix rows);

  const CovectorMatrix& matrix() const { return rows_; }
  Eigen::Index coeff_dim() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }

  /// <omega; t, h> = sum_i h_i <w_i, t>.
  template <typename TDerived, typename HDerived>
  double act(const Eigen::MatrixBase<TDerived>& t, const Eigen::MatrixBase<HDerived>& h) const {
    return h.template cast<double>().dot(rows_ * t.template cast<double>());
  }

  /// Linear potential Phi(x) = W x, so that d Phi_i = w_i.
  Eigen::VectorXd potential(const Eigen::Ref<const Eigen::VectorXd>& x) const { return rows_ * x; }

 private:
  CovectorMatrix rows_;
};

/// Finite, nonempty set of nonzero multiplicities.
class MultiplicityFamily {
 public:
  explicit MultiplicityFamily(std::vector<Multiplicity> members);

  const std::vector<Multiplicity>& members() const { return members_; }
  /// Membership up to sign: condition (iii) is invariant under h -> -h
  /// because t ranges over the whole unit sphere.
  bool contains(const Multiplicity& h) const;

 private:
  std::vector<Multiplicity> members_;
};

struct SegmentCheck {
  std::size_t segment = 0;
  double pairing = 0.0;  // <omega; tau, theta>
  double psi = 0.0;
  bool pass = false;
};

struct FamilyCheck {
  Multiplicity h;
  double sup_pairing = 0.0;  // |sum_i h_i w_i|_2
  double psi = 0.0;
  bool pass = false;
};

enum class CertificateStatus { kCertifiedGlobal, kCertifiedInFamily, kFailed };

std::string to_string(CertificateStatus status);

struct Certificate {
  ConstantForm form;
  std::vector<Multiplicity> family;
  std::vector<SegmentCheck> condition_i;
  std::vector<FamilyCheck> condition_iii;
  double mass = 0.0;
  double lower_bound = 0.0;
  /// Comass of the form and whether it is exact.
  ComassResult comass;
  bool global_argument = false;
  bool theta_in_family = false;
  CertificateStatus status = CertificateStatus::kFailed;
  /// Human readable reasons for a failed status.
  std::vector<std::string> notes;

  bool condition_i_pass() const;
  bool condition_iii_pass() const;
};

/// Condition (i) per segment: sum_i theta_i <w_i, tau> == psi(theta) within tol.
std::vector<SegmentCheck> check_condition_i(const ConstantForm& omega,
                                            const PolyhedralCurrent& current,
                                            const AlphaNorm& norm, double tol = 1e-9);

/// Condition (iii) per family member: sup_{|t|=1} <omega; t, h> = |W^T h|_2 <= psi(h).
std::vector<FamilyCheck> check_condition_iii(const ConstantForm& omega,
                                             const MultiplicityFamily& family,
                                             const AlphaNorm& norm, double tol = 1e-9);

/// T(omega) = sum over segments of length * <omega; tau, theta>.
double pairing(const ConstantForm& omega, const PolyhedralCurrent& current);

/// sum over atoms of <weight, Phi(point)>; equals T(omega) when the measure is
/// the boundary of T.
double boundary_pairing(const ConstantForm& omega, const BoundaryMeasure& measure);

/// Runs conditions (i) and (iii) and derives the optimality certificate.
///
/// certified-global: (i) holds on T and comass(omega) <= 1 is known exactly,
/// which gives (iii) for every real, hence every integer, multiplicity.
/// certified-in-family: (i) holds, (iii) holds on the family and every theta
/// of T belongs to the family.  Either status implies mass == lower_bound.
Certificate certify(const ConstantForm& omega, const PolyhedralCurrent& current,
                    const AlphaNorm& norm, const MultiplicityFamily& family, double tol = 1e-9);

}  // namespace branchcal
