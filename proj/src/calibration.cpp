#include "branchcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace branchcal {

namespace {

void check_dims(const ConstantForm& omega, Eigen::Index coeff_dim, Eigen::Index dim,
                const char* what) {
  if (omega.coeff_dim() != coeff_dim || omega.dim() != dim) {
    std::ostringstream msg;
    msg << what << ": form is " << omega.coeff_dim() << "x" << omega.dim() << ", expected "
        << coeff_dim << "x" << dim;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

ConstantForm::ConstantForm(CovectorMatrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1 || rows_.cols() < 1) {
    throw std::invalid_argument("ConstantForm: empty matrix");
  }
  if (!rows_.allFinite()) throw std::invalid_argument("ConstantForm: non-finite entry");
}

MultiplicityFamily::MultiplicityFamily(std::vector<Multiplicity> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("MultiplicityFamily: empty family");
  for (const auto& h : members_) {
    if (h.size() != members_.front().size()) {
      throw std::invalid_argument("MultiplicityFamily: inconsistent dimensions");
    }
    if (h.isZero()) throw std::invalid_argument("MultiplicityFamily: zero multiplicity");
  }
}

bool MultiplicityFamily::contains(const Multiplicity& h) const {
  return std::any_of(members_.begin(), members_.end(), [&](const Multiplicity& m) {
    return m.size() == h.size() && (m == h || m == Multiplicity(-h));
  });
}

std::string to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::kCertifiedGlobal:
      return "certified-global";
    case CertificateStatus::kCertifiedInFamily:
      return "certified-in-family";
    case CertificateStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

bool Certificate::condition_i_pass() const {
  return std::all_of(condition_i.begin(), condition_i.end(),
                     [](const SegmentCheck& c) { return c.pass; });
}

bool Certificate::condition_iii_pass() const {
  return std::all_of(condition_iii.begin(), condition_iii.end(),
                     [](const FamilyCheck& c) { return c.pass; });
}

std::vector<SegmentCheck> check_condition_i(const ConstantForm& omega,
                                            const PolyhedralCurrent& current,
                                            const AlphaNorm& norm, double tol) {
  check_dims(omega, current.coeff_dim(), current.dim(), "check_condition_i");
  std::vector<SegmentCheck> out;
  out.reserve(current.segments().size());
  for (std::size_t k = 0; k < current.segments().size(); ++k) {
    const Segment& s = current.segments()[k];
    SegmentCheck c;
    c.segment = k;
    c.pairing = omega.act(current.tangent(s), s.theta);
    c.psi = norm(s.theta);
    c.pass = std::abs(c.pairing - c.psi) <= tol * std::max(1.0, c.psi);
    out.push_back(c);
  }
  return out;
}

std::vector<FamilyCheck> check_condition_iii(const ConstantForm& omega,
                                             const MultiplicityFamily& family,
                                             const AlphaNorm& norm, double tol) {
  if (family.members().front().size() != omega.coeff_dim()) {
    throw std::invalid_argument("check_condition_iii: family dimension does not match the form");
  }
  std::vector<FamilyCheck> out;
  for (const auto& h : family.members()) {
    FamilyCheck c;
    c.h = h;
    c.sup_pairing = (omega.matrix().transpose() * h.cast<double>()).norm();
    c.psi = norm(h);
    c.pass = c.sup_pairing <= c.psi + tol * std::max(1.0, c.psi);
    out.push_back(std::move(c));
  }
  return out;
}

double pairing(const ConstantForm& omega, const PolyhedralCurrent& current) {
  check_dims(omega, current.coeff_dim(), current.dim(), "pairing");
  double total = 0.0;
  for (const auto& s : current.segments()) {
    total += current.length(s) * omega.act(current.tangent(s), s.theta);
  }
  return total;
}

double boundary_pairing(const ConstantForm& omega, const BoundaryMeasure& measure) {
  double total = 0.0;
  for (const auto& atom : measure.atoms) {
    total += atom.weight.cast<double>().dot(omega.potential(atom.point));
  }
  return total;
}

Certificate certify(const ConstantForm& omega, const PolyhedralCurrent& current,
                    const AlphaNorm& norm, const MultiplicityFamily& family, double tol) {
  check_dims(omega, current.coeff_dim(), current.dim(), "certify");
  const BoundaryMeasure bd = boundary(current);
  if (bd.empty()) throw std::invalid_argument("certify: current has empty boundary");

  Certificate cert{omega, family.members(), {}, {}, 0.0, 0.0, {}, false, false,
                   CertificateStatus::kFailed, {}};
  cert.condition_i = check_condition_i(omega, current, norm, tol);
  cert.condition_iii = check_condition_iii(omega, family, norm, tol);
  cert.mass = mass(current, norm);
  cert.lower_bound = boundary_pairing(omega, bd);
  cert.comass = comass(omega.matrix(), norm);
  cert.global_argument = cert.comass.exact && cert.comass.value <= 1.0 + tol;
  cert.theta_in_family = std::all_of(current.segments().begin(), current.segments().end(),
                                     [&](const Segment& s) { return family.contains(s.theta); });

  for (const auto& c : cert.condition_i) {
    if (!c.pass) {
      std::ostringstream msg;
      const Segment& s = current.segments()[c.segment];
      msg << "condition (i) fails on segment " << c.segment << " (nodes " << s.tail << "->"
          << s.head << "): pairing " << c.pairing << " != psi " << c.psi;
      cert.notes.push_back(msg.str());
    }
  }
  for (const auto& c : cert.condition_iii) {
    if (!c.pass) {
      std::ostringstream msg;
      msg << "condition (iii) fails for h = (" << c.h.transpose() << "): " << c.sup_pairing
          << " > " << c.psi;
      cert.notes.push_back(msg.str());
    }
  }

  const bool tight = std::abs(cert.mass - cert.lower_bound) <= tol * std::max(1.0, cert.mass);
  if (cert.condition_i_pass() && tight) {
    if (cert.global_argument) {
      cert.status = CertificateStatus::kCertifiedGlobal;
    } else if (cert.condition_iii_pass() && cert.theta_in_family) {
      cert.status = CertificateStatus::kCertifiedInFamily;
    }
  }
  if (cert.status == CertificateStatus::kFailed && cert.condition_i_pass() &&
      cert.condition_iii_pass() && !cert.theta_in_family && !cert.global_argument) {
    cert.notes.push_back("some multiplicity of the current lies outside the checked family");
  }
  return cert;
}

}  // namespace branchcal
