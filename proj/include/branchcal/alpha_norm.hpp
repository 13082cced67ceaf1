#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace branchcal {

/// (n-1) x d matrix whose row i is the classical covector w_i of a
/// vector-valued covector w = sum_i w_i e*_i.
using CovectorMatrix = Eigen::MatrixXd;

/// The norm on the coefficient space R^{n-1}
///
///   psi_alpha(h) = (sum_j |h_j|^{1/alpha})^alpha   for alpha in (0, 1],
///   psi_0(h)     = max_j |h_j|,
///
/// i.e. the l^{1/alpha} norm, together with its dual l^{1/(1-alpha)}.
/// On indicator vectors psi_alpha(e_I) = |I|^alpha, which is the Gilbert
/// cost of moving |I| unit masses together.
class AlphaNorm {
 public:
  AlphaNorm(double alpha, Eigen::Index coeff_dim) : alpha_(alpha), coeff_dim_(coeff_dim) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("AlphaNorm: alpha must lie in [0, 1], got " +
                                  std::to_string(alpha));
    }
    if (coeff_dim < 1) {
      throw std::invalid_argument("AlphaNorm: coefficient dimension must be positive");
    }
  }

  double alpha() const { return alpha_; }
  Eigen::Index coeff_dim() const { return coeff_dim_; }

  /// psi(e_I) for an index set of the given size.
  double of_index_set(Eigen::Index size) const {
    if (size <= 0) return 0.0;
    return alpha_ == 0.0 ? 1.0 : std::pow(static_cast<double>(size), alpha_);
  }

  /// True when comass() has an exact closed form (alpha in {0, 1/2, 1}).
  bool has_closed_form_comass() const { return alpha_ == 0.0 || alpha_ == 0.5 || alpha_ == 1.0; }

  template <typename Derived>
  double operator()(const Eigen::MatrixBase<Derived>& h) const;

  template <typename Derived>
  double dual(const Eigen::MatrixBase<Derived>& w) const;

 private:
  void check_dim(Eigen::Index n, const char* what) const {
    if (n != coeff_dim_) {
      throw std::invalid_argument(std::string(what) + ": expected a vector of dimension " +
                                  std::to_string(coeff_dim_) + ", got " + std::to_string(n));
    }
  }

  double alpha_;
  Eigen::Index coeff_dim_;
};

namespace detail {

// l^p norm with p in [1, inf), scaled by the max entry so that large
// exponents neither overflow nor lose the dominant term.
template <typename Derived>
double lp_norm(const Eigen::MatrixBase<Derived>& a, double p) {
  const double top = a.maxCoeff();
  if (top == 0.0) return 0.0;
  if (p == 1.0) return a.sum();
  if (p == 2.0) return top * (a / top).norm();
  return top * std::pow((a / top).array().pow(p).sum(), 1.0 / p);
}

}  // namespace detail

template <typename Derived>
double AlphaNorm::operator()(const Eigen::MatrixBase<Derived>& h) const {
  check_dim(h.size(), "psi");
  const Eigen::VectorXd a = h.template cast<double>().cwiseAbs().reshaped();
  if (alpha_ == 0.0) return a.size() ? a.maxCoeff() : 0.0;
  return detail::lp_norm(a, 1.0 / alpha_);
}

template <typename Derived>
double AlphaNorm::dual(const Eigen::MatrixBase<Derived>& w) const {
  check_dim(w.size(), "psi_dual");
  const Eigen::VectorXd a = w.template cast<double>().cwiseAbs().reshaped();
  if (alpha_ == 1.0) return a.size() ? a.maxCoeff() : 0.0;
  return detail::lp_norm(a, 1.0 / (1.0 - alpha_));
}

/// psi_alpha(h); h may be an integer multiplicity or a real vector.
template <typename Derived>
double psi(const Eigen::MatrixBase<Derived>& h, const AlphaNorm& norm) {
  return norm(h);
}

/// psi*(w) = sup { <w, h> : psi(h) <= 1 }.
template <typename Derived>
double psi_dual(const Eigen::MatrixBase<Derived>& w, const AlphaNorm& norm) {
  return norm.dual(w);
}

struct ComassResult {
  double value = 0.0;
  /// False when the value came from the sphere ascent heuristic; it is then
  /// a lower bound of the true comass.
  bool exact = false;
};

struct AscentOptions {
  int restarts = 32;
  int iterations = 500;
  std::uint64_t seed = 0;
};

/// Comass |w|_c = sup { psi*(W tau) : |tau|_2 <= 1 }.  Exact for
/// alpha in {0, 1/2, 1}; otherwise the best value of comass_ascent().
ComassResult comass(const CovectorMatrix& omega, const AlphaNorm& norm,
                    const AscentOptions& options = {});

/// Projected gradient ascent of psi*(W tau) over the unit sphere with random
/// restarts and step halving.  Always a lower bound of the comass; exposed
/// separately so the closed forms can be cross-checked.
double comass_ascent(const CovectorMatrix& omega, const AlphaNorm& norm,
                     const AscentOptions& options = {});

/// Guaranteed upper bound of the comass, cheap for any alpha.
double comass_upper_bound(const CovectorMatrix& omega, const AlphaNorm& norm);

struct MassBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Rows r_i, r_l count as equal when |r_i - r_l| <= tol * max(|r_i|, |r_l|, 1e-30).
bool rows_match(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double tol);

/// Two-sided bounds lo <= |v|_{m,psi} <= hi for an (n-1) x d vector-valued
/// 1-vector.  hi minimises sum_I psi(e_I) |r_I|_2 over partitions of the rows
/// into blocks of matching rows (plus the exact residual of each block);
/// lo is the best pairing <w, v> over candidate forms scaled to comass <= 1.
MassBounds mass_norm_bounds(const Eigen::MatrixXd& v, const AlphaNorm& norm, double tol = 1e-9);

}  // namespace branchcal
