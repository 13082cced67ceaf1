#include "branchcal/grid_field.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace branchcal {

namespace {

constexpr std::array<char, 8> kMagic{'G', 'S', 'T', 'F', 'L', 'D', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "field dumps assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("read_field: truncated input");
  return value;
}

}  // namespace

GridField::GridField(Eigen::VectorXd lower, Eigen::VectorXd spacing,
                     std::vector<Eigen::Index> counts, Eigen::VectorXd constant)
    : lower_(std::move(lower)),
      spacing_(std::move(spacing)),
      counts_(std::move(counts)),
      constant_(std::move(constant)) {
  const Eigen::Index d = lower_.size();
  if (d < 2) throw std::invalid_argument("GridField: dimension must be >= 2");
  if (spacing_.size() != d || static_cast<Eigen::Index>(counts_.size()) != d ||
      constant_.size() != d) {
    throw std::invalid_argument("GridField: inconsistent dimensions");
  }
  if ((spacing_.array() <= 0.0).any()) throw std::invalid_argument("GridField: spacing must be positive");
  if (std::abs(constant_.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("GridField: constant value must be a unit vector");
  }
  Eigen::Index total = 1;
  for (Eigen::Index a = 0; a < d; ++a) {
    if (counts_[a] < 1) throw std::invalid_argument("GridField: empty axis");
    strides_.push_back(total);
    total *= counts_[a];
  }
  samples_ = constant_.replicate(1, total);
}

std::vector<Eigen::Index> GridField::multi_index(Eigen::Index node) const {
  std::vector<Eigen::Index> idx(dim());
  for (Eigen::Index a = 0; a < dim(); ++a) {
    idx[a] = node % counts_[a];
    node /= counts_[a];
  }
  return idx;
}

Eigen::VectorXd GridField::position(Eigen::Index node) const {
  Eigen::VectorXd x(dim());
  for (Eigen::Index a = 0; a < dim(); ++a) {
    x[a] = lower_[a] + static_cast<double>(node % counts_[a]) * spacing_[a];
    node /= counts_[a];
  }
  return x;
}

Eigen::Index GridField::neighbor(Eigen::Index node, Eigen::Index axis, int step) const {
  const Eigen::Index i = (node / strides_[axis]) % counts_[axis] + step;
  if (i < 0 || i >= counts_[axis]) return -1;
  return node + step * strides_[axis];
}

bool GridField::same_grid(const GridField& other) const {
  return counts_ == other.counts_ && lower_ == other.lower_ && spacing_ == other.spacing_;
}

void GridField::normalize() { samples_.colwise().normalize(); }

double GridField::max_unit_defect() const {
  if (samples_.cols() == 0) return 0.0;
  return (samples_.colwise().norm().array() - 1.0).abs().maxCoeff();
}

bool GridField::boundary_is_constant(double tol) const {
  for (Eigen::Index node = 0; node < node_count(); ++node) {
    bool skin = false;
    for (Eigen::Index a = 0; a < dim() && !skin; ++a) {
      skin = neighbor(node, a, -1) < 0 || neighbor(node, a, 1) < 0;
    }
    if (skin && (samples_.col(node) - constant_).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

GridField make_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double h, int margin,
                    const Eigen::VectorXd& constant) {
  if (!(h > 0.0)) throw std::invalid_argument("make_grid: spacing must be positive");
  const Eigen::Index d = lo.size();
  std::vector<Eigen::Index> counts(d);
  Eigen::VectorXd lower(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    const auto cells = static_cast<Eigen::Index>(std::ceil((hi[a] - lo[a]) / h - 1e-9));
    counts[a] = cells + 1 + 2 * margin;
    lower[a] = 0.5 * (lo[a] + hi[a]) - 0.5 * h * static_cast<double>(counts[a] - 1);
  }
  return GridField(lower, Eigen::VectorXd::Constant(d, h), counts, constant);
}

Eigen::MatrixXd differential(const GridField& u, Eigen::Index node, const OwnerLabels& owners,
                             bool tangent) {
  const Eigen::Index d = u.dim();
  Eigen::MatrixXd du(d, d);
  auto sample = [&](Eigen::Index n) -> Eigen::VectorXd {
    if (n < 0) return u.constant();
    if (!owners.empty() && owners[n] != owners[node]) return u.constant();
    return u.value(n);
  };
  for (Eigen::Index a = 0; a < d; ++a) {
    du.col(a) = (sample(u.neighbor(node, a, 1)) - sample(u.neighbor(node, a, -1))) /
                (2.0 * u.spacing()[a]);
  }
  if (tangent) {
    const Eigen::VectorXd x = u.value(node);
    du -= x * (x.transpose() * du);
  }
  return du;
}

Eigen::MatrixXd cofactor(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("cofactor: square matrix required");
  if (n == 1) return Eigen::MatrixXd::Ones(1, 1);
  if (n == 3) {
    Eigen::MatrixXd c(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int i1 = (i + 1) % 3;
        const int i2 = (i + 2) % 3;
        const int j1 = (j + 1) % 3;
        const int j2 = (j + 2) % 3;
        c(i, j) = m(i1, j1) * m(i2, j2) - m(i1, j2) * m(i2, j1);
      }
    }
    return c;
  }
  Eigen::MatrixXd c(n, n);
  Eigen::MatrixXd minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index s = 0, ss = 0; s < n; ++s) {
          if (s == j) continue;
          minor(rr, ss++) = m(r, s);
        }
        ++rr;
      }
      c(i, j) = ((i + j) % 2 ? -1.0 : 1.0) * minor.determinant();
    }
  }
  return c;
}

Eigen::VectorXd pre_jacobian(const Eigen::MatrixXd& du,
                             const Eigen::Ref<const Eigen::VectorXd>& u) {
  return cofactor(du).transpose() * u;
}

double pointwise_constant(Eigen::Index d) {
  const double k = static_cast<double>(d - 1);
  return std::pow(k, -0.5 * k);
}

void write_field(std::ostream& out, const GridField& field) {
  out.write(kMagic.data(), kMagic.size());
  const Eigen::Index d = field.dim();
  put<std::int64_t>(out, d);
  for (Eigen::Index c : field.counts()) put<std::int64_t>(out, c);
  for (Eigen::Index a = 0; a < d; ++a) put<double>(out, field.lower()[a]);
  for (Eigen::Index a = 0; a < d; ++a) put<double>(out, field.spacing()[a]);
  for (Eigen::Index a = 0; a < d; ++a) put<double>(out, field.constant()[a]);
  out.write(reinterpret_cast<const char*>(field.samples().data()),
            static_cast<std::streamsize>(field.samples().size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_field: write failed");
}

GridField read_field(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("read_field: bad magic");
  const auto d = get<std::int64_t>(in);
  if (d < 2 || d > 16) throw std::runtime_error("read_field: unsupported dimension");
  std::vector<Eigen::Index> counts(d);
  for (auto& c : counts) c = get<std::int64_t>(in);
  Eigen::VectorXd lower(d);
  Eigen::VectorXd spacing(d);
  Eigen::VectorXd constant(d);
  for (Eigen::Index a = 0; a < d; ++a) lower[a] = get<double>(in);
  for (Eigen::Index a = 0; a < d; ++a) spacing[a] = get<double>(in);
  for (Eigen::Index a = 0; a < d; ++a) constant[a] = get<double>(in);
  GridField field(lower, spacing, counts, constant);
  in.read(reinterpret_cast<char*>(field.samples().data()),
          static_cast<std::streamsize>(field.samples().size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_field: truncated samples");
  return field;
}

}  // namespace branchcal
