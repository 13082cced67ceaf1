#include "branchcal/currents.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

namespace branchcal {
namespace {

using testing::Gen;
using testing::load_network;

Multiplicity e(Eigen::Index n, std::initializer_list<int> ones) {
  Multiplicity h = Multiplicity::Zero(n);
  for (int i : ones) h[i] = 1;
  return h;
}

PolyhedralCurrent triangle_loop() {
  Eigen::MatrixXd pts(2, 3);
  pts << 0, 1, 0, 0, 0, 1;
  return PolyhedralCurrent(pts, 1, {{0, 1, e(1, {0})}, {1, 2, e(1, {0})}, {2, 0, e(1, {0})}});
}

void expect_atom(const BoundaryMeasure& b, const Eigen::VectorXd& p, const Multiplicity& w) {
  const auto it = std::find_if(b.atoms.begin(), b.atoms.end(),
                               [&](const BoundaryAtom& a) { return (a.point - p).norm() < 1e-12; });
  EXPECT_NE(it, b.atoms.end()) << p.transpose();
  if (it != b.atoms.end()) EXPECT_EQ(it->weight, w);
}

TEST(Boundary, SingleSegment) {
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 2, 0, 2, 0, 1;
  const PolyhedralCurrent t(pts, 3, {{0, 1, e(3, {0})}});
  const BoundaryMeasure b = boundary(t);
  ASSERT_EQ(b.atoms.size(), 2u);
  expect_atom(b, pts.col(1), e(3, {0}));
  expect_atom(b, pts.col(0), -e(3, {0}));
}

TEST(Boundary, IrrigationExample) {
  const PolyhedralCurrent t = load_network("irrigation_r3.json").current;
  const BoundaryMeasure b = boundary(t);
  ASSERT_EQ(b.atoms.size(), 4u);
  expect_atom(b, Eigen::Vector3d(2, 2, 1), e(3, {0, 1, 2}));
  expect_atom(b, Eigen::Vector3d(-1, 0, 0), -e(3, {0}));
  expect_atom(b, Eigen::Vector3d(0, -1, 0), -e(3, {1}));
  expect_atom(b, Eigen::Vector3d(1, 1, -1), -e(3, {2}));
}

TEST(Boundary, LoopHasNone) { EXPECT_TRUE(boundary(triangle_loop()).empty()); }

TEST(Mass, Examples) {
  EXPECT_NEAR(mass(load_network("irrigation_r3.json").current, AlphaNorm(0.5, 3)), 8.0, 1e-12);
  EXPECT_NEAR(mass(load_network("tetrahedron.json").current, AlphaNorm(0.0, 3)),
              3.0 + std::sqrt(6.0) / 2.0, 1e-12);
  EXPECT_NEAR(mass(load_network("irrigation_r4.json").current, AlphaNorm(0.5, 4)), 13.0, 1e-12);
  EXPECT_EQ(mass(load_network("empty.json").current, AlphaNorm(0.5, 1)), 0.0);
}

TEST(Mass, SingleUnitMultiplicitiesGiveLength) {
  Gen gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd pts = gen.gaussian(3, 5);
    std::vector<Segment> segs;
    double length = 0.0;
    for (int s = 0; s < 4; ++s) {
      segs.push_back({s, s + 1, e(3, {gen.integer(0, 2)})});
      length += (pts.col(s + 1) - pts.col(s)).norm();
    }
    const PolyhedralCurrent t(pts, 3, segs);
    EXPECT_NEAR(mass(t, AlphaNorm(gen.uniform(), 3)), length, 1e-12);
  }
}

TEST(BoundaryMass, Examples) {
  const BoundaryMeasure b = boundary(load_network("irrigation_r3.json").current);
  EXPECT_NEAR(boundary_mass(b, AlphaNorm(0.5, 3)), std::sqrt(3.0) + 3.0, 1e-12);
  EXPECT_EQ(boundary_mass(BoundaryMeasure{}, AlphaNorm(0.5, 3)), 0.0);
  BoundaryMeasure two;
  two.atoms.push_back({Eigen::Vector2d(0, 0), Multiplicity::Constant(1, 2)});
  EXPECT_DOUBLE_EQ(boundary_mass(two, AlphaNorm(1.0, 1)), 2.0);
}

TEST(Component, PathsOfTheIrrigationExample) {
  const PolyhedralCurrent t = load_network("irrigation_r3.json").current;
  const PolyhedralCurrent t1 = component(t, 0);
  EXPECT_EQ(t1.coeff_dim(), 1);
  EXPECT_EQ(t1.segments().size(), 3u);
  EXPECT_NEAR(mass(t1, AlphaNorm(1.0, 1)), 1.0 + std::sqrt(2.0) + std::sqrt(3.0), 1e-12);
  const BoundaryMeasure b1 = boundary(t1);
  ASSERT_EQ(b1.atoms.size(), 2u);
  expect_atom(b1, Eigen::Vector3d(-1, 0, 0), Multiplicity::Constant(1, -1));
  expect_atom(b1, Eigen::Vector3d(2, 2, 1), Multiplicity::Constant(1, 1));

  const PolyhedralCurrent t3 = component(t, 2);
  EXPECT_EQ(t3.segments().size(), 2u);
  EXPECT_NEAR(mass(t3, AlphaNorm(1.0, 1)), 1.0 + std::sqrt(3.0), 1e-12);

  Eigen::MatrixXd pts(2, 2);
  pts << 0, 1, 0, 0;
  EXPECT_TRUE(component(PolyhedralCurrent(pts, 2, {{0, 1, e(2, {1})}}), 0).empty());
  EXPECT_THROW(component(t, 3), std::out_of_range);
}

TEST(Acyclic, Examples) {
  EXPECT_TRUE(is_acyclic(load_network("irrigation_r3.json").current));
  EXPECT_FALSE(is_acyclic(triangle_loop()));
  EXPECT_TRUE(is_acyclic(PolyhedralCurrent(3, 2)));
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(BranchAngles, Examples) {
  const auto irrigation = branch_angles(load_network("irrigation_r3.json").current);
  ASSERT_EQ(irrigation.size(), 2u);
  const auto g1 = sorted(irrigation[0].angles_deg);
  ASSERT_EQ(g1.size(), 3u);
  EXPECT_NEAR(g1[0], 90.0, 1e-9);
  EXPECT_NEAR(g1[1], 135.0, 1e-9);
  EXPECT_NEAR(g1[2], 135.0, 1e-9);

  for (const auto& node : branch_angles(load_network("tetrahedron.json").current)) {
    for (double a : node.angles_deg) EXPECT_NEAR(a, 120.0, 1e-9);
  }

  Eigen::MatrixXd pts(2, 3);
  pts << 0, 1, 2, 0, 1, 0;
  EXPECT_TRUE(branch_angles(PolyhedralCurrent(pts, 1, {{0, 1, e(1, {0})}, {1, 2, e(1, {0})}})).empty());
}

TEST(Normalization, OrientationMergingAndCancellation) {
  Eigen::MatrixXd pts(2, 3);
  pts << 1, 0, 1e-12, 0, 0, 0;
  // Node 2 coincides with node 1.
  const PolyhedralCurrent t(pts, 2, {{0, 1, e(2, {0})}, {2, 0, e(2, {1})}});
  ASSERT_EQ(t.segments().size(), 1u);
  const Segment& s = t.segments()[0];
  EXPECT_EQ(s.tail, 1);
  EXPECT_EQ(s.head, 0);
  EXPECT_EQ(s.theta, Multiplicity((Multiplicity(2) << -1, 1).finished()));

  const PolyhedralCurrent gone(pts, 2, {{0, 1, e(2, {0})}, {1, 0, e(2, {0})}});
  EXPECT_TRUE(gone.empty());

  EXPECT_THROW(PolyhedralCurrent(pts, 2, {{1, 2, e(2, {0})}}), std::invalid_argument);
  EXPECT_THROW(PolyhedralCurrent(pts, 2, {{0, 5, e(2, {0})}}), std::invalid_argument);
  EXPECT_THROW(PolyhedralCurrent(pts, 2, {{0, 1, e(3, {0})}}), std::invalid_argument);
}

TEST(CurrentsProperty, BoundaryWeightsSumToZero) {
  Gen gen(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = gen.integer(1, 4);
    const PolyhedralCurrent t = gen.current(gen.integer(2, 4), n, gen.integer(2, 7), gen.integer(0, 10));
    ASSERT_TRUE(boundary(t).total(n).isZero());
  }
}

TEST(CurrentsProperty, MassPositiveAndAdditive) {
  Gen gen(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = gen.integer(1, 4);
    const AlphaNorm norm(gen.uniform(), n);
    const PolyhedralCurrent t = gen.current(3, n, 6, gen.integer(1, 8));
    const double m = mass(t, norm);
    ASSERT_GE(m, 0.0);
    ASSERT_EQ(m == 0.0, t.empty());

    // Split the (disjoint, normalised) segments into two halves.
    std::vector<Segment> first, second;
    for (std::size_t s = 0; s < t.segments().size(); ++s) {
      (s % 2 ? first : second).push_back(t.segments()[s]);
    }
    const double parts = mass(PolyhedralCurrent(t.points(), n, first), norm) +
                         mass(PolyhedralCurrent(t.points(), n, second), norm);
    ASSERT_NEAR(m, parts, 1e-12 * (1.0 + m));
  }
}

TEST(CurrentsProperty, AlphaOneSplitsIntoComponents) {
  Gen gen(24);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = gen.integer(1, 4);
    const PolyhedralCurrent t = gen.current(3, n, 5, gen.integer(1, 8));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += mass(component(t, i), AlphaNorm(1.0, 1));
    ASSERT_NEAR(mass(t, AlphaNorm(1.0, n)), sum, 1e-12 * (1.0 + sum));
  }
}

}  // namespace
}  // namespace branchcal
