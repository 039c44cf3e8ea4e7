#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "xtal/error.hpp"
#include "xtal/verify.hpp"

using namespace xtal;
using test::cubic;
using test::max_abs;
constexpr double kPi = std::numbers::pi;

TEST(Material, RejectsBadInput) {
  EXPECT_THROW(Material({}, Coords(3, 0), cubic(2)), InvalidMaterial);
  EXPECT_THROW(Material({1, 2}, Coords::Zero(3, 1), cubic(2)), ShapeMismatch);
  EXPECT_THROW(Material({0}, Coords::Zero(3, 1), cubic(2)), InvalidMaterial);
  EXPECT_THROW(Material({101}, Coords::Zero(3, 1), cubic(2)), InvalidMaterial);
  Coords nan = Coords::Zero(3, 1);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(Material({1}, nan, cubic(2)), InvalidMaterial);
  EXPECT_THROW(Material({1}, Coords::Zero(3, 1), Mat3::Zero()), InvalidLattice);
}

TEST(Material, FractionalRoundTrip) {
  std::mt19937_64 rng(3);
  const Material m = verify::random_material(rng);
  const Material back = Material::from_fractional(m.atom_types(), m.fractional(), m.lattice());
  EXPECT_LT(max_abs(back.coords() - m.coords()), 1e-12);
}

TEST(LatticeParams, CubicAndHexagonalCells) {
  const LatticeParams c = lattice_to_params(cubic(3));
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(c.lengths[i], 3.0);
    EXPECT_NEAR(c.angles[i], kPi / 2, 1e-15);
  }
  Mat3 l;
  l.col(0) = Vec3(2, 0, 0);
  l.col(1) = Vec3(1, std::sqrt(3.0), 0);
  l.col(2) = Vec3(0, 0, 5);
  const LatticeParams h = lattice_to_params(l);
  EXPECT_NEAR(h.lengths[0], 2.0, 1e-14);
  EXPECT_NEAR(h.lengths[1], 2.0, 1e-14);
  EXPECT_NEAR(h.lengths[2], 5.0, 1e-14);
  EXPECT_NEAR(h.phi12(), kPi / 3, 1e-14);
  EXPECT_NEAR(h.phi13(), kPi / 2, 1e-14);
  EXPECT_NEAR(h.phi23(), kPi / 2, 1e-14);
}

TEST(LatticeParams, SingularLatticeIsRejected) {
  Mat3 l = cubic(2);
  l.col(2) = l.col(0) + l.col(1);
  EXPECT_THROW(lattice_to_params(l), InvalidLattice);
}

TEST(LatticeParams, CubicParamsGiveAxisVectors) {
  const Mat3 l = params_to_lattice(LatticeParams{{2, 2, 2}, {kPi / 2, kPi / 2, kPi / 2}});
  EXPECT_LT(max_abs(l - cubic(2)), 1e-15);
}

TEST(LatticeParams, UnrealizableAngles) {
  // phi12 = phi13 = 0.1 with phi23 = 1.0 cannot close a cell.
  const LatticeParams p{{1, 1, 1}, {0.1, 0.1, 1.0}};
  EXPECT_LT(gamma_argument(p), -1.0);
  EXPECT_FALSE(is_realizable(p));
  EXPECT_THROW(params_to_lattice(p), UnrealizableCell);
  EXPECT_THROW(params_to_lattice(LatticeParams{{1, -1, 1}, {1, 1, 1}}), UnrealizableCell);
  EXPECT_THROW(params_to_lattice(LatticeParams{{1, 1, 1}, {1, kPi, 1}}), UnrealizableCell);
}

TEST(LatticeParams, RightAnglesAndSmallGammaAreRealizable) {
  EXPECT_TRUE(is_realizable(LatticeParams{{1, 1, 1}, {kPi / 2, kPi / 2, 0.01}}));
}

TEST(LatticeParams, GramMatrixRoundTripProperty) {
  const auto r = verify::check_lattice_roundtrip(1000, 11);
  EXPECT_TRUE(r.pass) << verify::format_result(r);
}

TEST(LatticeParams, RotationInvarianceProperty) {
  const auto r = verify::check_lattice_rotation_invariance(1000, 12);
  EXPECT_TRUE(r.pass) << verify::format_result(r);
}

TEST(Permutation, IdentitySwapAndInverse) {
  const Material m = test::from_frac({1, 8}, {Vec3(0, 0, 0), Vec3(0.5, 0.25, 0.1)}, cubic(3));
  const Material same = apply_permutation(m, Permutation::identity(2));
  EXPECT_EQ(same.atom_types(), m.atom_types());
  EXPECT_EQ(same.coords(), m.coords());

  const Material swapped = apply_permutation(m, Permutation({1, 0}));
  EXPECT_EQ(swapped.atom_types(), (std::vector<int>{8, 1}));
  EXPECT_EQ(swapped.coords().col(0), m.coords().col(1));
  EXPECT_EQ(swapped.coords().col(1), m.coords().col(0));

  std::mt19937_64 rng(5);
  const Material r = verify::random_material(rng);
  const Permutation s = Permutation::random(r.size(), 9);
  const Material back = apply_permutation(apply_permutation(r, s), s.inverse());
  EXPECT_EQ(back.atom_types(), r.atom_types());
  EXPECT_EQ(back.coords(), r.coords());
  EXPECT_THROW(Permutation({0, 0}), InvalidArgument);
  EXPECT_THROW(apply_permutation(m, Permutation::identity(3)), ShapeMismatch);
}

TEST(RotationTranslation, IdentityAndShift) {
  std::mt19937_64 rng(6);
  const Material m = verify::random_material(rng);
  const Material same = apply_rotation_translation(m, Rotation(Mat3::Identity()), Vec3::Zero());
  EXPECT_EQ(same.coords(), m.coords());
  EXPECT_EQ(same.lattice(), m.lattice());
  const Material moved = apply_rotation_translation(m, Rotation(Mat3::Identity()), Vec3(1, 0, 0));
  EXPECT_EQ(moved.lattice(), m.lattice());
  for (int i = 0; i < m.size(); ++i) {
    EXPECT_LT((moved.coords().col(i) - m.coords().col(i) - Vec3(1, 0, 0)).norm(), 1e-15);
  }
  EXPECT_THROW(Rotation(2.0 * Mat3::Identity()), InvalidArgument);
}

TEST(RotationTranslation, PreservesPairDistances) {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 20; ++c) {
    const Material m = verify::random_material(rng);
    const Material r = apply_rotation_translation(m, random_rotation(rng()), Vec3(0.3, -2, 5));
    for (int i = 0; i < m.size(); ++i) {
      for (int j = 0; j < m.size(); ++j) {
        const double d0 = (m.coords().col(i) - m.coords().col(j)).norm();
        const double d1 = (r.coords().col(i) - r.coords().col(j)).norm();
        EXPECT_NEAR(d0, d1, 1e-10);
      }
    }
  }
}

TEST(PeriodicShift, ZeroAndAxisShift) {
  std::mt19937_64 rng(8);
  const Material m = verify::random_material(rng);
  const Material same = apply_periodic(m, PeriodicShift{ShiftMatrix::Zero(3, m.size())});
  EXPECT_EQ(same.coords(), m.coords());

  const Material one = test::single_atom(2.0);
  PeriodicShift k{ShiftMatrix::Zero(3, 1)};
  k.k(0, 0) = 1;
  EXPECT_LT((apply_periodic(one, k).coords().col(0) - Vec3(2, 0, 0)).norm(), 1e-15);
}

TEST(PeriodicShift, FractionalDifferenceIsTheShift) {
  std::mt19937_64 rng(9);
  const Material m = verify::random_material(rng);
  ShiftMatrix k(3, m.size());
  for (int i = 0; i < m.size(); ++i) k.col(i) = IVec3(i % 3 - 1, 2, -(i % 2));
  const Coords df = apply_periodic(m, PeriodicShift{k}).fractional() - m.fractional();
  EXPECT_LT(max_abs(df - k.cast<double>()), 1e-12);
  EXPECT_THROW(apply_periodic(m, PeriodicShift{ShiftMatrix::Zero(3, m.size() + 1)}), ShapeMismatch);
}

TEST(Wrap, ModularArithmetic) {
  Coords f(3, 2);
  f.col(0) = Vec3(0.5, 0.5, 0.5);
  f.col(1) = Vec3(1.25, -0.25, 3.0);
  ShiftMatrix s;
  const Coords w = wrap_fractional(f, &s);
  EXPECT_EQ(w.col(0), Vec3(0.5, 0.5, 0.5));
  EXPECT_NEAR(w(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(w(1, 1), 0.75, 1e-15);
  EXPECT_EQ(w(2, 1), 0.0);
  EXPECT_EQ(s.col(1), IVec3(-1, 1, -3));
}

TEST(Wrap, IdempotentAndInsideCell) {
  std::mt19937_64 rng(10);
  for (int c = 0; c < 20; ++c) {
    Material m = verify::random_material(rng);
    PeriodicShift k{ShiftMatrix::Constant(3, m.size(), c - 10)};
    const Material w = wrap_to_cell(apply_periodic(m, k));
    const Material ww = wrap_to_cell(w);
    EXPECT_LT(test::max_abs(w.coords() - ww.coords()), 1e-12);
    const Coords f = w.fractional();
    EXPECT_GE(f.minCoeff(), 0.0);
    EXPECT_LT(f.maxCoeff(), 1.0);
  }
}

TEST(RandomRotation, OrthogonalProperAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mat3 q = random_rotation(seed).matrix();
    EXPECT_LT(max_abs(q.transpose() * q - Mat3::Identity()), 1e-12);
    EXPECT_NEAR(q.determinant(), 1.0, 1e-12);
    EXPECT_EQ(q, random_rotation(seed).matrix());
  }
}
