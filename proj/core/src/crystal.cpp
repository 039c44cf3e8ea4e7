#include "xtal/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "xtal/elements.hpp"
#include "xtal/error.hpp"

namespace xtal {

namespace {

constexpr double kArccosSlack = 1e-9;

void check_lattice(const Mat3& lattice) {
  if (!lattice.allFinite()) throw InvalidLattice("lattice has non-finite entries");
  if (std::abs(lattice.determinant()) <= kMinCellVolume) {
    throw InvalidLattice("lattice is singular (|det L| <= 1e-8)");
  }
}

double clamped_acos(double x) {
  if (x > 1.0 + kArccosSlack || x < -1.0 - kArccosSlack) {
    throw UnrealizableCell("arccos argument " + std::to_string(x) + " outside [-1, 1]");
  }
  return std::acos(std::clamp(x, -1.0, 1.0));
}

}  // namespace

Material::Material(std::vector<int> atom_types, Coords coords, Mat3 lattice)
    : atom_types_(std::move(atom_types)), coords_(std::move(coords)), lattice_(lattice) {
  if (atom_types_.empty()) throw InvalidMaterial("material needs at least one atom");
  if (coords_.cols() != static_cast<Eigen::Index>(atom_types_.size())) {
    throw ShapeMismatch("coordinate matrix has " + std::to_string(coords_.cols()) +
                        " columns for " + std::to_string(atom_types_.size()) + " atoms");
  }
  if (!coords_.allFinite()) throw InvalidMaterial("coordinates have non-finite entries");
  check_lattice(lattice_);
  for (int z : atom_types_) {
    if (z < 1 || z > kMaxElement) {
      throw InvalidMaterial("atom type " + std::to_string(z) + " outside 1.." +
                            std::to_string(kMaxElement));
    }
  }
}

Material Material::from_fractional(std::vector<int> atom_types, const Coords& frac,
                                   const Mat3& lattice) {
  return Material(std::move(atom_types), lattice * frac, lattice);
}

Coords Material::fractional() const { return lattice_.partialPivLu().solve(coords_); }

double gamma_argument(const LatticeParams& p) {
  const double c12 = std::cos(p.phi12());
  const double c13 = std::cos(p.phi13());
  const double c23 = std::cos(p.phi23());
  return (c23 * c13 - c12) / (std::sin(p.phi23()) * std::sin(p.phi13()));
}

bool is_realizable(const LatticeParams& p, double slack) {
  for (int a = 0; a < 3; ++a) {
    if (!(p.lengths[a] > 0.0) || !std::isfinite(p.lengths[a])) return false;
    if (!(p.angles[a] > 0.0 && p.angles[a] < std::numbers::pi)) return false;
  }
  const double g = gamma_argument(p);
  return std::isfinite(g) && g <= 1.0 + slack && g >= -1.0 - slack;
}

LatticeParams lattice_to_params(const Mat3& lattice) {
  check_lattice(lattice);
  LatticeParams p;
  for (int a = 0; a < 3; ++a) p.lengths[a] = lattice.col(a).norm();
  auto angle = [&](int i, int j) {
    return clamped_acos(lattice.col(i).dot(lattice.col(j)) / (p.lengths[i] * p.lengths[j]));
  };
  p.angles = {angle(0, 1), angle(0, 2), angle(1, 2)};
  return p;
}

Mat3 params_to_lattice(const LatticeParams& p) {
  for (int a = 0; a < 3; ++a) {
    if (!(p.lengths[a] > 0.0)) throw UnrealizableCell("lattice lengths must be positive");
    if (!(p.angles[a] > 0.0 && p.angles[a] < std::numbers::pi)) {
      throw UnrealizableCell("lattice angles must lie in (0, pi)");
    }
  }
  const double gamma = clamped_acos(gamma_argument(p));
  const auto [l1, l2, l3] = p.lengths;
  Mat3 lattice;
  lattice.col(0) << l1 * std::sin(p.phi13()), 0.0, l1 * std::cos(p.phi13());
  lattice.col(1) << -l2 * std::sin(p.phi23()) * std::cos(gamma),
      l2 * std::sin(p.phi23()) * std::sin(gamma), l2 * std::cos(p.phi23());
  lattice.col(2) << 0.0, 0.0, l3;
  return lattice;
}

Rotation::Rotation(const Mat3& q, double tolerance) : q_(q) {
  const double err = (q.transpose() * q - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err <= tolerance)) {
    throw InvalidArgument("rotation matrix is not orthogonal (max |QtQ - I| = " +
                          std::to_string(err) + ")");
  }
}

Permutation::Permutation(std::vector<int> order) : order_(std::move(order)) {
  std::vector<char> seen(order_.size(), 0);
  for (int idx : order_) {
    if (idx < 0 || idx >= static_cast<int>(order_.size()) || seen[idx]) {
      throw InvalidArgument("permutation is not a bijection");
    }
    seen[idx] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  return Permutation(std::move(order));
}

Permutation Permutation::random(int n, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw keeps the result library-independent.
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return Permutation(std::move(order));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(order_.size());
  for (int i = 0; i < size(); ++i) inv[order_[i]] = i;
  return Permutation(std::move(inv));
}

Material apply_permutation(const Material& m, const Permutation& sigma) {
  if (sigma.size() != m.size()) {
    throw ShapeMismatch("permutation of length " + std::to_string(sigma.size()) +
                        " applied to " + std::to_string(m.size()) + " atoms");
  }
  std::vector<int> types(m.size());
  Coords coords(3, m.size());
  for (int i = 0; i < m.size(); ++i) {
    types[i] = m.atom_types()[sigma.order()[i]];
    coords.col(i) = m.coords().col(sigma.order()[i]);
  }
  return Material(std::move(types), std::move(coords), m.lattice());
}

Material apply_rotation_translation(const Material& m, const Rotation& q, const Vec3& b) {
  Coords coords = q.matrix() * m.coords();
  coords.colwise() += b;
  return Material(m.atom_types(), std::move(coords), q.matrix() * m.lattice());
}

Material apply_periodic(const Material& m, const PeriodicShift& shift) {
  if (shift.k.cols() != m.size()) {
    throw ShapeMismatch("periodic shift has " + std::to_string(shift.k.cols()) +
                        " columns for " + std::to_string(m.size()) + " atoms");
  }
  Coords coords = m.coords() + m.lattice() * shift.k.cast<double>();
  return Material(m.atom_types(), std::move(coords), m.lattice());
}

Coords wrap_fractional(const Coords& frac, ShiftMatrix* shifts) {
  // Values within 1e-12 below an integer snap up to it, so wrapping is
  // idempotent under roundoff.
  constexpr double kSnap = 1e-12;
  Coords out(3, frac.cols());
  if (shifts) shifts->resize(3, frac.cols());
  for (Eigen::Index j = 0; j < frac.cols(); ++j) {
    for (int a = 0; a < 3; ++a) {
      const double x = frac(a, j);
      const double fl = std::floor(x + kSnap);
      double f = x - fl;
      if (f < 0.0) f = 0.0;
      out(a, j) = f;
      if (shifts) (*shifts)(a, j) = -static_cast<int>(fl);
    }
  }
  return out;
}

Material wrap_to_cell(const Material& m) {
  return Material::from_fractional(m.atom_types(), wrap_fractional(m.fractional()), m.lattice());
}

Rotation random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat3 g;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Mat3> qr(g);
  Mat3 q = qr.householderQ();
  const Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < 3; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return Rotation(q, 1e-12);
}

}  // namespace xtal
