#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace xtal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using IVec3 = Eigen::Vector3i;
using Coords = Eigen::Matrix3Xd;       // columns are atom positions
using ShiftMatrix = Eigen::Matrix3Xi;  // columns are integer lattice offsets

/// Smallest |det L| (in cubic angstrom) accepted for a lattice.
inline constexpr double kMinCellVolume = 1e-8;

/// A periodic material: atom types, Cartesian coordinates (3 x n, angstrom)
/// and a lattice whose columns are the three lattice vectors.
class Material {
 public:
  Material(std::vector<int> atom_types, Coords coords, Mat3 lattice);

  static Material from_fractional(std::vector<int> atom_types, const Coords& frac,
                                  const Mat3& lattice);

  const std::vector<int>& atom_types() const { return atom_types_; }
  const Coords& coords() const { return coords_; }
  const Mat3& lattice() const { return lattice_; }
  int size() const { return static_cast<int>(atom_types_.size()); }

  Coords fractional() const;
  double volume() const { return std::abs(lattice_.determinant()); }

 private:
  std::vector<int> atom_types_;
  Coords coords_;
  Mat3 lattice_;
};

/// Rotation-invariant description of a lattice. Angles are in radians and are
/// ordered [phi_12, phi_13, phi_23], where phi_ij is the angle between
/// lattice vectors i and j.
struct LatticeParams {
  std::array<double, 3> lengths{};
  std::array<double, 3> angles{};

  double phi12() const { return angles[0]; }
  double phi13() const { return angles[1]; }
  double phi23() const { return angles[2]; }
};

/// Argument of the arccos that fixes the in-plane angle of the second lattice
/// vector; the cell is realizable iff it lies in [-1, 1].
double gamma_argument(const LatticeParams& p);
bool is_realizable(const LatticeParams& p, double slack = 1e-9);

LatticeParams lattice_to_params(const Mat3& lattice);
Mat3 params_to_lattice(const LatticeParams& p);

/// Orthogonal 3x3 matrix (reflections allowed).
class Rotation {
 public:
  explicit Rotation(const Mat3& q, double tolerance = 1e-10);
  const Mat3& matrix() const { return q_; }

 private:
  Mat3 q_;
};

/// Reordering of atoms: atom i of the result is atom order()[i] of the input.
class Permutation {
 public:
  explicit Permutation(std::vector<int> order);
  static Permutation identity(int n);
  static Permutation random(int n, std::uint64_t seed);

  const std::vector<int>& order() const { return order_; }
  int size() const { return static_cast<int>(order_.size()); }
  Permutation inverse() const;

 private:
  std::vector<int> order_;
};

struct PeriodicShift {
  ShiftMatrix k;
};

Material apply_permutation(const Material& m, const Permutation& sigma);
Material apply_rotation_translation(const Material& m, const Rotation& q, const Vec3& b);
Material apply_periodic(const Material& m, const PeriodicShift& shift);

/// Fractional coordinates mapped into [0, 1); returns the integer shifts that
/// were added (frac_wrapped = frac + shifts) through `shifts` when non-null.
Coords wrap_fractional(const Coords& frac, ShiftMatrix* shifts = nullptr);
Material wrap_to_cell(const Material& m);

/// Proper rotation (det = +1) from the QR factorization of a Gaussian matrix.
Rotation random_rotation(std::uint64_t seed);

}  // namespace xtal
