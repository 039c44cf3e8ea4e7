#pragma once

#include <random>
#include <vector>

#include "xtal/crystal.hpp"

namespace xtal::test {

inline Mat3 cubic(double a) { return a * Mat3::Identity(); }

inline Material single_atom(double a, int z = 6) {
  return Material({z}, Coords::Zero(3, 1), cubic(a));
}

inline Material from_frac(std::vector<int> types, std::vector<Vec3> frac, const Mat3& lattice) {
  Coords f(3, static_cast<Eigen::Index>(frac.size()));
  for (std::size_t i = 0; i < frac.size(); ++i) f.col(static_cast<Eigen::Index>(i)) = frac[i];
  return Material::from_fractional(std::move(types), f, lattice);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace xtal::test
