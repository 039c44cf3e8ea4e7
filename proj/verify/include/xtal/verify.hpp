#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "xtal/backbone.hpp"
#include "xtal/crystal.hpp"
#include "xtal/elements.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/periodic_graph.hpp"
#include "xtal/sampler.hpp"

namespace xtal::verify {

// Independent reference implementations.

/// Every (i, j, k) with k in [-kmax, kmax]^3 and 1e-12 < |p_i + L k - p_j| <= cutoff,
/// evaluated on the raw (unwrapped) coordinates. Sorted like MultiGraph edges.
std::vector<Edge> brute_force_edges(const Material& m, double cutoff, int kmax = 5);

/// argmin over v in [-range, range]^3 of |p_i + L v - p_tilde_i| per atom.
ShiftMatrix brute_force_align(const Coords& p, const Coords& p_tilde, const Mat3& lattice,
                              int range = 3);

/// 1-D optimal transport by matching sorted unit masses (north-west corner rule).
double transport_emd(std::vector<double> a, std::vector<double> b);

/// Charge neutrality by enumerating every combination of per-element states.
CompositionVerdict enumerate_oxidation_states(const std::vector<int>& atom_types,
                                              const ElementTable& table = ElementTable::builtin());

/// Hand-listed compositions with their true verdicts (50 entries).
struct CompositionCase {
  std::string label;
  std::vector<int> atom_types;
  CompositionVerdict expected;
};
const std::vector<CompositionCase>& composition_cases();

// Random inputs.

/// Realizable lattice with lengths in [lmin, lmax] and angles in
/// [min_angle, pi - min_angle], rejecting cells flatter than `min_flatness`
/// (volume / product of lengths).
LatticeParams random_lattice_params(std::mt19937_64& rng, double lmin = 2.5, double lmax = 6.0,
                                    double min_angle = 1.0, double min_flatness = 0.3);
/// Random lattice in a random orientation.
Mat3 random_lattice(std::mt19937_64& rng, double lmin = 2.5, double lmax = 6.0);
/// 1..max_atoms atoms at uniform fractional positions in a random skewed cell.
Material random_material(std::mt19937_64& rng, int max_atoms = 12, int max_element = 20);

/// Backbone parameters with every segment (including the zero-initialized
/// output layer) drawn uniformly, for tests that need non-trivial outputs.
Parameters randomized_parameters(const Backbone& net, std::uint64_t seed, double scale = 0.5);

// Checks.

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;      // largest observed error (or mismatch count)
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

using EdgeScoreFn = std::function<Eigen::VectorXd(const MultiGraph&, const std::vector<int>&)>;

/// Edge scores of a randomly initialized tiny backbone at level 1.
EdgeScoreFn random_backbone_scores(std::uint64_t seed);

/// Permutation, rotation, translation and periodic behaviour of assembled
/// scores over `count` random materials; worst is the max-abs error.
CheckResult check_assembled_invariance(const EdgeScoreFn& scores, double cutoff, int count,
                                       std::uint64_t seed, double tolerance = 1e-8);
CheckResult check_multigraph_oracle(int count, std::uint64_t seed);
CheckResult check_distance_invariance(int count, std::uint64_t seed, double tolerance = 1e-9);
CheckResult check_unit_vector_gradient(int count, std::uint64_t seed, double tolerance = 1e-6);
CheckResult check_backbone_gradients(std::uint64_t seed, double tolerance = 1e-5);
CheckResult check_denoising_target(int count, std::uint64_t seed, double tolerance = 1e-6);
CheckResult check_lattice_roundtrip(int count, std::uint64_t seed, double tolerance = 1e-9);
CheckResult check_lattice_rotation_invariance(int count, std::uint64_t seed,
                                              double tolerance = 1e-10);
CheckResult check_zero_sum(int count, std::uint64_t seed, double tolerance = 1e-10);
CheckResult check_alignment_oracle(int count, std::uint64_t seed);
/// Two atoms in a cubic cell driven by the closed-form score of N(d*, tau^2)
/// on their distance; passes when the histogram mode lies within 5% of d*.
CheckResult check_analytic_sampler(int chains, std::uint64_t seed, double d_star = 1.5,
                                   double tau = 0.1);
CheckResult check_emd_oracle(int count, std::uint64_t seed, double tolerance = 1e-9);
CheckResult check_coverage_identity(int count, std::uint64_t seed);
CheckResult check_composition_oracle();
CheckResult check_encoder_invariance(int count, std::uint64_t seed, double tolerance = 1e-10);
CheckResult check_sampler_equivariance(std::uint64_t seed, double tolerance = 1e-8);

/// The full battery in a fixed order; `scores` drives the invariance check
/// (a random tiny backbone when empty).
std::vector<CheckResult> run_all(std::uint64_t seed, const EdgeScoreFn& scores = {},
                                 double cutoff = 4.0);

std::string format_result(const CheckResult& r);

}  // namespace xtal::verify
