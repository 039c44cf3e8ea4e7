#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "xtal/crystal.hpp"
#include "xtal/elements.hpp"

namespace xtal {

/// Grams per cubic centimetre from unified atomic masses per cubic angstrom.
inline constexpr double kDensityFactor = 1.66054;

/// Mass density in g/cm^3 using the bundled element masses.
double density(const Material& m);

/// True iff every periodic interatomic distance (self images included)
/// exceeds `threshold` angstrom.
bool structure_validity(const Material& m, double threshold = 0.5);

enum class CompositionVerdict { Valid, Invalid, UnknownElement };

/// Charge neutrality with one oxidation state per element from `table`.
CompositionVerdict composition_validity(const std::vector<int>& atom_types,
                                        const ElementTable& table = ElementTable::builtin());

/// 1-Wasserstein distance between two empirical distributions.
double emd_1d(std::vector<double> a, std::vector<double> b);

/// Atoms per element, indexed by atomic number - 1.
Eigen::VectorXd composition_fingerprint(const Material& m, int element_count = kMaxElement);

inline constexpr int kStructureBins = 64;
inline constexpr double kStructureCutoff = 6.0;

/// Normalized histogram of periodic distances below `cutoff` in `bins` bins,
/// followed by the density. An edgeless cell has an all-zero histogram.
Eigen::VectorXd structure_fingerprint(const Material& m, int bins = kStructureBins,
                                      double cutoff = kStructureCutoff);

struct CoverageThresholds {
  double composition = 6.0;
  double structure = 0.8;
};

/// (COV-R, COV-P) with simplified fingerprints.
std::pair<double, double> cov_metrics(const std::vector<Material>& gen,
                                      const std::vector<Material>& ref,
                                      const CoverageThresholds& thresholds = {});

double uniqueness(const std::vector<Material>& gen);

struct ReconstructionMetrics {
  double atom_type_match_rate = 0.0;
  double lattice_rmse = 0.0;         // over the six lattice items
  double lattice_length_rmse = 0.0;  // over the three lengths
  double distance_rmse = 0.0;
};

ReconstructionMetrics reconstruction_metrics(
    const std::vector<std::pair<Material, Material>>& pairs, double distance_cutoff = kStructureCutoff);

struct MetricsReport {
  double composition_validity = 0.0;
  double structure_validity = 0.0;
  long unknown_element_count = 0;
  double emd_element_count = 0.0;
  double emd_density = 0.0;
  double cov_r = 0.0;
  double cov_p = 0.0;
  double uniqueness = 0.0;
  long generated_count = 0;
  long reference_count = 0;

  std::vector<std::pair<std::string, std::string>> fields() const;
  void write_key_value(const std::string& path) const;
  void write_csv(const std::string& path) const;
};

MetricsReport evaluate(const std::vector<Material>& gen, const std::vector<Material>& ref,
                       const CoverageThresholds& thresholds = {});

}  // namespace xtal
