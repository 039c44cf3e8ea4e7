#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "xtal/autodiff.hpp"
#include "xtal/elements.hpp"
#include "xtal/parameters.hpp"
#include "xtal/periodic_graph.hpp"

namespace xtal {

/// Hyperparameters of the invariant message-passing network.
///
/// The network only ever sees atom types, edge distances and connectivity:
/// node states start from a learned type embedding, each layer sends messages
/// along edges modulated by a radial-basis filter that vanishes smoothly at
/// the cutoff, and node states are updated residually. An edge head turns the
/// symmetric pair state (h_i + h_j, h_i * h_j) into one scalar per directed
/// edge; a pool head sums node states and maps them to two latent vectors.
struct BackboneConfig {
  int layer_count = 4;
  int hidden_size = 128;
  int rbf_count = 32;
  double cutoff = 6.0;
  int latent_a_dim = 128;
  int latent_l_dim = 128;
  /// Number of noise levels embedded into edge features; 0 disables the
  /// noise-level embedding (used by the VAE encoder).
  int noise_level_count = 0;
  int max_element = kMaxElement;
  bool edge_head = true;
  bool pool_head = false;

  void validate() const;
};

/// Constant, coordinate-free inputs derived from a multigraph.
struct GraphFeatures {
  int node_count = 0;
  std::vector<int> type_rows;  // atomic number - 1
  std::vector<int> src;        // edge i
  std::vector<int> dst;        // edge j
  Eigen::MatrixXd rbf;         // edges x rbf_count, Gaussian basis of d
  Eigen::VectorXd envelope;    // edges, polynomial cutoff envelope of d
};

/// Smooth polynomial envelope: 1 at d = 0, value and slope 0 at d = cutoff.
double cutoff_envelope(double d, double cutoff);

struct EdgeScores {
  Eigen::VectorXd values;  // aligned with MultiGraph::edges()
};

class Backbone {
 public:
  explicit Backbone(BackboneConfig config, std::string prefix = "");

  const BackboneConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

  /// Registers this network's segments in `params` (names carry the prefix).
  /// The edge output layer starts at zero so initial scores vanish.
  void register_parameters(Parameters& params, std::mt19937_64& rng) const;
  Parameters init(std::uint64_t seed) const;

  GraphFeatures features(const MultiGraph& g, const std::vector<int>& atom_types) const;

  /// Per-edge scalar outputs (edges x 1). `level` is 1-based.
  ad::Var edge_scores(ad::Tape& tape, const GraphFeatures& f, int level) const;
  /// Sum-pooled latent features (1 x d, 1 x f).
  std::pair<ad::Var, ad::Var> encode(ad::Tape& tape, const GraphFeatures& f) const;

 private:
  ad::Var node_states(ad::Tape& tape, const GraphFeatures& f, ad::Var edge_feat) const;
  ad::Var edge_features(ad::Tape& tape, const GraphFeatures& f, int level) const;
  std::string name(const std::string& s) const { return prefix_ + s; }

  BackboneConfig config_;
  std::string prefix_;
};

/// Convenience wrappers evaluating the network without gradients.
EdgeScores edge_scores(const Backbone& net, const Parameters& params, const MultiGraph& g,
                       const std::vector<int>& atom_types, int level);
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Backbone& net, const Parameters& params,
                                                   const MultiGraph& g,
                                                   const std::vector<int>& atom_types);

}  // namespace xtal
