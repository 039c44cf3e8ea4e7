#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "xtal/backbone.hpp"
#include "xtal/crystal.hpp"
#include "xtal/score_diffusion.hpp"

namespace xtal {

/// Unordered element/count pairs describing the composition of a cell.
/// Entries are kept in ascending atomic-number order.
struct AtomTypeSet {
  std::vector<std::pair<int, int>> entries;  // (atomic number, count)

  int k() const { return static_cast<int>(entries.size()); }
  int atom_count() const;
  /// Throws InvalidArgument unless elements are distinct and within
  /// 1..element_count, counts are >= 1 and sum to at most max_atoms.
  void validate(int element_count, int max_atoms) const;
  bool operator==(const AtomTypeSet&) const = default;
};

/// [e_1 x n_1, ..., e_k x n_k] in ascending atomic-number order.
std::vector<int> type_set_to_vector(const AtomTypeSet& c);
AtomTypeSet vector_to_type_set(const std::vector<int>& atom_types);

struct VaeLossWeights {
  double k = 1.0;
  double elements = 30.0;
  double counts = 1.0;
  double lattice = 10.0;
  double kl = 0.01;
  double dsm = 10.0;
  double property = 1.0;
};

struct VaeConfig {
  /// Encoder network; the pool head and features are forced on, the edge head off.
  BackboneConfig encoder{};
  int latent_a_dim = 128;
  int latent_l_dim = 128;
  int decoder_hidden = 256;
  int element_embed_dim = 64;
  int element_count = kMaxElement;  // E
  int max_atoms = 20;               // N
  bool property_head = true;
  VaeLossWeights weights{};

  void validate() const;
};

struct LatentState {
  Eigen::VectorXd mu_a, logvar_a, mu_l, logvar_l;
};

/// Encoder, four decoder heads and the optional property regressor.
class TypeLatticeVae {
 public:
  explicit TypeLatticeVae(VaeConfig config, std::string prefix = "");

  const VaeConfig& config() const { return config_; }
  const Backbone& encoder() const { return encoder_; }

  void register_parameters(Parameters& params, std::mt19937_64& rng) const;
  Parameters init(std::uint64_t seed) const;

  struct Encoded {
    ad::Var mu_a, logvar_a, mu_l, logvar_l;
  };
  Encoded encode(ad::Tape& tape, const Material& m) const;

  ad::Var element_logits(ad::Tape& tape, ad::Var z_a) const;  // 1 x E
  ad::Var k_logits(ad::Tape& tape, ad::Var z_a) const;        // 1 x N, class c means k = c + 1
  /// One row of N count logits per element; row r belongs to elements[r].
  ad::Var count_logits(ad::Tape& tape, ad::Var z_a, const std::vector<int>& elements) const;
  ad::Var lattice_raw(ad::Tape& tape, ad::Var z_l) const;      // 1 x 6
  ad::Var property(ad::Tape& tape, ad::Var z_a, ad::Var z_l) const;  // 1 x 1

 private:
  ad::Var mlp(ad::Tape& tape, const std::string& head, ad::Var x) const;
  void add_mlp(Parameters& p, const std::string& head, int in, int out, std::mt19937_64& rng) const;
  std::string name(const std::string& s) const { return prefix_ + s; }

  VaeConfig config_;
  std::string prefix_;
  Backbone encoder_;
};

struct EncodeResult {
  LatentState state;
  Eigen::VectorXd z_a;
  Eigen::VectorXd z_l;
};

/// Latent moments of `m` and one reparameterized sample z = mu + exp(logvar/2) eps.
EncodeResult encode_vae(const TypeLatticeVae& vae, const Parameters& params, const Material& m,
                        std::mt19937_64& rng);

enum class DecodeMode { Argmax, Sample };

/// k from the k head, the top-k elements of p_e (ties to the lower atomic
/// number) and per-element counts from the count head. When counts exceed N
/// the largest count is lowered one at a time.
AtomTypeSet decode_type_set(const TypeLatticeVae& vae, const Parameters& params,
                            const Eigen::VectorXd& z_a, DecodeMode mode = DecodeMode::Argmax,
                            std::mt19937_64* rng = nullptr);

/// Lengths softplus(raw), angles pi * logistic(raw).
LatticeParams activate_lattice(const Eigen::Matrix<double, 6, 1>& raw);
/// Decoded lattice items; realizability is left to the caller (is_realizable).
LatticeParams decode_lattice(const TypeLatticeVae& vae, const Parameters& params,
                             const Eigen::VectorXd& z_l);

double kl_divergence(const LatentState& s);

/// Supervision derived from a material.
struct VaeTargets {
  AtomTypeSet types;
  LatticeParams lattice;
  double property = 0.0;
};
VaeTargets make_targets(const Material& m);

/// Head outputs as probabilities (and activated lattice items).
struct VaeOutputs {
  Eigen::VectorXd p_elements;  // E
  Eigen::VectorXd p_k;         // N
  Eigen::MatrixXd p_counts;    // one row of N per target element, same order as targets
  LatticeParams lattice;
};

struct VaeLossTerms {
  double k = 0, elements = 0, counts = 0, lattice = 0, kl = 0, dsm = 0, property = 0;
  double total = 0;
};

/// Weighted reconstruction + KL loss of one example. Cross-entropies use the
/// convention 0 log 0 = 0.
VaeLossTerms vae_loss(const VaeTargets& targets, const VaeOutputs& outputs, const LatentState& s,
                      const VaeLossWeights& w);

/// Encoder/decoder pair together with the coordinate score model. Parameter
/// segments live under "vae." and "score.".
struct JointModel {
  TypeLatticeVae vae;
  ScoreModel score;

  Parameters init(std::uint64_t seed) const;
};

/// Weighted loss of one example: VAE terms on a reparameterized latent plus
/// the DSM term at `level`. values = total, k, elements, counts, lattice, kl,
/// dsm, property.
struct JointExampleLoss {
  ad::Var total;
  std::array<double, 8> values{};
};
JointExampleLoss joint_example_loss(ad::Tape& tape, const JointModel& model, const Material& m,
                                    int level, std::mt19937_64& rng);

struct JointTrainResult {
  Parameters params;
  LossCurve curve;  // total, k, elements, counts, lattice, kl, dsm, property
};

JointTrainResult train_joint(const std::vector<Material>& dataset, const TrainConfig& config,
                             const JointModel& model, Parameters init);

enum class PropertyGoal { Minimize, Maximize };

/// h(z) with z = concat(z_a, z_l); fills `grad` with dh/dz when non-null.
using PropertyFn = std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd* grad)>;

PropertyFn property_head_fn(const TypeLatticeVae& vae, const Parameters& params);

/// Plain gradient steps on h over the concatenated latent.
std::pair<Eigen::VectorXd, Eigen::VectorXd> optimize_property(const Eigen::VectorXd& z_a,
                                                              const Eigen::VectorXd& z_l,
                                                              const PropertyFn& h, int steps,
                                                              double step_size,
                                                              PropertyGoal goal);

}  // namespace xtal
