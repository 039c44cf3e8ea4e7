#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xtal/backbone.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/sampler.hpp"
#include "xtal/score_diffusion.hpp"
#include "xtal/vae.hpp"

namespace xtal {

/// Every tunable of a run. Text form: one `key = value` per line, `#` starts
/// a comment; unknown or repeated keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;

  // Networks.
  double cutoff = 6.0;
  int layers = 4;
  int hidden = 128;
  int rbf_count = 32;
  int latent_a_dim = 128;
  int latent_l_dim = 128;
  int decoder_hidden = 256;
  int element_embed_dim = 64;
  int element_count = kMaxElement;
  int max_atoms = 20;
  bool property_head = true;

  // Optimization.
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 1000;
  double clip_norm = 10.0;

  // Loss weights.
  double weight_k = 1.0;
  double weight_elements = 30.0;
  double weight_counts = 1.0;
  double weight_lattice = 10.0;
  double weight_kl = 0.01;
  double weight_dsm = 10.0;
  double weight_property = 1.0;

  // Noise and sampling.
  double sigma_max = 10.0;
  double sigma_min = 0.01;
  int noise_levels = 50;
  std::string score_matching_mode = "distance";
  double epsilon = 1e-4;
  int steps_per_level = 100;
  bool rebuild_graph_every_step = true;
  bool wrap_every_level = true;
  int lattice_retry_limit = 100;
  std::string decode_mode = "argmax";

  // Evaluation and property optimization.
  double cov_composition = 6.0;
  double cov_structure = 0.8;
  int optimize_steps = 5000;
  double optimize_step_size = 0.01;
  std::string optimize_goal = "maximize";

  // Synthetic corpus.
  double synth_noise = 0.02;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  /// Sets one key from its text form; throws InvalidArgument on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  void validate() const;

  static const std::vector<std::string>& keys();

  NoiseSchedule schedule() const;
  ScoreMatchingMode mode() const;
  BackboneConfig score_backbone() const;
  VaeConfig vae() const;
  TrainConfig train() const;
  SamplerConfig sampler() const;
  GenerationOptions generation() const;
  CoverageThresholds coverage() const;
  PropertyGoal goal() const;
  /// Joint model with segments prefixed "vae." and "score.".
  JointModel joint_model(const EdgeStd& edge_std) const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace xtal
