#pragma once

#include <functional>
#include <random>
#include <vector>

#include "xtal/crystal.hpp"
#include "xtal/periodic_graph.hpp"
#include "xtal/score_diffusion.hpp"
#include "xtal/vae.hpp"

namespace xtal {

struct SamplerConfig {
  double epsilon = 1e-4;
  int steps_per_level = 100;
  NoiseSchedule schedule = NoiseSchedule::geometric(10.0, 0.01, 50);
  bool rebuild_graph_every_step = true;
  bool wrap_every_level = true;

  void validate() const;
  /// Step size of level t (1-based): epsilon * sigma_t^2 / sigma_T^2.
  double alpha(int level) const;
};

/// Per-edge distance scores for the current graph, aligned with its edges.
struct ScoreSource {
  double cutoff = 6.0;
  std::function<Eigen::VectorXd(const MultiGraph&, const std::vector<int>& atom_types, int level)>
      edge_scores;
};

/// Edge scores of a trained network, rescaled to an actual distance score.
ScoreSource network_score_source(const ScoreModel& model, const Parameters& params);

/// Random inputs of one chain. The defaults draw from the chain's rng; tests
/// can substitute fixed or transformed draws.
struct SamplerStreams {
  std::function<Coords(int n)> initial_fractional;  // entries in [0, 1)
  std::function<Coords(int n)> gaussian;            // standard normal 3 x n
};

SamplerStreams default_streams(std::mt19937_64& rng);

struct SamplerResult {
  Coords coords;
  long empty_graph_steps = 0;
  /// Coordinates after each level, filled when requested.
  std::vector<Coords> trajectory;
};

/// Annealed Langevin dynamics over the coordinates of atoms `atom_types` in
/// `lattice`, starting from P_0 = L F_0 and returning the final state.
SamplerResult langevin_generate(const std::vector<int>& atom_types, const Mat3& lattice,
                                const SamplerConfig& config, const ScoreSource& score,
                                SamplerStreams streams, bool record_trajectory = false);

SamplerResult langevin_generate(const std::vector<int>& atom_types, const Mat3& lattice,
                                const SamplerConfig& config, const ScoreSource& score,
                                std::mt19937_64& rng, bool record_trajectory = false);

struct GenerationOptions {
  int lattice_retry_limit = 100;
  DecodeMode decode_mode = DecodeMode::Argmax;
};

struct GeneratedMaterial {
  Material material;
  long empty_graph_steps = 0;
  int lattice_retries = 0;
};

/// z_A, z_L ~ N(0, I); decode composition and lattice (resampling z_L while
/// the decoded cell is unrealizable), then run the coordinate sampler.
/// `params` holds the segments of both networks.
GeneratedMaterial generate_material(const JointModel& model, const Parameters& params,
                                    const SamplerConfig& config, std::mt19937_64& rng,
                                    const GenerationOptions& options = {});

/// Material from fixed latents; throws UnrealizableCell when z_l decodes to
/// an impossible cell.
GeneratedMaterial decode_material(const JointModel& model, const Parameters& params,
                                  const Eigen::VectorXd& z_a, const Eigen::VectorXd& z_l,
                                  const SamplerConfig& config, std::mt19937_64& rng,
                                  const GenerationOptions& options = {});

/// Encode `target`, decode from the latent means and resample coordinates.
GeneratedMaterial reconstruct_material(const JointModel& model, const Parameters& params,
                                       const Material& target, const SamplerConfig& config,
                                       std::mt19937_64& rng, const GenerationOptions& options = {});

}  // namespace xtal
