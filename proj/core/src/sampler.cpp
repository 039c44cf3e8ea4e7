#include "xtal/sampler.hpp"

#include <cmath>

#include "xtal/error.hpp"

namespace xtal {

void SamplerConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("sampler epsilon must be non-negative");
  }
  if (steps_per_level < 1) throw InvalidArgument("sampler steps_per_level must be >= 1");
}

double SamplerConfig::alpha(int level) const {
  const double s = schedule.sigma(level);
  const double last = schedule.sigma(schedule.size());
  return epsilon * (s * s) / (last * last);
}

ScoreSource network_score_source(const ScoreModel& model, const Parameters& params) {
  ScoreSource src;
  src.cutoff = model.cutoff;
  src.edge_scores = [&model, &params](const MultiGraph& g, const std::vector<int>& types,
                                      int level) -> Eigen::VectorXd {
    return edge_scores(model.net, params, g, types, level).values * model.output_scale(level);
  };
  return src;
}

SamplerStreams default_streams(std::mt19937_64& rng) {
  SamplerStreams s;
  s.initial_fractional = [&rng](int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Coords f(3, n);
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < 3; ++r) f(r, c) = u(rng);
    }
    return f;
  };
  s.gaussian = [&rng](int n) {
    std::normal_distribution<double> z(0.0, 1.0);
    Coords g(3, n);
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < 3; ++r) g(r, c) = z(rng);
    }
    return g;
  };
  return s;
}

namespace {

// Same (i, j, k) topology evaluated at new coordinates.
MultiGraph refresh_graph(const MultiGraph& g, const Coords& p, const Mat3& lattice) {
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) {
    const Vec3 v = p.col(e.i) + lattice * e.k.cast<double>() - p.col(e.j);
    e.d = v.norm();
    e.u = e.d > 0.0 ? Vec3(v / e.d) : Vec3::Zero();
  }
  return MultiGraph(g.node_count(), g.cutoff(), std::move(edges));
}

}  // namespace

SamplerResult langevin_generate(const std::vector<int>& atom_types, const Mat3& lattice,
                                const SamplerConfig& config, const ScoreSource& score,
                                SamplerStreams streams, bool record_trajectory) {
  config.validate();
  if (atom_types.empty()) throw InvalidArgument("langevin_generate: no atoms");
  if (!score.edge_scores) throw InvalidArgument("langevin_generate: no score source");
  const int n = static_cast<int>(atom_types.size());
  const Coords f0 = streams.initial_fractional(n);
  if (f0.cols() != n) throw ShapeMismatch("initial fractional coordinates have wrong size");

  SamplerResult result;
  Coords p = lattice * f0;
  Material state(atom_types, p, lattice);  // validates types and lattice
  for (int t = 1; t <= config.schedule.size(); ++t) {
    const double a = config.alpha(t);
    const double noise_scale = std::sqrt(2.0 * a);
    MultiGraph level_graph;
    for (int step = 0; step < config.steps_per_level; ++step) {
      MultiGraph g;
      if (config.rebuild_graph_every_step || step == 0) {
        g = build_multigraph(Material(atom_types, p, lattice), score.cutoff);
        if (!config.rebuild_graph_every_step) level_graph = g;
      } else {
        g = refresh_graph(level_graph, p, lattice);
      }
      Coords s = Coords::Zero(3, n);
      if (g.empty()) {
        ++result.empty_graph_steps;
      } else {
        s = assemble_coordinate_scores(g, score.edge_scores(g, atom_types, t));
      }
      const Coords z = streams.gaussian(n);
      p += a * s + noise_scale * z;
    }
    if (config.wrap_every_level) p = lattice * wrap_fractional(lattice.inverse() * p);
    if (record_trajectory) result.trajectory.push_back(p);
  }
  result.coords = std::move(p);
  return result;
}

SamplerResult langevin_generate(const std::vector<int>& atom_types, const Mat3& lattice,
                                const SamplerConfig& config, const ScoreSource& score,
                                std::mt19937_64& rng, bool record_trajectory) {
  return langevin_generate(atom_types, lattice, config, score, default_streams(rng),
                           record_trajectory);
}

namespace {

GeneratedMaterial sample_coordinates(const JointModel& model, const Parameters& params,
                                     const SamplerConfig& config, std::mt19937_64& rng,
                                     std::vector<int> atoms, const Mat3& lattice, int retries) {
  const SamplerResult r =
      langevin_generate(atoms, lattice, config, network_score_source(model.score, params), rng);
  Material m = wrap_to_cell(Material(std::move(atoms), r.coords, lattice));
  return GeneratedMaterial{std::move(m), r.empty_graph_steps, retries};
}

bool usable_cell(const LatticeParams& lp, Mat3& lattice) {
  if (!is_realizable(lp)) return false;
  lattice = params_to_lattice(lp);
  return std::abs(lattice.determinant()) >= kMinCellVolume;
}

}  // namespace

GeneratedMaterial generate_material(const JointModel& model, const Parameters& params,
                                    const SamplerConfig& config, std::mt19937_64& rng,
                                    const GenerationOptions& options) {
  const VaeConfig& vc = model.vae.config();
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](int dim) {
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z(i) = normal(rng);
    return z;
  };
  const Eigen::VectorXd z_a = draw(vc.latent_a_dim);
  const AtomTypeSet types = decode_type_set(model.vae, params, z_a, options.decode_mode, &rng);

  int retries = 0;
  Mat3 lattice;
  while (!usable_cell(decode_lattice(model.vae, params, draw(vc.latent_l_dim)), lattice)) {
    if (++retries > options.lattice_retry_limit) {
      throw UnrealizableCell("decoded lattice unrealizable after " +
                             std::to_string(options.lattice_retry_limit) + " resamples");
    }
  }
  return sample_coordinates(model, params, config, rng, type_set_to_vector(types), lattice, retries);
}

GeneratedMaterial decode_material(const JointModel& model, const Parameters& params,
                                  const Eigen::VectorXd& z_a, const Eigen::VectorXd& z_l,
                                  const SamplerConfig& config, std::mt19937_64& rng,
                                  const GenerationOptions& options) {
  const AtomTypeSet types = decode_type_set(model.vae, params, z_a, options.decode_mode, &rng);
  Mat3 lattice;
  if (!usable_cell(decode_lattice(model.vae, params, z_l), lattice)) {
    throw UnrealizableCell("decoded lattice is unrealizable");
  }
  return sample_coordinates(model, params, config, rng, type_set_to_vector(types), lattice, 0);
}

GeneratedMaterial reconstruct_material(const JointModel& model, const Parameters& params,
                                       const Material& target, const SamplerConfig& config,
                                       std::mt19937_64& rng, const GenerationOptions& options) {
  const EncodeResult e = encode_vae(model.vae, params, target, rng);
  return decode_material(model, params, e.state.mu_a, e.state.mu_l, config, rng, options);
}

}  // namespace xtal
