#include "xtal/backbone.hpp"

#include <cmath>

#include "xtal/error.hpp"

namespace xtal {

void BackboneConfig::validate() const {
  if (layer_count <= 0 || hidden_size <= 0 || rbf_count <= 1 || latent_a_dim <= 0 ||
      latent_l_dim <= 0 || noise_level_count < 0 || max_element <= 0) {
    throw InvalidArgument("backbone sizes must be positive");
  }
  if (!(cutoff > 0.0)) throw InvalidArgument("backbone cutoff must be positive");
  if (!edge_head && !pool_head) throw InvalidArgument("backbone needs at least one head");
}

double cutoff_envelope(double d, double cutoff) {
  if (d >= cutoff) return 0.0;
  const double x = d / cutoff;
  const double x5 = x * x * x * x * x;
  return 1.0 - 21.0 * x5 + 35.0 * x5 * x - 15.0 * x5 * x * x;
}

Backbone::Backbone(BackboneConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  config_.validate();
}

void Backbone::register_parameters(Parameters& p, std::mt19937_64& rng) const {
  const int h = config_.hidden_size;
  p.add_uniform(name("embed"), config_.max_element, h, 1, rng);
  p.add_uniform(name("rbf.w"), config_.rbf_count, h, config_.rbf_count, rng);
  p.add_uniform(name("rbf.b"), 1, h, config_.rbf_count, rng);
  if (config_.noise_level_count > 0) {
    p.add_uniform(name("level_embed"), config_.noise_level_count, h, 1, rng);
  }
  for (int l = 0; l < config_.layer_count; ++l) {
    const std::string layer = "layer" + std::to_string(l) + ".";
    p.add_uniform(name(layer + "filter"), h, h, h, rng);
    p.add_uniform(name(layer + "message"), h, h, h, rng);
    p.add_uniform(name(layer + "update.w"), h, h, h, rng);
    p.add_uniform(name(layer + "update.b"), 1, h, h, rng);
  }
  if (config_.edge_head) {
    p.add_uniform(name("edge.pair"), h, h, h, rng);
    p.add_uniform(name("edge.product"), h, h, h, rng);
    p.add_uniform(name("edge.distance"), h, h, h, rng);
    p.add_uniform(name("edge.b"), 1, h, h, rng);
    p.add(name("edge.out.w"), h, 1);
    p.add(name("edge.out.b"), 1, 1);
  }
  if (config_.pool_head) {
    p.add_uniform(name("pool.w"), h, h, h, rng);
    p.add_uniform(name("pool.b"), 1, h, h, rng);
    p.add_uniform(name("pool.a.w"), h, config_.latent_a_dim, h, rng);
    p.add_uniform(name("pool.a.b"), 1, config_.latent_a_dim, h, rng);
    p.add_uniform(name("pool.l.w"), h, config_.latent_l_dim, h, rng);
    p.add_uniform(name("pool.l.b"), 1, config_.latent_l_dim, h, rng);
  }
}

Parameters Backbone::init(std::uint64_t seed) const {
  Parameters p;
  std::mt19937_64 rng(seed);
  register_parameters(p, rng);
  return p;
}

GraphFeatures Backbone::features(const MultiGraph& g, const std::vector<int>& atom_types) const {
  if (static_cast<int>(atom_types.size()) != g.node_count()) {
    throw ShapeMismatch("atom type list does not match graph node count");
  }
  GraphFeatures f;
  f.node_count = g.node_count();
  f.type_rows.reserve(atom_types.size());
  for (int z : atom_types) {
    if (z < 1 || z > config_.max_element) throw InvalidArgument("atom type outside embedding table");
    f.type_rows.push_back(z - 1);
  }
  const auto ne = static_cast<Eigen::Index>(g.edge_count());
  const int nb = config_.rbf_count;
  const double spacing = config_.cutoff / (nb - 1);
  const double gamma = 0.5 / (spacing * spacing);
  f.rbf.resize(ne, nb);
  f.envelope.resize(ne);
  f.src.reserve(g.edge_count());
  f.dst.reserve(g.edge_count());
  for (Eigen::Index e = 0; e < ne; ++e) {
    const Edge& edge = g.edges()[static_cast<std::size_t>(e)];
    f.src.push_back(edge.i);
    f.dst.push_back(edge.j);
    for (int b = 0; b < nb; ++b) {
      const double diff = edge.d - b * spacing;
      f.rbf(e, b) = std::exp(-gamma * diff * diff);
    }
    f.envelope[e] = cutoff_envelope(edge.d, config_.cutoff);
  }
  return f;
}

ad::Var Backbone::edge_features(ad::Tape& t, const GraphFeatures& f, int level) const {
  ad::Var e = t.add_row(t.matmul(t.constant(f.rbf), t.param(name("rbf.w"))), t.param(name("rbf.b")));
  if (config_.noise_level_count > 0) {
    if (level < 1 || level > config_.noise_level_count) {
      throw InvalidArgument("noise level " + std::to_string(level) + " outside 1.." +
                            std::to_string(config_.noise_level_count));
    }
    const int row = level - 1;
    e = t.add_row(e, t.gather_rows(t.param(name("level_embed")), std::span<const int>(&row, 1)));
  }
  return t.silu(e);
}

ad::Var Backbone::node_states(ad::Tape& t, const GraphFeatures& f, ad::Var edge_feat) const {
  ad::Var env = t.constant(f.envelope);
  ad::Var h = t.gather_rows(t.param(name("embed")), f.type_rows);
  for (int l = 0; l < config_.layer_count; ++l) {
    const std::string layer = "layer" + std::to_string(l) + ".";
    ad::Var filter = t.mul_col(t.matmul(edge_feat, t.param(name(layer + "filter"))), env);
    ad::Var sent = t.gather_rows(t.matmul(h, t.param(name(layer + "message"))), f.dst);
    ad::Var agg = t.scatter_add_rows(t.mul(sent, filter), f.src, f.node_count);
    ad::Var upd = t.add_row(t.matmul(agg, t.param(name(layer + "update.w"))),
                            t.param(name(layer + "update.b")));
    h = t.add(h, t.silu(upd));
  }
  return h;
}

ad::Var Backbone::edge_scores(ad::Tape& t, const GraphFeatures& f, int level) const {
  if (!config_.edge_head) throw InvalidArgument("backbone was built without an edge head");
  if (f.src.empty()) return t.constant(Eigen::MatrixXd::Zero(0, 1));
  ad::Var feat = edge_features(t, f, level);
  ad::Var h = node_states(t, f, feat);
  ad::Var hp = t.matmul(h, t.param(name("edge.pair")));
  ad::Var pair = t.add(t.gather_rows(hp, f.src), t.gather_rows(hp, f.dst));
  ad::Var prod = t.matmul(t.mul(t.gather_rows(h, f.src), t.gather_rows(h, f.dst)),
                          t.param(name("edge.product")));
  ad::Var pre = t.add(t.add(pair, prod), t.matmul(feat, t.param(name("edge.distance"))));
  ad::Var hidden = t.silu(t.add_row(pre, t.param(name("edge.b"))));
  ad::Var raw = t.add_row(t.matmul(hidden, t.param(name("edge.out.w"))), t.param(name("edge.out.b")));
  return t.mul_col(raw, t.constant(f.envelope));
}

std::pair<ad::Var, ad::Var> Backbone::encode(ad::Tape& t, const GraphFeatures& f) const {
  if (!config_.pool_head) throw InvalidArgument("backbone was built without a pool head");
  ad::Var h;
  if (f.src.empty()) {
    h = t.gather_rows(t.param(name("embed")), f.type_rows);
  } else {
    h = node_states(t, f, edge_features(t, f, 0));
  }
  ad::Var pooled = t.sum_rows(h);
  ad::Var hidden = t.silu(t.add_row(t.matmul(pooled, t.param(name("pool.w"))), t.param(name("pool.b"))));
  ad::Var za = t.add_row(t.matmul(hidden, t.param(name("pool.a.w"))), t.param(name("pool.a.b")));
  ad::Var zl = t.add_row(t.matmul(hidden, t.param(name("pool.l.w"))), t.param(name("pool.l.b")));
  return {za, zl};
}

EdgeScores edge_scores(const Backbone& net, const Parameters& params, const MultiGraph& g,
                       const std::vector<int>& atom_types, int level) {
  ad::Tape tape(&params);
  const GraphFeatures f = net.features(g, atom_types);
  const ad::Var out = net.edge_scores(tape, f, level);
  return EdgeScores{tape.value(out).col(0)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Backbone& net, const Parameters& params,
                                                   const MultiGraph& g,
                                                   const std::vector<int>& atom_types) {
  ad::Tape tape(&params);
  const GraphFeatures f = net.features(g, atom_types);
  const auto [za, zl] = net.encode(tape, f);
  return {tape.value(za).row(0).transpose(), tape.value(zl).row(0).transpose()};
}

}  // namespace xtal
