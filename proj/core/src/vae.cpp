#include "xtal/vae.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <numbers>

#include "xtal/error.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/optim.hpp"

namespace xtal {

int AtomTypeSet::atom_count() const {
  int n = 0;
  for (const auto& [e, c] : entries) n += c;
  return n;
}

void AtomTypeSet::validate(int element_count, int max_atoms) const {
  if (entries.empty()) throw InvalidArgument("atom type set is empty");
  if (k() > element_count) throw InvalidArgument("atom type set has more entries than elements");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto [e, c] = entries[i];
    if (e < 1 || e > element_count) {
      throw InvalidArgument("element " + std::to_string(e) + " outside 1.." +
                            std::to_string(element_count));
    }
    if (c < 1) throw InvalidArgument("count of element " + std::to_string(e) + " is below 1");
    for (std::size_t j = 0; j < i; ++j) {
      if (entries[j].first == e) throw InvalidArgument("duplicate element " + std::to_string(e));
    }
  }
  if (atom_count() > max_atoms) {
    throw InvalidArgument("atom type set holds " + std::to_string(atom_count()) +
                          " atoms, limit is " + std::to_string(max_atoms));
  }
}

std::vector<int> type_set_to_vector(const AtomTypeSet& c) {
  auto entries = c.entries;
  std::sort(entries.begin(), entries.end());
  std::vector<int> a;
  for (const auto& [e, n] : entries) a.insert(a.end(), static_cast<std::size_t>(n), e);
  return a;
}

AtomTypeSet vector_to_type_set(const std::vector<int>& atom_types) {
  std::map<int, int> counts;
  for (int z : atom_types) ++counts[z];
  AtomTypeSet c;
  for (const auto& [e, n] : counts) c.entries.emplace_back(e, n);
  return c;
}

void VaeConfig::validate() const {
  if (latent_a_dim < 1 || latent_l_dim < 1) throw InvalidArgument("latent dims must be >= 1");
  if (decoder_hidden < 1 || element_embed_dim < 1) {
    throw InvalidArgument("decoder sizes must be >= 1");
  }
  if (element_count < 1 || element_count > encoder.max_element) {
    throw InvalidArgument("element_count must lie in 1..max_element");
  }
  if (max_atoms < 1) throw InvalidArgument("max_atoms must be >= 1");
  encoder.validate();
}

namespace {

BackboneConfig encoder_config(BackboneConfig c) {
  c.pool_head = true;
  c.edge_head = false;
  c.noise_level_count = 0;
  return c;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  const Eigen::ArrayXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

Eigen::Index sample_categorical(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  std::discrete_distribution<Eigen::Index> d(p.data(), p.data() + p.size());
  return d(rng);
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

}  // namespace

TypeLatticeVae::TypeLatticeVae(VaeConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)),
      encoder_(encoder_config(config.encoder), prefix_ + "enc.") {
  config_.encoder = encoder_.config();
  config_.validate();
}

void TypeLatticeVae::add_mlp(Parameters& p, const std::string& head, int in, int out,
                             std::mt19937_64& rng) const {
  const int h = config_.decoder_hidden;
  p.add_uniform(name(head + ".w1"), in, h, in, rng);
  p.add_uniform(name(head + ".b1"), 1, h, in, rng);
  p.add_uniform(name(head + ".w2"), h, out, h, rng);
  p.add_uniform(name(head + ".b2"), 1, out, h, rng);
}

ad::Var TypeLatticeVae::mlp(ad::Tape& t, const std::string& head, ad::Var x) const {
  ad::Var h = t.relu(t.add_row(t.matmul(x, t.param(name(head + ".w1"))), t.param(name(head + ".b1"))));
  return t.add_row(t.matmul(h, t.param(name(head + ".w2"))), t.param(name(head + ".b2")));
}

void TypeLatticeVae::register_parameters(Parameters& p, std::mt19937_64& rng) const {
  encoder_.register_parameters(p, rng);
  const BackboneConfig& ec = encoder_.config();
  const int da = config_.latent_a_dim;
  const int dl = config_.latent_l_dim;
  p.add_uniform(name("mu_a.w"), ec.latent_a_dim, da, ec.latent_a_dim, rng);
  p.add_uniform(name("mu_a.b"), 1, da, ec.latent_a_dim, rng);
  p.add_uniform(name("logvar_a.w"), ec.latent_a_dim, da, ec.latent_a_dim, rng);
  p.add_uniform(name("logvar_a.b"), 1, da, ec.latent_a_dim, rng);
  p.add_uniform(name("mu_l.w"), ec.latent_l_dim, dl, ec.latent_l_dim, rng);
  p.add_uniform(name("mu_l.b"), 1, dl, ec.latent_l_dim, rng);
  p.add_uniform(name("logvar_l.w"), ec.latent_l_dim, dl, ec.latent_l_dim, rng);
  p.add_uniform(name("logvar_l.b"), 1, dl, ec.latent_l_dim, rng);
  add_mlp(p, "head_e", da, config_.element_count, rng);
  add_mlp(p, "head_k", da, config_.max_atoms, rng);
  p.add_uniform(name("head_n.embed"), config_.element_count, config_.element_embed_dim, 1, rng);
  add_mlp(p, "head_n", config_.element_embed_dim + da, config_.max_atoms, rng);
  add_mlp(p, "head_l", dl, 6, rng);
  if (config_.property_head) add_mlp(p, "head_p", da + dl, 1, rng);
}

Parameters TypeLatticeVae::init(std::uint64_t seed) const {
  Parameters p;
  std::mt19937_64 rng(seed);
  register_parameters(p, rng);
  return p;
}

TypeLatticeVae::Encoded TypeLatticeVae::encode(ad::Tape& t, const Material& m) const {
  const MultiGraph g = build_multigraph(m, encoder_.config().cutoff);
  const GraphFeatures f = encoder_.features(g, m.atom_types());
  const auto [fa, fl] = encoder_.encode(t, f);
  auto lin = [&](ad::Var x, const std::string& head) {
    return t.add_row(t.matmul(x, t.param(name(head + ".w"))), t.param(name(head + ".b")));
  };
  return Encoded{lin(fa, "mu_a"), lin(fa, "logvar_a"), lin(fl, "mu_l"), lin(fl, "logvar_l")};
}

ad::Var TypeLatticeVae::element_logits(ad::Tape& t, ad::Var z_a) const {
  return mlp(t, "head_e", z_a);
}

ad::Var TypeLatticeVae::k_logits(ad::Tape& t, ad::Var z_a) const { return mlp(t, "head_k", z_a); }

ad::Var TypeLatticeVae::count_logits(ad::Tape& t, ad::Var z_a,
                                     const std::vector<int>& elements) const {
  std::vector<int> rows;
  rows.reserve(elements.size());
  for (int e : elements) {
    if (e < 1 || e > config_.element_count) {
      throw InvalidArgument("element " + std::to_string(e) + " outside the decoder vocabulary");
    }
    rows.push_back(e - 1);
  }
  const std::vector<int> zero(elements.size(), 0);
  ad::Var emb = t.gather_rows(t.param(name("head_n.embed")), rows);
  return mlp(t, "head_n", t.concat_cols(emb, t.gather_rows(z_a, zero)));
}

ad::Var TypeLatticeVae::lattice_raw(ad::Tape& t, ad::Var z_l) const {
  return mlp(t, "head_l", z_l);
}

ad::Var TypeLatticeVae::property(ad::Tape& t, ad::Var z_a, ad::Var z_l) const {
  if (!config_.property_head) throw InvalidArgument("model was built without a property head");
  return mlp(t, "head_p", t.concat_cols(z_a, z_l));
}

EncodeResult encode_vae(const TypeLatticeVae& vae, const Parameters& params, const Material& m,
                        std::mt19937_64& rng) {
  ad::Tape t(&params);
  const auto enc = vae.encode(t, m);
  EncodeResult r;
  r.state.mu_a = t.value(enc.mu_a).row(0).transpose();
  r.state.logvar_a = t.value(enc.logvar_a).row(0).transpose();
  r.state.mu_l = t.value(enc.mu_l).row(0).transpose();
  r.state.logvar_l = t.value(enc.logvar_l).row(0).transpose();
  std::normal_distribution<double> z(0.0, 1.0);
  r.z_a.resize(r.state.mu_a.size());
  r.z_l.resize(r.state.mu_l.size());
  for (Eigen::Index i = 0; i < r.z_a.size(); ++i) {
    r.z_a(i) = r.state.mu_a(i) + std::exp(0.5 * r.state.logvar_a(i)) * z(rng);
  }
  for (Eigen::Index i = 0; i < r.z_l.size(); ++i) {
    r.z_l(i) = r.state.mu_l(i) + std::exp(0.5 * r.state.logvar_l(i)) * z(rng);
  }
  return r;
}

AtomTypeSet decode_type_set(const TypeLatticeVae& vae, const Parameters& params,
                            const Eigen::VectorXd& z_a, DecodeMode mode, std::mt19937_64* rng) {
  if (mode == DecodeMode::Sample && !rng) throw InvalidArgument("sampling decode needs an rng");
  const VaeConfig& cfg = vae.config();
  if (z_a.size() != cfg.latent_a_dim) throw ShapeMismatch("z_a has the wrong dimension");
  ad::Tape t(&params);
  const ad::Var z = t.constant(z_a.transpose());
  const Eigen::VectorXd pe = t.value(t.sigmoid(vae.element_logits(t, z))).row(0).transpose();
  const Eigen::VectorXd pk = softmax(t.value(vae.k_logits(t, z)).row(0).transpose());

  int k = static_cast<int>(mode == DecodeMode::Argmax ? argmax(pk) : sample_categorical(pk, *rng)) + 1;
  k = std::min(k, cfg.element_count);

  std::vector<int> elements;
  if (mode == DecodeMode::Argmax) {
    std::vector<int> order(static_cast<std::size_t>(cfg.element_count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return pe(a) > pe(b); });
    for (int i = 0; i < k; ++i) elements.push_back(order[static_cast<std::size_t>(i)] + 1);
  } else {
    Eigen::VectorXd w = pe;
    for (int i = 0; i < k; ++i) {
      const Eigen::Index e = w.sum() > 0.0 ? sample_categorical(w, *rng) : argmax(w + pe);
      elements.push_back(static_cast<int>(e) + 1);
      w(e) = 0.0;
    }
  }
  std::sort(elements.begin(), elements.end());

  const Eigen::MatrixXd count_logits = t.value(vae.count_logits(t, z, elements));
  AtomTypeSet c;
  for (std::size_t r = 0; r < elements.size(); ++r) {
    const Eigen::VectorXd p = softmax(count_logits.row(static_cast<Eigen::Index>(r)).transpose());
    const Eigen::Index n = mode == DecodeMode::Argmax ? argmax(p) : sample_categorical(p, *rng);
    c.entries.emplace_back(elements[r], static_cast<int>(n) + 1);
  }
  while (c.atom_count() > cfg.max_atoms) {
    auto it = std::max_element(c.entries.begin(), c.entries.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
    --it->second;
  }
  return c;
}

LatticeParams activate_lattice(const Eigen::Matrix<double, 6, 1>& raw) {
  LatticeParams p;
  for (int i = 0; i < 3; ++i) {
    p.lengths[static_cast<std::size_t>(i)] = softplus(raw(i));
    p.angles[static_cast<std::size_t>(i)] = std::numbers::pi * logistic(raw(i + 3));
  }
  return p;
}

LatticeParams decode_lattice(const TypeLatticeVae& vae, const Parameters& params,
                             const Eigen::VectorXd& z_l) {
  if (z_l.size() != vae.config().latent_l_dim) throw ShapeMismatch("z_l has the wrong dimension");
  ad::Tape t(&params);
  const Eigen::MatrixXd raw = t.value(vae.lattice_raw(t, t.constant(z_l.transpose())));
  return activate_lattice(raw.row(0).transpose());
}

double kl_divergence(const LatentState& s) {
  auto part = [](const Eigen::VectorXd& mu, const Eigen::VectorXd& lv) {
    return 0.5 * (lv.array().exp() + mu.array().square() - lv.array() - 1.0).sum();
  };
  return part(s.mu_a, s.logvar_a) + part(s.mu_l, s.logvar_l);
}

VaeTargets make_targets(const Material& m) {
  return VaeTargets{vector_to_type_set(m.atom_types()), lattice_to_params(m.lattice()), density(m)};
}

VaeLossTerms vae_loss(const VaeTargets& tg, const VaeOutputs& out, const LatentState& s,
                      const VaeLossWeights& w) {
  const Eigen::Index e_count = out.p_elements.size();
  const Eigen::Index n_max = out.p_k.size();
  const int k = tg.types.k();
  if (k < 1 || k > n_max) throw ShapeMismatch("vae_loss: k outside the k-head range");
  if (out.p_counts.rows() != k || out.p_counts.cols() != n_max) {
    throw ShapeMismatch("vae_loss: count probabilities must be k x N");
  }
  VaeLossTerms r;
  r.k = -xlogy(1.0, out.p_k(k - 1));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(e_count);
  for (const auto& [e, c] : tg.types.entries) {
    if (e < 1 || e > e_count) throw ShapeMismatch("vae_loss: element outside vocabulary");
    y(e - 1) = 1.0;
  }
  double bce = 0.0;
  for (Eigen::Index i = 0; i < e_count; ++i) {
    bce -= xlogy(y(i), out.p_elements(i)) + xlogy(1.0 - y(i), 1.0 - out.p_elements(i));
  }
  r.elements = bce / static_cast<double>(e_count);
  double ce = 0.0;
  for (int i = 0; i < k; ++i) {
    const int c = tg.types.entries[static_cast<std::size_t>(i)].second;
    if (c < 1 || c > n_max) throw ShapeMismatch("vae_loss: count outside the count-head range");
    ce -= xlogy(1.0, out.p_counts(i, c - 1));
  }
  r.counts = ce / k;
  double se = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    se += std::pow(out.lattice.lengths[i] - tg.lattice.lengths[i], 2);
    se += std::pow(out.lattice.angles[i] - tg.lattice.angles[i], 2);
  }
  r.lattice = se / 6.0;
  r.kl = kl_divergence(s);
  r.total = w.k * r.k + w.elements * r.elements + w.counts * r.counts + w.lattice * r.lattice +
            w.kl * r.kl;
  return r;
}

Parameters JointModel::init(std::uint64_t seed) const {
  Parameters p;
  std::mt19937_64 rng(seed);
  vae.register_parameters(p, rng);
  score.net.register_parameters(p, rng);
  return p;
}

namespace {

ad::Var kl_var(ad::Tape& t, ad::Var mu, ad::Var lv) {
  ad::Var inner = t.add_scalar(t.sub(t.add(t.exp(lv), t.square(mu)), lv), -1.0);
  return t.scale(t.sum(inner), 0.5);
}

ad::Var reparameterize(ad::Tape& t, ad::Var mu, ad::Var lv, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  ad::Matrix eps(1, t.value(mu).cols());
  for (Eigen::Index i = 0; i < eps.cols(); ++i) eps(0, i) = z(rng);
  return t.add(mu, t.mul(t.exp(t.scale(lv, 0.5)), t.constant(std::move(eps))));
}

}  // namespace

JointExampleLoss joint_example_loss(ad::Tape& t, const JointModel& model, const Material& m,
                                    int level, std::mt19937_64& rng) {
  const TypeLatticeVae& vae = model.vae;
  const VaeConfig& cfg = vae.config();
  const VaeLossWeights& w = cfg.weights;
  const VaeTargets tg = make_targets(m);
  tg.types.validate(cfg.element_count, cfg.max_atoms);

  const auto enc = vae.encode(t, m);
  const ad::Var za = reparameterize(t, enc.mu_a, enc.logvar_a, rng);
  const ad::Var zl = reparameterize(t, enc.mu_l, enc.logvar_l, rng);

  const int target_k = tg.types.k() - 1;
  const ad::Var lk = t.softmax_cross_entropy(vae.k_logits(t, za), std::span<const int>(&target_k, 1));

  ad::Matrix y = ad::Matrix::Zero(1, cfg.element_count);
  std::vector<int> elements, counts;
  for (const auto& [e, c] : tg.types.entries) {
    y(0, e - 1) = 1.0;
    elements.push_back(e);
    counts.push_back(c - 1);
  }
  const ad::Var le = t.bce_with_logits(vae.element_logits(t, za), y);
  const ad::Var ln = t.softmax_cross_entropy(vae.count_logits(t, za, elements), counts);

  const ad::Var raw = vae.lattice_raw(t, zl);
  const ad::Var lengths = t.softplus(t.slice_cols(raw, 0, 3));
  const ad::Var angles = t.scale(t.sigmoid(t.slice_cols(raw, 3, 3)), std::numbers::pi);
  ad::Matrix target(1, 6);
  for (int i = 0; i < 3; ++i) {
    target(0, i) = tg.lattice.lengths[static_cast<std::size_t>(i)];
    target(0, i + 3) = tg.lattice.angles[static_cast<std::size_t>(i)];
  }
  const ad::Var ll =
      t.mean(t.square(t.sub(t.concat_cols(lengths, angles), t.constant(std::move(target)))));

  const ad::Var lkl = t.add(kl_var(t, enc.mu_a, enc.logvar_a), kl_var(t, enc.mu_l, enc.logvar_l));

  JointExampleLoss r;
  ad::Var total = t.add(t.scale(lk, w.k), t.scale(le, w.elements));
  total = t.add(total, t.scale(ln, w.counts));
  total = t.add(total, t.scale(ll, w.lattice));
  total = t.add(total, t.scale(lkl, w.kl));
  r.values[1] = t.scalar(lk);
  r.values[2] = t.scalar(le);
  r.values[3] = t.scalar(ln);
  r.values[4] = t.scalar(ll);
  r.values[5] = t.scalar(lkl);

  if (const auto dsm = dsm_example_loss(t, model.score, m, level, rng)) {
    total = t.add(total, t.scale(*dsm, w.dsm));
    r.values[6] = t.scalar(*dsm);
  }
  if (cfg.property_head) {
    ad::Matrix p(1, 1);
    p(0, 0) = tg.property;
    const ad::Var lp = t.mean(t.square(t.sub(vae.property(t, za, zl), t.constant(std::move(p)))));
    total = t.add(total, t.scale(lp, w.property));
    r.values[7] = t.scalar(lp);
  }
  r.total = total;
  r.values[0] = t.scalar(total);
  return r;
}

JointTrainResult train_joint(const std::vector<Material>& dataset, const TrainConfig& config,
                             const JointModel& model, Parameters init) {
  if (dataset.empty()) throw InvalidArgument("train_joint: empty dataset");
  if (config.batch_size < 1) throw InvalidArgument("train_joint: batch_size must be >= 1");
  const ScoreModel& sm = model.score;
  if (static_cast<int>(sm.edge_std.sigma_hats.size()) != sm.schedule.size()) {
    throw InvalidArgument("train_joint: edge std and schedule lengths differ");
  }
  JointTrainResult result{
      std::move(init),
      LossCurve{{"total", "k", "elements", "counts", "lattice", "kl", "dsm", "property"}, {}}};
  Parameters& params = result.params;
  Adam adam(config.adam);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> level_dist(1, sm.schedule.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> sums(result.curve.columns.size(), 0.0);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
      for (std::size_t b = start; b < stop; ++b) {
        const int level = level_dist(rng);
        ad::Tape tape(&params);
        const JointExampleLoss terms = joint_example_loss(tape, model, dataset[order[b]], level, rng);
        if (!std::isfinite(terms.values[0])) {
          throw DivergenceError("non-finite joint loss at epoch " + std::to_string(epoch) +
                                ", material " + std::to_string(order[b]) + ", level " +
                                std::to_string(level));
        }
        tape.backward(terms.total);
        tape.accumulate_parameter_gradient(grad);
        for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += terms.values[c];
      }
      grad /= static_cast<double>(stop - start);
      try {
        adam.step(params.values(), std::move(grad));
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                              ", batch starting at " + std::to_string(start) + ")");
      }
    }
    for (double& s : sums) s /= static_cast<double>(dataset.size());
    result.curve.rows.push_back(std::move(sums));
  }
  return result;
}

PropertyFn property_head_fn(const TypeLatticeVae& vae, const Parameters& params) {
  return [&vae, &params](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    const int da = vae.config().latent_a_dim;
    const int dl = vae.config().latent_l_dim;
    if (z.size() != da + dl) throw ShapeMismatch("property latent has the wrong dimension");
    ad::Tape t(&params);
    const ad::Var za = t.variable(z.head(da).transpose());
    const ad::Var zl = t.variable(z.tail(dl).transpose());
    const ad::Var h = vae.property(t, za, zl);
    if (grad) {
      t.backward(h);
      grad->resize(da + dl);
      grad->head(da) = t.grad(za).row(0).transpose();
      grad->tail(dl) = t.grad(zl).row(0).transpose();
    }
    return t.scalar(h);
  };
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> optimize_property(const Eigen::VectorXd& z_a,
                                                              const Eigen::VectorXd& z_l,
                                                              const PropertyFn& h, int steps,
                                                              double step_size,
                                                              PropertyGoal goal) {
  if (steps < 0) throw InvalidArgument("optimize_property: negative step count");
  Eigen::VectorXd z(z_a.size() + z_l.size());
  z << z_a, z_l;
  const double sign = goal == PropertyGoal::Minimize ? -1.0 : 1.0;
  Eigen::VectorXd g;
  for (int s = 0; s < steps; ++s) {
    h(z, &g);
    z += sign * step_size * g;
  }
  return {z.head(z_a.size()), z.tail(z_l.size())};
}

}  // namespace xtal
