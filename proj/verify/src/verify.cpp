#include "xtal/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <tuple>

#include "xtal/error.hpp"
#include "xtal/score_diffusion.hpp"
#include "xtal/vae.hpp"

namespace xtal::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

auto key(const Edge& e) { return std::make_tuple(e.i, e.j, e.k.x(), e.k.y(), e.k.z()); }

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

int uniform_int(std::mt19937_64& rng, int a, int b) {
  return std::uniform_int_distribution<int>(a, b)(rng);
}

CheckResult finish(CheckResult r, Clock::time_point t0) {
  r.seconds = seconds_since(t0);
  return r;
}

Coords assembled(const EdgeScoreFn& scores, const Material& m, double cutoff) {
  const MultiGraph g = build_multigraph(m, cutoff);
  if (g.empty()) return Coords::Zero(3, m.size());
  return assemble_coordinate_scores(g, scores(g, m.atom_types()));
}

Rotation random_orthogonal(std::mt19937_64& rng) {
  Mat3 q = random_rotation(rng()).matrix();
  if (rng() & 1u) q = -q;
  return Rotation(q);
}

PeriodicShift random_shift(std::mt19937_64& rng, int n, int range = 2) {
  PeriodicShift s;
  s.k.resize(3, n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < 3; ++r) s.k(r, i) = uniform_int(rng, -range, range);
  }
  return s;
}

Mat3 gram(const Mat3& l) { return l.transpose() * l; }

}  // namespace

std::vector<Edge> brute_force_edges(const Material& m, double cutoff, int kmax) {
  std::vector<Edge> edges;
  const Mat3& lat = m.lattice();
  const Coords& p = m.coords();
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) {
      for (int a = -kmax; a <= kmax; ++a) {
        for (int b = -kmax; b <= kmax; ++b) {
          for (int c = -kmax; c <= kmax; ++c) {
            const IVec3 k(a, b, c);
            const Vec3 v = p.col(i) + lat * k.cast<double>() - p.col(j);
            const double d = v.norm();
            if (d <= 1e-12 || d > cutoff) continue;
            edges.push_back(Edge{i, j, k, d, v / d});
          }
        }
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return key(x) < key(y); });
  return edges;
}

ShiftMatrix brute_force_align(const Coords& p, const Coords& p_tilde, const Mat3& lattice,
                              int range) {
  ShiftMatrix out(3, p.cols());
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = -range; a <= range; ++a) {
      for (int b = -range; b <= range; ++b) {
        for (int c = -range; c <= range; ++c) {
          const IVec3 v(a, b, c);
          const double d = (p.col(i) + lattice * v.cast<double>() - p_tilde.col(i)).norm();
          if (d < best) {
            best = d;
            out.col(i) = v;
          }
        }
      }
    }
  }
  return out;
}

double transport_emd(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("transport_emd: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integer mass units avoid drift: each a-sample carries nb units, each b-sample na units.
  const long ua = static_cast<long>(b.size());
  const long ub = static_cast<long>(a.size());
  std::size_t i = 0, j = 0;
  long ra = ua, rb = ub;
  double cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const long flow = std::min(ra, rb);
    cost += static_cast<double>(flow) * std::abs(a[i] - b[j]);
    ra -= flow;
    rb -= flow;
    if (ra == 0) {
      ++i;
      ra = ua;
    }
    if (rb == 0) {
      ++j;
      rb = ub;
    }
  }
  return cost / static_cast<double>(ua * ub);
}

CompositionVerdict enumerate_oxidation_states(const std::vector<int>& atom_types,
                                              const ElementTable& table) {
  if (atom_types.empty()) return CompositionVerdict::Invalid;
  std::map<int, int> counts;
  for (int z : atom_types) ++counts[z];
  std::vector<int> n;
  std::vector<const std::vector<int>*> states;
  for (const auto& [z, c] : counts) {
    const ElementInfo* info = table.find(z);
    if (!info) return CompositionVerdict::UnknownElement;
    if (info->oxidation_states.empty()) return CompositionVerdict::Invalid;
    n.push_back(c);
    states.push_back(&info->oxidation_states);
  }
  std::vector<std::size_t> idx(n.size(), 0);
  for (;;) {
    long charge = 0;
    for (std::size_t e = 0; e < n.size(); ++e) charge += static_cast<long>(n[e]) * (*states[e])[idx[e]];
    if (charge == 0) return CompositionVerdict::Valid;
    std::size_t e = 0;
    while (e < idx.size() && ++idx[e] == states[e]->size()) idx[e++] = 0;
    if (e == idx.size()) return CompositionVerdict::Invalid;
  }
}

const std::vector<CompositionCase>& composition_cases() {
  using V = CompositionVerdict;
  static const std::vector<CompositionCase> cases = {
      {"NaCl", {11, 17}, V::Valid},
      {"Na2Cl", {11, 11, 17}, V::Invalid},
      {"C3", {6, 6, 6}, V::Valid},
      {"CaTiO3", {20, 22, 8, 8, 8}, V::Valid},
      {"SrZrS3", {38, 40, 16, 16, 16}, V::Valid},
      {"BaSnO3", {56, 50, 8, 8, 8}, V::Valid},
      {"MgO", {12, 8}, V::Valid},
      {"Al2O3", {13, 13, 8, 8, 8}, V::Valid},
      {"Fe2O3", {26, 26, 8, 8, 8}, V::Valid},
      {"FeO", {26, 8}, V::Valid},
      {"Fe3O4", {26, 26, 26, 8, 8, 8, 8}, V::Invalid},
      {"Li2O", {3, 3, 8}, V::Valid},
      {"LiF", {3, 9}, V::Valid},
      {"NaF2", {11, 9, 9}, V::Invalid},
      {"MgCl2", {12, 17, 17}, V::Valid},
      {"AlCl3", {13, 17, 17, 17}, V::Valid},
      {"SiO2", {14, 8, 8}, V::Valid},
      {"SiC", {14, 6}, V::Valid},
      {"H2O", {1, 1, 8}, V::Valid},
      {"NH3", {7, 1, 1, 1}, V::Valid},
      {"CO2", {6, 8, 8}, V::Valid},
      {"CO", {6, 8}, V::Invalid},
      {"P2O5", {15, 15, 8, 8, 8, 8, 8}, V::Valid},
      {"K2S", {19, 19, 16}, V::Valid},
      {"KCl", {19, 17}, V::Valid},
      {"KBr", {19, 35}, V::Valid},
      {"AgI", {47, 53}, V::Valid},
      {"PbO2", {82, 8, 8}, V::Valid},
      {"PbO", {82, 8}, V::Valid},
      {"CuO", {29, 8}, V::Valid},
      {"Cu2O", {29, 29, 8}, V::Invalid},
      {"ZnS", {30, 16}, V::Valid},
      {"NiO", {28, 8}, V::Valid},
      {"Ni2O3", {28, 28, 8, 8, 8}, V::Invalid},
      {"MnO2", {25, 8, 8}, V::Valid},
      {"KMnO4", {19, 25, 8, 8, 8, 8}, V::Valid},
      {"Mn2O7", {25, 25, 8, 8, 8, 8, 8, 8, 8}, V::Valid},
      {"CoF3", {27, 9, 9, 9}, V::Valid},
      {"UO3", {92, 8, 8, 8}, V::Valid},
      {"UO2", {92, 8, 8}, V::Invalid},
      {"He", {2}, V::Invalid},
      {"NeF2", {10, 9, 9}, V::Invalid},
      {"Na", {11}, V::Invalid},
      {"Cl2", {17, 17}, V::Invalid},
      {"NaClO4", {11, 17, 8, 8, 8, 8}, V::Valid},
      {"NaClO", {11, 17, 8}, V::Valid},
      {"Na2ClO", {11, 11, 17, 8}, V::Invalid},
      {"Ti2O3", {22, 22, 8, 8, 8}, V::Invalid},
      {"LiNiO2", {3, 28, 8, 8}, V::Invalid},
      {"HCl", {1, 17}, V::Valid},
  };
  return cases;
}

LatticeParams random_lattice_params(std::mt19937_64& rng, double lmin, double lmax,
                                    double min_angle, double min_flatness) {
  for (;;) {
    LatticeParams p;
    for (auto& l : p.lengths) l = uniform(rng, lmin, lmax);
    for (auto& a : p.angles) a = uniform(rng, min_angle, std::numbers::pi - min_angle);
    if (!is_realizable(p, 0.0)) continue;
    const Mat3 l = params_to_lattice(p);
    if (l.determinant() / (p.lengths[0] * p.lengths[1] * p.lengths[2]) < min_flatness) continue;
    return p;
  }
}

Mat3 random_lattice(std::mt19937_64& rng, double lmin, double lmax) {
  return random_rotation(rng()).matrix() * params_to_lattice(random_lattice_params(rng, lmin, lmax));
}

Material random_material(std::mt19937_64& rng, int max_atoms, int max_element) {
  const int n = uniform_int(rng, 1, max_atoms);
  const Mat3 l = random_lattice(rng);
  Coords f(3, n);
  std::vector<int> types(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    types[static_cast<std::size_t>(i)] = uniform_int(rng, 1, max_element);
    for (int r = 0; r < 3; ++r) f(r, i) = uniform(rng, 0.0, 1.0);
  }
  return Material::from_fractional(std::move(types), f, l);
}

Parameters randomized_parameters(const Backbone& net, std::uint64_t seed, double scale) {
  Parameters p = net.init(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (Eigen::Index i = 0; i < p.values().size(); ++i) p.values()(i) = uniform(rng, -scale, scale);
  return p;
}

EdgeScoreFn random_backbone_scores(std::uint64_t seed) {
  BackboneConfig c;
  c.layer_count = 2;
  c.hidden_size = 8;
  c.rbf_count = 8;
  c.cutoff = 4.0;
  c.noise_level_count = 1;
  auto net = std::make_shared<Backbone>(c);
  auto params = std::make_shared<Parameters>(randomized_parameters(*net, seed));
  return [net, params](const MultiGraph& g, const std::vector<int>& types) {
    return edge_scores(*net, *params, g, types, 1).values;
  };
}

CheckResult check_assembled_invariance(const EdgeScoreFn& scores, double cutoff, int count,
                                       std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"assembled-score invariance", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  double w_perm = 0, w_rot = 0, w_trans = 0, w_per = 0;
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng);
    const Coords s0 = assembled(scores, m, cutoff);

    const Permutation sigma = Permutation::random(m.size(), rng());
    const Coords sp = assembled(scores, apply_permutation(m, sigma), cutoff);
    for (int i = 0; i < m.size(); ++i) {
      w_perm = std::max(w_perm, (sp.col(i) - s0.col(sigma.order()[static_cast<std::size_t>(i)])).lpNorm<Eigen::Infinity>());
    }

    const Rotation q = random_orthogonal(rng);
    const Vec3 b(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    const Coords sr = assembled(scores, apply_rotation_translation(m, q, b), cutoff);
    w_rot = std::max(w_rot, (sr - q.matrix() * s0).lpNorm<Eigen::Infinity>());

    const Coords st = assembled(scores, apply_rotation_translation(m, Rotation(Mat3::Identity()), b), cutoff);
    w_trans = std::max(w_trans, (st - s0).lpNorm<Eigen::Infinity>());

    const Coords sk = assembled(scores, apply_periodic(m, random_shift(rng, m.size())), cutoff);
    w_per = std::max(w_per, (sk - s0).lpNorm<Eigen::Infinity>());
  }
  r.worst = std::max({w_perm, w_rot, w_trans, w_per});
  r.pass = r.worst <= tolerance;
  std::ostringstream d;
  d << std::setprecision(3) << "perm " << w_perm << ", rot " << w_rot << ", trans " << w_trans
    << ", periodic " << w_per;
  r.detail = d.str();
  return finish(r, t0);
}

CheckResult check_multigraph_oracle(int count, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"multigraph vs brute force", true, 0.0, 0.0, 0.0, ""};
  std::mt19937_64 rng(seed);
  const double cutoff = 3.5;
  const int kmax = 5;
  long mismatches = 0;
  double worst_d = 0.0;
  long edges_seen = 0;
  for (int c = 0; c < count; ++c) {
    const int n = uniform_int(rng, 1, 6);
    const Mat3 l = random_rotation(rng()).matrix() *
                   params_to_lattice(random_lattice_params(rng, 3.0, 6.0, 1.0, 0.5));
    Coords f(3, n);
    std::vector<int> types(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) f(a, i) = uniform(rng, -1.0, 2.0);
    }
    const Material m = Material::from_fractional(types, f, l);
    const MultiGraph g = build_multigraph(m, cutoff);
    const std::vector<Edge> ref = brute_force_edges(m, cutoff, kmax);
    for (const Edge& e : ref) {
      if (e.k.cwiseAbs().maxCoeff() == kmax) {
        r.pass = false;
        r.detail = "oracle image range too small";
      }
    }
    edges_seen += static_cast<long>(ref.size());
    if (ref.size() != g.edge_count()) {
      mismatches += std::labs(static_cast<long>(ref.size()) - static_cast<long>(g.edge_count()));
      continue;
    }
    for (std::size_t e = 0; e < ref.size(); ++e) {
      if (key(ref[e]) != key(g.edges()[e])) {
        ++mismatches;
      } else {
        worst_d = std::max(worst_d, std::abs(ref[e].d - g.edges()[e].d));
      }
    }
  }
  r.worst = static_cast<double>(mismatches);
  r.pass = r.pass && mismatches == 0 && worst_d < 1e-9;
  std::ostringstream d;
  d << std::setprecision(3) << mismatches << " edge mismatches over " << edges_seen
    << " edges, max distance diff " << worst_d;
  if (r.detail.empty()) r.detail = d.str();
  return finish(r, t0);
}

CheckResult check_distance_invariance(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"edge-distance multiset invariance", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  const double cutoff = 4.0;
  long size_mismatch = 0;
  auto compare = [&](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
      ++size_mismatch;
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i) r.worst = std::max(r.worst, std::abs(a[i] - b[i]));
  };
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng, 8);
    const auto d0 = distance_multiset(build_multigraph(m, cutoff));
    const Vec3 b(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    compare(d0, distance_multiset(build_multigraph(
                    apply_permutation(m, Permutation::random(m.size(), rng())), cutoff)));
    compare(d0, distance_multiset(build_multigraph(
                    apply_rotation_translation(m, random_orthogonal(rng), b), cutoff)));
    compare(d0, distance_multiset(build_multigraph(
                    apply_rotation_translation(m, Rotation(Mat3::Identity()), b), cutoff)));
    compare(d0, distance_multiset(build_multigraph(apply_periodic(m, random_shift(rng, m.size())), cutoff)));
  }
  r.pass = size_mismatch == 0 && r.worst <= tolerance;
  std::ostringstream d;
  d << size_mismatch << " multiset size mismatches";
  r.detail = d.str();
  return finish(r, t0);
}

CheckResult check_unit_vector_gradient(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"edge unit vector vs finite-difference gradient", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  const double h = 1e-6;
  long edges = 0;
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng, 6);
    const MultiGraph g = build_multigraph(m, 4.0);
    for (const Edge& e : g.edges()) {
      const Vec3 target = m.lattice() * e.k.cast<double>() - m.coords().col(e.j);
      Vec3 fd;
      for (int a = 0; a < 3; ++a) {
        Vec3 plus = m.coords().col(e.i), minus = m.coords().col(e.i);
        plus(a) += h;
        minus(a) -= h;
        fd(a) = ((plus + target).norm() - (minus + target).norm()) / (2 * h);
      }
      r.worst = std::max(r.worst, (fd - e.u).norm() / e.u.norm());
      ++edges;
    }
  }
  r.pass = r.worst < tolerance && edges > 0;
  r.detail = std::to_string(edges) + " edges";
  return finish(r, t0);
}

CheckResult check_backbone_gradients(std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"backbone parameter gradients", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  Coords frac(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) frac(a, i) = uniform(rng, 0.0, 1.0);
  }
  const Material m = Material::from_fractional(
      {1, 3, 6}, frac, params_to_lattice(random_lattice_params(rng, 2.8, 3.6)));
  long parameters = 0;
  std::size_t edges = 0;
  // Score head with level embeddings, then the pooled encoder head.
  for (const bool pool : {false, true}) {
    BackboneConfig c;
    c.layer_count = 2;
    c.hidden_size = 4;
    c.rbf_count = 4;
    c.cutoff = 3.5;
    c.noise_level_count = pool ? 0 : 2;
    c.latent_a_dim = 3;
    c.latent_l_dim = 2;
    c.max_element = 6;
    c.edge_head = !pool;
    c.pool_head = pool;
    const Backbone net(c);
    Parameters p = randomized_parameters(net, rng());
    const MultiGraph g = build_multigraph(m, c.cutoff);
    const GraphFeatures f = net.features(g, m.atom_types());
    edges = g.edge_count();
    const Eigen::MatrixXd we = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(edges), 1);
    const Eigen::MatrixXd wa = Eigen::MatrixXd::Random(1, c.latent_a_dim);
    const Eigen::MatrixXd wl = Eigen::MatrixXd::Random(1, c.latent_l_dim);

    auto loss = [&](const Parameters& params, Eigen::VectorXd* grad) {
      ad::Tape t(&params);
      ad::Var l;
      if (pool) {
        auto [za, zl] = net.encode(t, f);
        l = t.add(t.sum(t.mul(za, t.constant(wa))), t.sum(t.mul(zl, t.constant(wl))));
      } else {
        l = t.sum(t.mul(net.edge_scores(t, f, 2), t.constant(we)));
      }
      if (grad) {
        t.backward(l);
        *grad = t.parameter_gradient();
      }
      return t.scalar(l);
    };
    Eigen::VectorXd analytic;
    loss(p, &analytic);
    Eigen::VectorXd numeric(analytic.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      const double keep = p.values()(i);
      p.values()(i) = keep + h;
      const double lp = loss(p, nullptr);
      p.values()(i) = keep - h;
      const double lm = loss(p, nullptr);
      p.values()(i) = keep;
      numeric(i) = (lp - lm) / (2 * h);
    }
    const double scale = std::max(analytic.norm(), numeric.norm());
    r.worst = std::max(r.worst, scale > 0 ? (analytic - numeric).norm() / scale : 0.0);
    parameters += numeric.size();
  }
  r.pass = r.worst < tolerance && edges > 0;
  r.detail = std::to_string(parameters) + " parameters, " + std::to_string(edges) + " edges";
  return finish(r, t0);
}

CheckResult check_denoising_target(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"denoising target vs log-density derivative", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    const double sh = uniform(rng, 0.05, 2.0);
    const double dh = uniform(rng, 0.5, 6.0);
    const double sign = (rng() & 1u) ? 1.0 : -1.0;
    const double dt = dh + sign * sh * uniform(rng, 0.1, 3.0);
    auto logp = [&](double x) {
      return -0.5 * (x - dh) * (x - dh) / (sh * sh) - std::log(sh * std::sqrt(2 * std::numbers::pi));
    };
    const double h = 1e-5 * sh;
    const double fd = (logp(dt + h) - logp(dt - h)) / (2 * h);
    const double a = denoising_target(dt, dh, sh);
    r.worst = std::max(r.worst, std::abs(a - fd) / std::abs(a));
  }
  r.pass = r.worst < tolerance;
  return finish(r, t0);
}

CheckResult check_lattice_roundtrip(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"lattice params round trip (Gram)", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    const LatticeParams p = random_lattice_params(rng, 1.0, 10.0, 0.5, 0.05);
    const Mat3 l = random_rotation(rng()).matrix() * params_to_lattice(p);
    const Mat3 back = params_to_lattice(lattice_to_params(l));
    r.worst = std::max(r.worst, (gram(back) - gram(l)).cwiseAbs().maxCoeff());
  }
  r.pass = r.worst <= tolerance;
  return finish(r, t0);
}

CheckResult check_lattice_rotation_invariance(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"lattice params rotation invariance", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    const Mat3 l = random_lattice(rng, 1.0, 10.0);
    const LatticeParams a = lattice_to_params(l);
    const LatticeParams b = lattice_to_params(random_orthogonal(rng).matrix() * l);
    for (std::size_t i = 0; i < 3; ++i) {
      r.worst = std::max({r.worst, std::abs(a.lengths[i] - b.lengths[i]),
                          std::abs(a.angles[i] - b.angles[i])});
    }
  }
  r.pass = r.worst <= tolerance;
  return finish(r, t0);
}

CheckResult check_zero_sum(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"assembled scores sum to zero", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng);
    const MultiGraph g = build_multigraph(m, 4.0);
    const auto rev = g.reverse_index();
    Eigen::VectorXd s(static_cast<Eigen::Index>(g.edge_count()));
    for (std::size_t e = 0; e < rev.size(); ++e) {
      if (rev[e] < e) {
        s(static_cast<Eigen::Index>(e)) = s(static_cast<Eigen::Index>(rev[e]));
      } else {
        s(static_cast<Eigen::Index>(e)) = uniform(rng, -3.0, 3.0);
      }
    }
    const Coords total = assemble_coordinate_scores(g, s);
    r.worst = std::max(r.worst, total.rowwise().sum().lpNorm<Eigen::Infinity>());
  }
  r.pass = r.worst <= tolerance;
  return finish(r, t0);
}

CheckResult check_alignment_oracle(int count, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"alignment vs brute-force argmin", false, 0.0, 0.0, 0.0, ""};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  long mismatches = 0, atoms = 0;
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng, 8);
    const Mat3& l = m.lattice();
    const double sigma = uniform(rng, 0.05, 1.5);
    Coords pt = m.coords();
    for (int i = 0; i < m.size(); ++i) {
      IVec3 jump(uniform_int(rng, -1, 1), uniform_int(rng, -1, 1), uniform_int(rng, -1, 1));
      pt.col(i) += l * jump.cast<double>() + sigma * Vec3(z(rng), z(rng), z(rng));
    }
    ShiftMatrix fast;
    align(m.coords(), pt, l, &fast);
    const ShiftMatrix slow = brute_force_align(m.coords(), pt, l, 3);
    for (int i = 0; i < m.size(); ++i) {
      ++atoms;
      if (fast.col(i) != slow.col(i)) ++mismatches;
    }
  }
  r.worst = static_cast<double>(mismatches);
  r.pass = mismatches == 0;
  r.detail = std::to_string(mismatches) + " of " + std::to_string(atoms) + " offsets differ";
  return finish(r, t0);
}

CheckResult check_analytic_sampler(int chains, std::uint64_t seed, double d_star, double tau) {
  const auto t0 = Clock::now();
  CheckResult r{"analytic-score Langevin toy", false, 0.0, 0.05 * d_star, 0.0, ""};
  const double a = 10.0;
  const Mat3 lattice = a * Mat3::Identity();
  const SamplerConfig cfg;  // 10 -> 0.01 over 50 levels, epsilon 1e-4, q = 100
  ScoreSource src;
  src.cutoff = 4.5;
  src.edge_scores = [=](const MultiGraph& g, const std::vector<int>&, int) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(g.edge_count()));
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      s(static_cast<Eigen::Index>(e)) = -(g.edges()[e].d - d_star) / (tau * tau);
    }
    return s;
  };
  const double width = 0.05;
  const double max_d = a * std::sqrt(3.0) / 2.0 + width;
  std::vector<long> hist(static_cast<std::size_t>(max_d / width) + 2, 0);
  std::mt19937_64 rng(seed);
  long near = 0;
  for (int c = 0; c < chains; ++c) {
    const SamplerResult res = langevin_generate({1, 1}, lattice, cfg, src, rng);
    Vec3 diff = lattice.inverse() * (res.coords.col(0) - res.coords.col(1));
    for (int i = 0; i < 3; ++i) diff(i) -= std::round(diff(i));
    const double d = (lattice * diff).norm();
    if (std::abs(d - d_star) < 3 * tau) ++near;
    ++hist[static_cast<std::size_t>(std::lround(d / width))];
  }
  const auto mode_bin = std::max_element(hist.begin(), hist.end()) - hist.begin();
  const double mode = static_cast<double>(mode_bin) * width;
  r.worst = std::abs(mode - d_star);
  r.pass = r.worst <= r.tolerance;
  std::ostringstream d;
  d << "mode " << mode << ", " << near << "/" << chains << " chains within 3 tau";
  r.detail = d.str();
  return finish(r, t0);
}

CheckResult check_emd_oracle(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"emd_1d vs transport oracle", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    const bool ties = (c % 3) == 0;
    auto draw = [&] {
      std::vector<double> v(static_cast<std::size_t>(uniform_int(rng, 1, 10)));
      for (double& x : v) x = ties ? uniform_int(rng, 0, 4) : uniform(rng, -5.0, 5.0);
      return v;
    };
    const auto a = draw(), b = draw();
    r.worst = std::max(r.worst, std::abs(emd_1d(a, b) - transport_emd(a, b)));
  }
  r.pass = r.worst <= tolerance;
  return finish(r, t0);
}

CheckResult check_coverage_identity(int count, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"cov_metrics(X, X) = (1, 1)", false, 0.0, 0.0, 0.0, ""};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < count; ++c) {
    std::vector<Material> x;
    const int n = uniform_int(rng, 1, 6);
    for (int i = 0; i < n; ++i) x.push_back(random_material(rng, 6));
    const auto [cr, cp] = cov_metrics(x, x);
    r.worst = std::max({r.worst, 1.0 - cr, 1.0 - cp});
  }
  r.pass = r.worst == 0.0;
  return finish(r, t0);
}

CheckResult check_composition_oracle() {
  const auto t0 = Clock::now();
  CheckResult r{"composition validity vs enumeration", true, 0.0, 0.0, 0.0, ""};
  long bad = 0;
  for (const auto& cs : composition_cases()) {
    const auto fast = composition_validity(cs.atom_types);
    const auto slow = enumerate_oxidation_states(cs.atom_types);
    if (fast != slow || fast != cs.expected) {
      ++bad;
      r.detail += (r.detail.empty() ? "" : ", ") + cs.label;
    }
  }
  r.worst = static_cast<double>(bad);
  r.pass = bad == 0;
  if (r.detail.empty()) r.detail = std::to_string(composition_cases().size()) + " compositions";
  return finish(r, t0);
}

CheckResult check_encoder_invariance(int count, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"encoder latent invariance", false, 0.0, tolerance, 0.0, ""};
  VaeConfig vc;
  vc.encoder.layer_count = 2;
  vc.encoder.hidden_size = 8;
  vc.encoder.rbf_count = 8;
  vc.encoder.cutoff = 4.0;
  vc.encoder.latent_a_dim = 6;
  vc.encoder.latent_l_dim = 6;
  vc.latent_a_dim = 4;
  vc.latent_l_dim = 3;
  vc.decoder_hidden = 8;
  vc.element_embed_dim = 4;
  const TypeLatticeVae vae(vc);
  Parameters p = vae.init(seed);
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < p.values().size(); ++i) p.values()(i) = uniform(rng, -0.5, 0.5);
  auto latent = [&](const Material& m) {
    std::mt19937_64 unused(0);
    const LatentState s = encode_vae(vae, p, m, unused).state;
    Eigen::VectorXd v(s.mu_a.size() + s.logvar_a.size() + s.mu_l.size() + s.logvar_l.size());
    v << s.mu_a, s.logvar_a, s.mu_l, s.logvar_l;
    return v;
  };
  for (int c = 0; c < count; ++c) {
    const Material m = random_material(rng, 8);
    const Eigen::VectorXd z0 = latent(m);
    const Vec3 b(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    for (const Material& t :
         {apply_permutation(m, Permutation::random(m.size(), rng())),
          apply_rotation_translation(m, random_orthogonal(rng), b),
          apply_rotation_translation(m, Rotation(Mat3::Identity()), b),
          apply_periodic(m, random_shift(rng, m.size()))}) {
      r.worst = std::max(r.worst, (latent(t) - z0).lpNorm<Eigen::Infinity>());
    }
  }
  r.pass = r.worst <= tolerance;
  return finish(r, t0);
}

CheckResult check_sampler_equivariance(std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  CheckResult r{"sampler rotation equivariance", false, 0.0, tolerance, 0.0, ""};
  std::mt19937_64 rng(seed);
  const EdgeScoreFn net = random_backbone_scores(rng());
  ScoreSource src;
  src.cutoff = 4.0;
  src.edge_scores = [&](const MultiGraph& g, const std::vector<int>& types, int) { return net(g, types); };
  SamplerConfig cfg;
  cfg.schedule = NoiseSchedule::geometric(1.0, 0.1, 3);
  cfg.steps_per_level = 5;
  cfg.epsilon = 1e-3;
  const Mat3 l = random_lattice(rng, 3.0, 5.0);
  const Mat3 q = random_rotation(rng()).matrix();
  const int n = 4;
  std::vector<int> types{1, 2, 3, 4};

  Coords f0(3, n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) f0(a, i) = uniform(rng, 0.0, 1.0);
  }
  std::vector<Coords> draws;
  std::normal_distribution<double> z(0.0, 1.0);
  for (int s = 0; s < cfg.schedule.size() * cfg.steps_per_level; ++s) {
    Coords d(3, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) d(a, i) = z(rng);
    }
    draws.push_back(d);
  }
  auto streams = [&](const Mat3& rot) {
    auto counter = std::make_shared<std::size_t>(0);
    SamplerStreams s;
    s.initial_fractional = [&f0](int) { return f0; };
    s.gaussian = [&draws, rot, counter](int) { return Coords(rot * draws.at((*counter)++)); };
    return s;
  };
  const SamplerResult a = langevin_generate(types, l, cfg, src, streams(Mat3::Identity()), true);
  const SamplerResult b = langevin_generate(types, q * l, cfg, src, streams(q), true);
  const Mat3 li = l.inverse(), qli = (q * l).inverse();
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    Coords diff = li * a.trajectory[t] - qli * b.trajectory[t];
    for (Eigen::Index i = 0; i < diff.size(); ++i) diff(i) -= std::round(diff(i));
    r.worst = std::max(r.worst, (l * diff).lpNorm<Eigen::Infinity>());
  }
  r.pass = r.worst <= tolerance && !a.trajectory.empty();
  r.detail = std::to_string(a.trajectory.size()) + " levels compared";
  return finish(r, t0);
}

std::vector<CheckResult> run_all(std::uint64_t seed, const EdgeScoreFn& scores, double cutoff) {
  std::vector<CheckResult> out;
  const EdgeScoreFn s = scores ? scores : random_backbone_scores(seed + 1);
  out.push_back(check_assembled_invariance(s, cutoff, 100, seed + 2));
  out.push_back(check_multigraph_oracle(200, seed + 3));
  out.push_back(check_distance_invariance(100, seed + 4));
  out.push_back(check_unit_vector_gradient(50, seed + 5));
  out.push_back(check_backbone_gradients(seed + 6));
  out.push_back(check_denoising_target(1000, seed + 7));
  out.push_back(check_lattice_roundtrip(1000, seed + 8));
  out.push_back(check_lattice_rotation_invariance(1000, seed + 9));
  out.push_back(check_zero_sum(100, seed + 10));
  out.push_back(check_alignment_oracle(100, seed + 11));
  out.push_back(check_analytic_sampler(500, seed + 12));
  out.push_back(check_emd_oracle(1000, seed + 13));
  out.push_back(check_coverage_identity(20, seed + 14));
  out.push_back(check_composition_oracle());
  out.push_back(check_encoder_invariance(50, seed + 15));
  out.push_back(check_sampler_equivariance(seed + 16));
  return out;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream s;
  s << (r.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(48) << r.name << std::right
    << " worst=" << std::setprecision(3) << std::scientific << r.worst << " tol=" << r.tolerance
    << std::defaultfloat << std::fixed << std::setprecision(2) << " (" << r.seconds << " s)";
  if (!r.detail.empty()) s << "  " << r.detail;
  return s.str();
}

}  // namespace xtal::verify
