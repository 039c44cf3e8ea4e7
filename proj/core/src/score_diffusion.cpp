#include "xtal/score_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "xtal/error.hpp"

namespace xtal {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.empty()) throw InvalidArgument("noise schedule needs at least one level");
  for (std::size_t t = 0; t < sigmas_.size(); ++t) {
    if (!(sigmas_[t] > 0.0) || !std::isfinite(sigmas_[t])) {
      throw InvalidArgument("noise level " + std::to_string(t + 1) + " is not positive");
    }
    if (t > 0 && !(sigmas_[t] < sigmas_[t - 1])) {
      throw InvalidArgument("noise schedule must be strictly decreasing at level " +
                            std::to_string(t + 1));
    }
  }
}

NoiseSchedule NoiseSchedule::geometric(double first, double last, int count) {
  if (count < 1) throw InvalidArgument("noise schedule needs at least one level");
  if (!(first > 0.0) || !(last > 0.0)) throw InvalidArgument("noise levels must be positive");
  if (count == 1) return NoiseSchedule({first});
  std::vector<double> s(static_cast<std::size_t>(count));
  const double ratio = std::log(last / first) / (count - 1);
  for (int t = 0; t < count; ++t) s[static_cast<std::size_t>(t)] = first * std::exp(ratio * t);
  s.front() = first;
  s.back() = last;
  return NoiseSchedule(std::move(s));
}

std::string to_string(ScoreMatchingMode mode) {
  return mode == ScoreMatchingMode::Distance ? "distance" : "coordinate";
}

ScoreMatchingMode parse_score_matching_mode(const std::string& s) {
  if (s == "distance") return ScoreMatchingMode::Distance;
  if (s == "coordinate") return ScoreMatchingMode::Coordinate;
  throw InvalidArgument("unknown score_matching_mode '" + s + "' (expected distance|coordinate)");
}

Material perturb(const Material& m, double sigma, std::mt19937_64& rng) {
  if (!(sigma > 0.0)) throw InvalidArgument("perturb: sigma must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords p = m.coords();
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    for (int r = 0; r < 3; ++r) p(r, c) += sigma * normal(rng);
  }
  return Material(m.atom_types(), std::move(p), m.lattice());
}

Coords align(const Coords& p, const Coords& p_tilde, const Mat3& lattice, ShiftMatrix* offsets) {
  if (p.cols() != p_tilde.cols()) throw ShapeMismatch("align: coordinate counts differ");
  if (std::abs(lattice.determinant()) < kMinCellVolume) {
    throw InvalidLattice("align: singular lattice");
  }
  const Mat3 inv = lattice.inverse();
  Coords out(3, p.cols());
  if (offsets) offsets->resize(3, p.cols());
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const Vec3 f = inv * (p_tilde.col(i) - p.col(i));
    const IVec3 r(static_cast<int>(std::lround(f(0))), static_cast<int>(std::lround(f(1))),
                  static_cast<int>(std::lround(f(2))));
    IVec3 best = r;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        for (int c = -1; c <= 1; ++c) {
          const IVec3 v = r + IVec3(a, b, c);
          const double d2 =
              (p.col(i) + lattice * v.cast<double>() - p_tilde.col(i)).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = v;
          }
        }
      }
    }
    out.col(i) = p.col(i) + lattice * best.cast<double>();
    if (offsets) offsets->col(i) = best;
  }
  return out;
}

std::vector<double> reference_distances(const MultiGraph& g, const Coords& aligned,
                                        const Mat3& lattice) {
  if (aligned.cols() != g.node_count()) {
    throw ShapeMismatch("reference_distances: coordinate count differs from graph");
  }
  std::vector<double> d;
  d.reserve(g.edge_count());
  for (const Edge& e : g.edges()) {
    d.push_back((aligned.col(e.i) + lattice * e.k.cast<double>() - aligned.col(e.j)).norm());
  }
  return d;
}

namespace {

struct NoisyPair {
  MultiGraph graph;
  std::vector<double> d_tilde;
  std::vector<double> d_hat;
  Material noisy;
  Coords aligned;
};

NoisyPair make_pair(const Material& clean, double sigma, double cutoff, std::mt19937_64& rng) {
  Material noisy = perturb(clean, sigma, rng);
  MultiGraph g = build_multigraph(noisy, cutoff);
  Coords aligned = align(clean.coords(), noisy.coords(), clean.lattice());
  std::vector<double> d_hat = reference_distances(g, aligned, clean.lattice());
  std::vector<double> d_tilde;
  d_tilde.reserve(g.edge_count());
  for (const Edge& e : g.edges()) d_tilde.push_back(e.d);
  return NoisyPair{std::move(g), std::move(d_tilde), std::move(d_hat), std::move(noisy),
                   std::move(aligned)};
}

}  // namespace

EdgeStd estimate_edge_std(const std::vector<Material>& dataset, const NoiseSchedule& schedule,
                          double cutoff, std::mt19937_64& rng) {
  if (dataset.empty()) throw InvalidArgument("estimate_edge_std: empty dataset");
  EdgeStd out;
  for (int t = 1; t <= schedule.size(); ++t) {
    std::vector<double> residuals;
    for (const Material& m : dataset) {
      const NoisyPair pair = make_pair(m, schedule.sigma(t), cutoff, rng);
      for (std::size_t e = 0; e < pair.d_tilde.size(); ++e) {
        residuals.push_back(pair.d_tilde[e] - pair.d_hat[e]);
      }
    }
    if (residuals.empty()) {
      throw InvalidArgument("estimate_edge_std: no edges at noise level " + std::to_string(t));
    }
    const double n = static_cast<double>(residuals.size());
    const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : residuals) ss += (r - mean) * (r - mean);
    double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) sd = std::numeric_limits<double>::min();
    out.sigma_hats.push_back(sd);
  }
  return out;
}

double denoising_target(double d_tilde, double d_hat, double sigma_hat) {
  if (!(sigma_hat > 0.0)) throw InvalidArgument("denoising_target: sigma_hat must be positive");
  return -(d_tilde - d_hat) / (sigma_hat * sigma_hat);
}

Coords assemble_coordinate_scores(const MultiGraph& g, const Eigen::VectorXd& per_edge) {
  if (static_cast<std::size_t>(per_edge.size()) != g.edge_count()) {
    throw ShapeMismatch("assemble_coordinate_scores: " + std::to_string(per_edge.size()) +
                        " scores for " + std::to_string(g.edge_count()) + " edges");
  }
  Coords s = Coords::Zero(3, g.node_count());
  const auto& edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    s.col(edges[e].i) += per_edge(static_cast<Eigen::Index>(e)) * edges[e].u;
  }
  return s;
}

double dsm_loss(const Eigen::VectorXd& outputs, const std::vector<double>& d_tilde,
                const std::vector<double>& d_hat, double sigma_hat) {
  const std::size_t n = static_cast<std::size_t>(outputs.size());
  if (d_tilde.size() != n || d_hat.size() != n) {
    throw ShapeMismatch("dsm_loss: outputs and target distances differ in length");
  }
  if (!(sigma_hat > 0.0)) throw InvalidArgument("dsm_loss: sigma_hat must be positive");
  if (n == 0) return 0.0;
  double acc = 0.0;
  const double s2 = sigma_hat * sigma_hat;
  for (std::size_t e = 0; e < n; ++e) {
    const double r = outputs(static_cast<Eigen::Index>(e)) / sigma_hat + (d_tilde[e] - d_hat[e]) / s2;
    acc += r * r;
  }
  return 0.5 * s2 * acc / static_cast<double>(n);
}

double coordinate_dsm_loss(const Coords& assembled, const Coords& p_tilde, const Coords& p_hat,
                           double sigma) {
  if (assembled.cols() != p_tilde.cols() || assembled.cols() != p_hat.cols()) {
    throw ShapeMismatch("coordinate_dsm_loss: coordinate counts differ");
  }
  if (!(sigma > 0.0)) throw InvalidArgument("coordinate_dsm_loss: sigma must be positive");
  const double s2 = sigma * sigma;
  const Coords r = assembled / sigma + (p_tilde - p_hat) / s2;
  return 0.5 * s2 * r.squaredNorm();
}

double ScoreModel::output_scale(int level) const {
  return mode == ScoreMatchingMode::Distance ? 1.0 / edge_std.at(level)
                                             : 1.0 / schedule.sigma(level);
}

std::optional<ad::Var> dsm_example_loss(ad::Tape& tape, const ScoreModel& model,
                                        const Material& clean, int level, std::mt19937_64& rng) {
  const double sigma = model.schedule.sigma(level);
  const NoisyPair pair = make_pair(clean, sigma, model.cutoff, rng);
  if (pair.graph.empty()) return std::nullopt;
  const GraphFeatures f = model.net.features(pair.graph, clean.atom_types());
  const ad::Var o = model.net.edge_scores(tape, f, level);
  const Eigen::Index e_count = static_cast<Eigen::Index>(pair.graph.edge_count());

  if (model.mode == ScoreMatchingMode::Distance) {
    // (s^2/2) mean (o/s + r/s^2)^2 == (1/2) mean (o + r/s)^2
    const double sh = model.edge_std.at(level);
    ad::Matrix c(e_count, 1);
    for (Eigen::Index e = 0; e < e_count; ++e) {
      c(e, 0) = (pair.d_tilde[static_cast<std::size_t>(e)] - pair.d_hat[static_cast<std::size_t>(e)]) / sh;
    }
    const ad::Var diff = tape.add(o, tape.constant(std::move(c)));
    return tape.scale(tape.mean(tape.square(diff)), 0.5);
  }

  // Coordinate mode: rows are atoms, columns are x, y, z.
  ad::Matrix u(e_count, 3);
  std::vector<int> src(static_cast<std::size_t>(e_count));
  for (Eigen::Index e = 0; e < e_count; ++e) {
    const Edge& edge = pair.graph.edges()[static_cast<std::size_t>(e)];
    u.row(e) = edge.u.transpose();
    src[static_cast<std::size_t>(e)] = edge.i;
  }
  const ad::Var contrib = tape.mul_col(tape.constant(std::move(u)), o);
  const ad::Var s = tape.scatter_add_rows(contrib, src, clean.size());
  const ad::Matrix target = ((pair.noisy.coords() - pair.aligned) / sigma).transpose();
  const ad::Var diff = tape.add(s, tape.constant(target));
  return tape.scale(tape.sum(tape.square(diff)), 0.5);
}

void LossCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss curve to " + path);
  out << "epoch";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << r + 1;
    for (double v : rows[r]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing loss curve to " + path);
}

ScoreTrainResult train_score_model(const std::vector<Material>& dataset,
                                   const TrainConfig& config, const ScoreModel& model,
                                   Parameters init) {
  if (dataset.empty()) throw InvalidArgument("train_score_model: empty dataset");
  if (config.batch_size < 1) throw InvalidArgument("train_score_model: batch_size must be >= 1");
  if (static_cast<int>(model.edge_std.sigma_hats.size()) != model.schedule.size()) {
    throw InvalidArgument("train_score_model: edge std has " +
                          std::to_string(model.edge_std.sigma_hats.size()) +
                          " levels, schedule has " + std::to_string(model.schedule.size()));
  }
  ScoreTrainResult result{std::move(init), LossCurve{{"dsm"}, {}}};
  Parameters& params = result.params;
  Adam adam(config.adam);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> level_dist(1, model.schedule.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
      std::size_t used = 0;
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const int level = level_dist(rng);
        ad::Tape tape(&params);
        const auto loss = dsm_example_loss(tape, model, dataset[order[b]], level, rng);
        if (!loss) continue;
        const double value = tape.scalar(*loss);
        if (!std::isfinite(value)) {
          throw DivergenceError("non-finite DSM loss at epoch " + std::to_string(epoch) +
                                ", material " + std::to_string(order[b]) + ", level " +
                                std::to_string(level));
        }
        tape.backward(*loss);
        tape.accumulate_parameter_gradient(grad);
        batch_loss += value;
        ++used;
      }
      if (used == 0) continue;
      grad /= static_cast<double>(used);
      try {
        adam.step(params.values(), std::move(grad));
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                              ", batch starting at " + std::to_string(start) + ")");
      }
      epoch_loss += batch_loss;
      epoch_count += used;
    }
    const double mean = epoch_count ? epoch_loss / static_cast<double>(epoch_count) : 0.0;
    result.curve.rows.push_back({mean});
  }
  return result;
}

}  // namespace xtal
