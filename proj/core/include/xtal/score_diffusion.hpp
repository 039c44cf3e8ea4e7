#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xtal/backbone.hpp"
#include "xtal/crystal.hpp"
#include "xtal/optim.hpp"
#include "xtal/periodic_graph.hpp"

namespace xtal {

/// Coordinate noise levels sigma_1 > sigma_2 > ... > sigma_T > 0.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> sigmas);
  /// Geometric sequence from `first` down to `last` with `count` entries.
  static NoiseSchedule geometric(double first, double last, int count);

  const std::vector<double>& sigmas() const { return sigmas_; }
  int size() const { return static_cast<int>(sigmas_.size()); }
  /// 1-based level access.
  double sigma(int level) const { return sigmas_.at(static_cast<std::size_t>(level - 1)); }

 private:
  std::vector<double> sigmas_;
};

/// Empirical per-level standard deviation of noisy edge distances.
struct EdgeStd {
  std::vector<double> sigma_hats;
  double at(int level) const { return sigma_hats.at(static_cast<std::size_t>(level - 1)); }
};

enum class ScoreMatchingMode { Distance, Coordinate };

std::string to_string(ScoreMatchingMode mode);
ScoreMatchingMode parse_score_matching_mode(const std::string& s);

Material perturb(const Material& m, double sigma, std::mt19937_64& rng);

/// Each column p_i + L u with u the integer offset bringing p_i closest to
/// p_tilde_i. The optimum is searched over the 27 offsets around the rounded
/// fractional difference.
Coords align(const Coords& p, const Coords& p_tilde, const Mat3& lattice,
             ShiftMatrix* offsets = nullptr);

/// Distances of the noisy-graph edges evaluated on the aligned clean coordinates.
std::vector<double> reference_distances(const MultiGraph& noisy_graph, const Coords& aligned,
                                        const Mat3& lattice);

EdgeStd estimate_edge_std(const std::vector<Material>& dataset, const NoiseSchedule& schedule,
                          double cutoff, std::mt19937_64& rng);

/// Score of N(d_hat, sigma_hat^2) at d_tilde.
double denoising_target(double d_tilde, double d_hat, double sigma_hat);

/// Chain-rule assembly: column i is the sum over edges (i, j, k) of
/// score(i, j, k) * (p_i + L k - p_j) / d.
Coords assemble_coordinate_scores(const MultiGraph& g, const Eigen::VectorXd& per_edge);

/// (sigma_hat^2 / 2) * mean over edges of (o / sigma_hat + (d_tilde - d_hat)/sigma_hat^2)^2.
double dsm_loss(const Eigen::VectorXd& outputs, const std::vector<double>& d_tilde,
                const std::vector<double>& d_hat, double sigma_hat);

/// (sigma^2 / 2) * sum over atoms of |s_i / sigma + (p_tilde_i - p_hat_i) / sigma^2|^2,
/// where s holds the assembled per-edge outputs.
double coordinate_dsm_loss(const Coords& assembled, const Coords& p_tilde, const Coords& p_hat,
                           double sigma);

/// The coordinate score network with its noise bookkeeping.
struct ScoreModel {
  Backbone net;
  NoiseSchedule schedule;
  EdgeStd edge_std;
  ScoreMatchingMode mode = ScoreMatchingMode::Distance;
  double cutoff = 6.0;

  /// Factor turning raw network output into a distance score at `level`:
  /// 1/sigma_hat_t in distance mode, 1/sigma_t in coordinate mode.
  double output_scale(int level) const;
};

/// Denoising loss of one clean material at one level; nullopt when the noisy
/// material has no edges.
std::optional<ad::Var> dsm_example_loss(ad::Tape& tape, const ScoreModel& model,
                                        const Material& clean, int level, std::mt19937_64& rng);

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 128;
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct LossCurve {
  std::vector<std::string> columns;      // term names
  std::vector<std::vector<double>> rows; // one per epoch, aligned with columns

  void write_csv(const std::string& path) const;
  const std::vector<double>& first() const { return rows.front(); }
  const std::vector<double>& last() const { return rows.back(); }
};

struct ScoreTrainResult {
  Parameters params;
  LossCurve curve;  // epoch-averaged DSM loss
};

ScoreTrainResult train_score_model(const std::vector<Material>& dataset, const TrainConfig& config,
                                   const ScoreModel& model, Parameters init);

}  // namespace xtal
