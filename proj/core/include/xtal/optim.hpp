#pragma once

#include <Eigen/Dense>

namespace xtal {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; values <= 0 disable clipping.
  double clip_norm = 10.0;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One descent step on `theta` (in place). Returns the pre-clip gradient norm.
  double step(Eigen::VectorXd& theta, Eigen::VectorXd grad);

  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace xtal
