#include "xtal/optim.hpp"

#include <cmath>

#include "xtal/error.hpp"

namespace xtal {

double Adam::step(Eigen::VectorXd& theta, Eigen::VectorXd grad) {
  if (grad.size() != theta.size()) throw ShapeMismatch("gradient length does not match parameters");
  const double norm = grad.norm();
  if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient norm");
  if (config_.clip_norm > 0.0 && norm > config_.clip_norm) grad *= config_.clip_norm / norm;
  if (m_.size() != theta.size()) {
    m_ = Eigen::VectorXd::Zero(theta.size());
    v_ = Eigen::VectorXd::Zero(theta.size());
  }
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  theta.array() -= config_.learning_rate * (m_.array() / c1) /
                   ((v_.array() / c2).sqrt() + config_.epsilon);
  return norm;
}

}  // namespace xtal
