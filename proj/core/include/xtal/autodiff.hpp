#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xtal/parameters.hpp"

namespace xtal::ad {

using Matrix = Eigen::MatrixXd;

struct Var {
  int id = -1;
};

/// Reverse-mode differentiation over dense matrices. Every operation records
/// its value eagerly; backward() replays the records in reverse. Parameter
/// leaves are bound to segments of a Parameters object and their gradients
/// are gathered into a flat vector with the same layout.
class Tape {
 public:
  explicit Tape(const Parameters* params = nullptr) : params_(params) {}

  Var constant(Matrix value);
  /// Differentiable leaf not tied to a parameter segment.
  Var variable(Matrix value);
  /// Leaf bound to parameter segment `name` (cached per tape).
  Var param(const std::string& name);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  /// Gradient of the last backward() target with respect to v.
  Matrix grad(Var v) const;

  void backward(Var loss);
  /// Adds d(loss)/d(theta) into `out` (sized like the bound Parameters).
  void accumulate_parameter_gradient(Eigen::VectorXd& out, double scale = 1.0) const;
  Eigen::VectorXd parameter_gradient() const;

  std::size_t node_count() const { return nodes_.size(); }

  // Elementwise and linear algebra.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var add_row(Var a, Var row);  // row is 1 x cols, broadcast over rows
  Var mul_col(Var a, Var col);  // col is rows x 1, broadcast over columns
  Var square(Var a);
  Var exp(Var a);
  Var silu(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);

  // Structural.
  Var gather_rows(Var a, std::span<const int> rows);
  Var scatter_add_rows(Var a, std::span<const int> rows, int out_rows);
  Var sum_rows(Var a);  // 1 x cols
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int start, int count);
  Var sum(Var a);
  Var mean(Var a);

  // Losses, each returning a 1 x 1 value.
  /// Mean over rows of -log softmax(logits)[target].
  Var softmax_cross_entropy(Var logits, std::span<const int> targets);
  /// Mean over entries of the binary cross-entropy of sigmoid(logits).
  Var bce_with_logits(Var logits, const Matrix& targets);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> backward;
    int param_index = -1;
  };

  Var push(Matrix value, std::function<void(Tape&, int)> backward = {});
  Matrix& grad_ref(int id);
  const Matrix& out_grad(int id) const { return nodes_[id].grad; }

  const Parameters* params_;
  std::vector<Node> nodes_;
  std::vector<std::pair<int, const Segment*>> param_nodes_;
  std::unordered_map<std::string, int> param_cache_;
};

}  // namespace xtal::ad
