#include "xtal/autodiff.hpp"

#include <cmath>

#include "xtal/error.hpp"

namespace xtal::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + ": operand shapes differ");
  }
}

double sigmoid_of(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_of(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, int)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward), -1});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::variable(Matrix value) { return push(std::move(value)); }

Var Tape::param(const std::string& name) {
  if (!params_) throw InvalidArgument("tape has no bound parameters");
  if (auto it = param_cache_.find(name); it != param_cache_.end()) return Var{it->second};
  const Segment& seg = params_->segment(name);
  Var v = push(params_->view(name));
  nodes_[v.id].param_index = static_cast<int>(param_nodes_.size());
  param_nodes_.emplace_back(v.id, &seg);
  param_cache_[name] = v.id;
  return v;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) throw ShapeMismatch("backward target must be a scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id);
  }
}

void Tape::accumulate_parameter_gradient(Eigen::VectorXd& out, double scale) const {
  if (!params_) return;
  if (out.size() != static_cast<Eigen::Index>(params_->size())) {
    throw ShapeMismatch("parameter gradient buffer has the wrong length");
  }
  for (const auto& [id, seg] : param_nodes_) {
    const Matrix& g = nodes_[id].grad;
    if (g.size() == 0) continue;
    out.segment(static_cast<Eigen::Index>(seg->offset), g.size()) +=
        scale * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
  }
}

Eigen::VectorXd Tape::parameter_gradient() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params_ ? static_cast<Eigen::Index>(params_->size()) : 0);
  accumulate_parameter_gradient(g);
  return g;
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw ShapeMismatch("matmul: inner dimensions differ");
  return push(value(a) * value(b), [a, b](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    t.grad_ref(a.id).noalias() += g * t.value(b).transpose();
    t.grad_ref(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), [a, b](Tape& t, int id) {
    t.grad_ref(a.id) += t.out_grad(id);
    t.grad_ref(b.id) += t.out_grad(id);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), [a, b](Tape& t, int id) {
    t.grad_ref(a.id) += t.out_grad(id);
    t.grad_ref(b.id) -= t.out_grad(id);
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    t.grad_ref(a.id) += g.cwiseProduct(t.value(b));
    t.grad_ref(b.id) += g.cwiseProduct(t.value(a));
  });
}

Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, int id) { t.grad_ref(a.id) += s * t.out_grad(id); });
}

Var Tape::add_scalar(Var a, double s) {
  return push(value(a).array() + s, [a](Tape& t, int id) { t.grad_ref(a.id) += t.out_grad(id); });
}

Var Tape::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw ShapeMismatch("add_row: row vector does not match column count");
  }
  Matrix out = value(a);
  out.rowwise() += value(row).row(0);
  return push(std::move(out), [a, row](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    t.grad_ref(a.id) += g;
    t.grad_ref(row.id) += g.colwise().sum();
  });
}

Var Tape::mul_col(Var a, Var col) {
  if (value(col).cols() != 1 || value(col).rows() != value(a).rows()) {
    throw ShapeMismatch("mul_col: column vector does not match row count");
  }
  Matrix out = value(a).array().colwise() * value(col).col(0).array();
  return push(std::move(out), [a, col](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    t.grad_ref(a.id) += (g.array().colwise() * t.value(col).col(0).array()).matrix();
    t.grad_ref(col.id) += g.cwiseProduct(t.value(a)).rowwise().sum();
  });
}

Var Tape::square(Var a) {
  return push(value(a).array().square().matrix(), [a](Tape& t, int id) {
    t.grad_ref(a.id) += 2.0 * t.out_grad(id).cwiseProduct(t.value(a));
  });
}

Var Tape::exp(Var a) {
  Var out = push(value(a).array().exp().matrix());
  nodes_[out.id].backward = [a](Tape& t, int id) {
    t.grad_ref(a.id) += t.out_grad(id).cwiseProduct(t.value(Var{id}));
  };
  return out;
}

Var Tape::silu(Var a) {
  const Matrix& x = value(a);
  Matrix s = x.unaryExpr([](double v) { return sigmoid_of(v); });
  Matrix out = x.cwiseProduct(s);
  return push(std::move(out), [a, s = std::move(s)](Tape& t, int id) {
    const Matrix& x = t.value(a);
    const Matrix d = (s.array() * (1.0 + x.array() * (1.0 - s.array()))).matrix();
    t.grad_ref(a.id) += t.out_grad(id).cwiseProduct(d);
  });
}

Var Tape::relu(Var a) {
  return push(value(a).cwiseMax(0.0), [a](Tape& t, int id) {
    const Matrix mask = (t.value(a).array() > 0.0).cast<double>().matrix();
    t.grad_ref(a.id) += t.out_grad(id).cwiseProduct(mask);
  });
}

Var Tape::sigmoid(Var a) {
  Var out = push(value(a).unaryExpr([](double v) { return sigmoid_of(v); }));
  nodes_[out.id].backward = [a](Tape& t, int id) {
    const Matrix& y = t.value(Var{id});
    t.grad_ref(a.id) += t.out_grad(id).cwiseProduct((y.array() * (1.0 - y.array())).matrix());
  };
  return out;
}

Var Tape::softplus(Var a) {
  return push(value(a).unaryExpr([](double v) { return softplus_of(v); }), [a](Tape& t, int id) {
    const Matrix s = t.value(a).unaryExpr([](double v) { return sigmoid_of(v); });
    t.grad_ref(a.id) += t.out_grad(id).cwiseProduct(s);
  });
}

Var Tape::gather_rows(Var a, std::span<const int> rows) {
  const Matrix& src = value(a);
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= src.rows()) throw ShapeMismatch("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = src.row(rows[r]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return push(std::move(out), [a, idx = std::move(idx)](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    Matrix& ga = t.grad_ref(a.id);
    for (std::size_t r = 0; r < idx.size(); ++r) ga.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var Tape::scatter_add_rows(Var a, std::span<const int> rows, int out_rows) {
  const Matrix& src = value(a);
  if (static_cast<Eigen::Index>(rows.size()) != src.rows()) {
    throw ShapeMismatch("scatter_add_rows: index count does not match rows");
  }
  Matrix out = Matrix::Zero(out_rows, src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= out_rows) throw ShapeMismatch("scatter_add_rows: index out of range");
    out.row(rows[r]) += src.row(static_cast<Eigen::Index>(r));
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return push(std::move(out), [a, idx = std::move(idx)](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    Matrix& ga = t.grad_ref(a.id);
    for (std::size_t r = 0; r < idx.size(); ++r) ga.row(static_cast<Eigen::Index>(r)) += g.row(idx[r]);
  });
}

Var Tape::sum_rows(Var a) {
  return push(value(a).colwise().sum(), [a](Tape& t, int id) {
    t.grad_ref(a.id).rowwise() += t.out_grad(id).row(0);
  });
}

Var Tape::concat_cols(Var a, Var b) {
  if (value(a).rows() != value(b).rows()) throw ShapeMismatch("concat_cols: row counts differ");
  Matrix out(value(a).rows(), value(a).cols() + value(b).cols());
  out << value(a), value(b);
  const auto ca = value(a).cols();
  return push(std::move(out), [a, b, ca](Tape& t, int id) {
    const Matrix& g = t.out_grad(id);
    t.grad_ref(a.id) += g.leftCols(ca);
    t.grad_ref(b.id) += g.rightCols(g.cols() - ca);
  });
}

Var Tape::slice_cols(Var a, int start, int count) {
  if (start < 0 || count <= 0 || start + count > value(a).cols()) {
    throw ShapeMismatch("slice_cols: range out of bounds");
  }
  return push(value(a).middleCols(start, count), [a, start, count](Tape& t, int id) {
    t.grad_ref(a.id).middleCols(start, count) += t.out_grad(id);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), [a](Tape& t, int id) {
    t.grad_ref(a.id).array() += t.out_grad(id)(0, 0);
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  if (n == 0) throw ShapeMismatch("mean of an empty matrix");
  Matrix out(1, 1);
  out(0, 0) = value(a).sum() / n;
  return push(std::move(out), [a, n](Tape& t, int id) {
    t.grad_ref(a.id).array() += t.out_grad(id)(0, 0) / n;
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> targets) {
  const Matrix& z = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != z.rows() || z.rows() == 0) {
    throw ShapeMismatch("softmax_cross_entropy: one target per row required");
  }
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int target = targets[static_cast<std::size_t>(r)];
    if (target < 0 || target >= z.cols()) throw ShapeMismatch("softmax_cross_entropy: bad class");
    const double mx = z.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(r).array() - mx).exp();
    const double s = e.sum();
    probs.row(r) = e / s;
    loss += -(z(r, target) - mx - std::log(s));
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(z.rows());
  std::vector<int> tg(targets.begin(), targets.end());
  return push(std::move(out), [logits, probs = std::move(probs), tg = std::move(tg)](Tape& t, int id) {
    const double g = t.out_grad(id)(0, 0) / static_cast<double>(probs.rows());
    Matrix d = probs;
    for (std::size_t r = 0; r < tg.size(); ++r) d(static_cast<Eigen::Index>(r), tg[r]) -= 1.0;
    t.grad_ref(logits.id) += g * d;
  });
}

Var Tape::bce_with_logits(Var logits, const Matrix& targets) {
  const Matrix& z = value(logits);
  require_same_shape(z, targets, "bce_with_logits");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    const double y = targets.data()[i];
    // log(1 + e^x) - y x, evaluated without overflow.
    loss += softplus_of(x) - y * x;
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(z.size());
  return push(std::move(out), [logits, targets](Tape& t, int id) {
    const Matrix& z = t.value(logits);
    const double g = t.out_grad(id)(0, 0) / static_cast<double>(z.size());
    const Matrix s = z.unaryExpr([](double v) { return sigmoid_of(v); });
    t.grad_ref(logits.id) += g * (s - targets);
  });
}

}  // namespace xtal::ad
