#include "acm/nn.hpp"

#include "acm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace acm {
namespace {

constexpr double kFloor = 1e-12;

std::string shape(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ValidationError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

void same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch(op, a, b);
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->value = std::move(value);
  return t;
}

Tensor Tensor::parameter(Matrix value) {
  Tensor t = constant(std::move(value));
  t.node_->requires_grad = true;
  return t;
}

void Tensor::accumulate(const Matrix& g) const {
  if (node_->grad.size() == 0) {
    node_->grad = g;
  } else {
    node_->grad += g;
  }
}

Tensor Tape::make(Matrix value, bool requires_grad) {
  Tensor t = Tensor::constant(std::move(value));
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  Tensor out = make(a.value() * b.value(), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    record([a, b, out]() mutable {
      if (out.grad().size() == 0) return;
      if (a.requires_grad()) a.accumulate(out.grad() * b.value().transpose());
      if (b.requires_grad()) b.accumulate(a.value().transpose() * out.grad());
    });
  }
  return out;
}

Tensor Tape::propagate(const Operator& op, const Tensor& b) {
  if (op.size() != b.rows()) {
    throw ValidationError("propagate: operator is " + std::to_string(op.size()) + "x" +
                          std::to_string(op.size()) + ", input is " + shape(b));
  }
  Tensor out = make(op.sparse() * b.value(), b.requires_grad());
  if (out.requires_grad()) {
    const SparseMatrix* at = &op.sparse_transpose();
    record([at, b, out]() mutable {
      if (out.grad().size() == 0) return;
      b.accumulate(*at * out.grad());
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  same_shape("add", a, b);
  Tensor out = make(a.value() + b.value(), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    record([a, b, out]() mutable {
      if (out.grad().size() == 0) return;
      if (a.requires_grad()) a.accumulate(out.grad());
      if (b.requires_grad()) b.accumulate(out.grad());
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  same_shape("sub", a, b);
  Tensor out = make(a.value() - b.value(), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    record([a, b, out]() mutable {
      if (out.grad().size() == 0) return;
      if (a.requires_grad()) a.accumulate(out.grad());
      if (b.requires_grad()) b.accumulate(-out.grad());
    });
  }
  return out;
}

Tensor Tape::scale(const Tensor& a, double s) {
  Tensor out = make(a.value() * s, a.requires_grad());
  if (out.requires_grad()) {
    record([a, s, out]() mutable {
      if (out.grad().size() == 0) return;
      a.accumulate(out.grad() * s);
    });
  }
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out = make(a.value().cwiseMax(0.0), a.requires_grad());
  if (out.requires_grad()) {
    record([a, out]() mutable {
      if (out.grad().size() == 0) return;
      a.accumulate((a.value().array() > 0.0).select(out.grad(), 0.0));
    });
  }
  return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  Tensor out = make(std::move(y), a.requires_grad());
  if (out.requires_grad()) {
    record([a, out]() mutable {
      if (out.grad().size() == 0) return;
      const auto& s = out.value().array();
      a.accumulate((out.grad().array() * s * (1.0 - s)).matrix());
    });
  }
  return out;
}

Matrix softmax(const Matrix& logits) {
  Matrix y = logits.colwise() - logits.rowwise().maxCoeff();
  y = y.array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  Tensor out = make(softmax(a.value()), a.requires_grad());
  if (out.requires_grad()) {
    record([a, out]() mutable {
      if (out.grad().size() == 0) return;
      const Matrix& y = out.value();
      const Vector inner = (out.grad().array() * y.array()).rowwise().sum();
      a.accumulate((y.array() * (out.grad().colwise() - inner).array()).matrix());
    });
  }
  return out;
}

Tensor Tape::row_scale(const Tensor& v, const Tensor& m) {
  if (v.cols() != 1 || v.rows() != m.rows()) mismatch("row_scale", v, m);
  Tensor out = make(v.value().col(0).asDiagonal() * m.value(), v.requires_grad() || m.requires_grad());
  if (out.requires_grad()) {
    record([v, m, out]() mutable {
      if (out.grad().size() == 0) return;
      if (v.requires_grad()) v.accumulate((out.grad().array() * m.value().array()).rowwise().sum().matrix());
      if (m.requires_grad()) m.accumulate(v.value().col(0).asDiagonal() * out.grad());
    });
  }
  return out;
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  long cols = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) mismatch("concat_cols", parts.front(), p);
    cols += p.cols();
    needs = needs || p.requires_grad();
  }
  Matrix value(parts.front().rows(), cols);
  long at = 0;
  for (const auto& p : parts) {
    value.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  Tensor out = make(std::move(value), needs);
  if (out.requires_grad()) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    record([inputs, out]() mutable {
      if (out.grad().size() == 0) return;
      long at = 0;
      for (auto& p : inputs) {
        if (p.requires_grad()) p.accumulate(out.grad().middleCols(at, p.cols()));
        at += p.cols();
      }
    });
  }
  return out;
}

Tensor Tape::column(const Tensor& a, long j) {
  if (j < 0 || j >= a.cols()) throw ValidationError("column: index out of range");
  Tensor out = make(a.value().col(j), a.requires_grad());
  if (out.requires_grad()) {
    record([a, j, out]() mutable {
      if (out.grad().size() == 0) return;
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      g.col(j) = out.grad();
      a.accumulate(g);
    });
  }
  return out;
}

Tensor Tape::dropout(const Tensor& a, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return a;
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask(k) = rng.uniform() < p ? 0.0 : keep;
  Tensor out = make(a.value().cwiseProduct(mask), a.requires_grad());
  if (out.requires_grad()) {
    record([a, mask, out]() mutable {
      if (out.grad().size() == 0) return;
      a.accumulate(out.grad().cwiseProduct(mask));
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  Tensor out = make(std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    record([a, out]() mutable {
      if (out.grad().size() == 0) return;
      a.accumulate(Matrix::Constant(a.rows(), a.cols(), out.grad()(0, 0)));
    });
  }
  return out;
}

Tensor Tape::sum_squares(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().squaredNorm();
  Tensor out = make(std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    record([a, out]() mutable {
      if (out.grad().size() == 0) return;
      a.accumulate(2.0 * out.grad()(0, 0) * a.value());
    });
  }
  return out;
}

Tensor Tape::cross_entropy(const Tensor& y, const Matrix& z) {
  if (y.rows() != z.rows() || y.cols() != z.cols()) {
    throw ValidationError("cross_entropy: predictions " + shape(y) + " vs labels " +
                          std::to_string(z.rows()) + "x" + std::to_string(z.cols()));
  }
  std::vector<Eigen::Index> cls(z.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    z.row(i).maxCoeff(&cls[i]);
    const double p = y.value()(i, cls[i]);
    if (!(p >= 0.0)) throw NumericError("cross_entropy: probability " + std::to_string(p) + " at row " + std::to_string(i));
    loss -= std::log(std::max(p, kFloor));
  }
  Matrix v(1, 1);
  v(0, 0) = loss;
  Tensor out = make(std::move(v), y.requires_grad());
  if (out.requires_grad()) {
    record([y, cls, out]() mutable {
      if (out.grad().size() == 0) return;
      Matrix g = Matrix::Zero(y.rows(), y.cols());
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        g(i, cls[i]) = -out.grad()(0, 0) / std::max(y.value()(i, cls[i]), kFloor);
      }
      y.accumulate(g);
    });
  }
  return out;
}

Tensor Tape::softmax_cross_entropy(const Tensor& logits, std::span<const int> class_ids,
                                   std::span<const int> rows) {
  if (static_cast<long>(class_ids.size()) != logits.rows()) {
    throw ValidationError("softmax_cross_entropy: " + std::to_string(class_ids.size()) + " labels for " +
                          shape(logits) + " logits");
  }
  if (rows.empty()) throw ValidationError("softmax_cross_entropy: no rows selected");
  const Matrix& x = logits.value();
  const double inv = 1.0 / static_cast<double>(rows.size());
  Matrix probs(static_cast<Eigen::Index>(rows.size()), x.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int i = rows[k];
    const double m = x.row(i).maxCoeff();
    const auto shifted = (x.row(i).array() - m).eval();
    const double lse = std::log(shifted.exp().sum());
    loss -= shifted(class_ids[i]) - lse;
    probs.row(static_cast<Eigen::Index>(k)) = (shifted - lse).exp().matrix();
  }
  if (!std::isfinite(loss)) throw NumericError("softmax_cross_entropy: non-finite loss");
  Matrix v(1, 1);
  v(0, 0) = loss * inv;
  Tensor out = make(std::move(v), logits.requires_grad());
  if (out.requires_grad()) {
    std::vector<int> ids(class_ids.begin(), class_ids.end());
    std::vector<int> sel(rows.begin(), rows.end());
    record([logits, ids, sel, probs, inv, out]() mutable {
      if (out.grad().size() == 0) return;
      Matrix g = Matrix::Zero(logits.rows(), logits.cols());
      const double s = out.grad()(0, 0) * inv;
      for (std::size_t k = 0; k < sel.size(); ++k) {
        g.row(sel[k]) += s * probs.row(static_cast<Eigen::Index>(k));
        g(sel[k], ids[sel[k]]) -= s;
      }
      logits.accumulate(g);
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (done_) throw ValidationError("backward: tape already consumed");
  if (loss.rows() != 1 || loss.cols() != 1) throw ValidationError("backward: loss must be scalar, got " + shape(loss));
  done_ = true;
  if (!loss.requires_grad()) return;
  Tensor seed = loss;
  seed.accumulate(Matrix::Ones(1, 1));
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  steps_.clear();
}

Matrix analytic_gcn_grad(const Operator& a_hat, const Matrix& x, const Matrix& w, const Matrix& z) {
  if (x.rows() != a_hat.size() || x.cols() != w.rows() || z.rows() != x.rows() || z.cols() != w.cols()) {
    throw ValidationError("analytic_gcn_grad: shape mismatch");
  }
  const Matrix ax = a_hat.matrix() * x;
  const Matrix y = softmax(ax * w);
  return ax.transpose() * (y - z);
}

void adam_step(std::span<Tensor> params, AdamState& state, double lr) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ValidationError("adam_step: parameter count changed");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (state.m[k].rows() != p.rows() || state.m[k].cols() != p.cols()) {
      throw ValidationError("adam_step: shape mismatch for parameter " + std::to_string(k));
    }
    if (p.grad().size() == 0) {
      state.m[k] *= state.beta1;
      state.v[k] *= state.beta2;
    } else {
      state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * p.grad();
      state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * p.grad().cwiseAbs2();
    }
    const auto m_hat = (state.m[k] / c1).array();
    const auto v_hat = (state.v[k] / c2).array();
    p.mutable_value().array() -= lr * m_hat / (v_hat.sqrt() + state.eps);
  }
}

Matrix glorot(long rows, long cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (long j = 0; j < cols; ++j) {
    for (long i = 0; i < rows; ++i) w(i, j) = rng.uniform(-bound, bound);
  }
  return w;
}

double grad_check(const std::function<Tensor(Tape&)>& loss_fn, std::span<Tensor> params, double eps) {
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }
  auto eval = [&]() {
    Tape tape;
    return loss_fn(tape).value()(0, 0);
  };
  double worst = 0.0;
  for (auto& p : params) {
    const Matrix analytic = p.grad().size() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
    for (Eigen::Index k = 0; k < p.value().size(); ++k) {
      const double orig = p.value()(k);
      p.mutable_value()(k) = orig + eps;
      const double up = eval();
      p.mutable_value()(k) = orig - eps;
      const double down = eval();
      p.mutable_value()(k) = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic(k);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace acm
