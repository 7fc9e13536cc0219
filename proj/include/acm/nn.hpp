#pragma once

#include "acm/filters.hpp"
#include "acm/graph.hpp"
#include "acm/rng.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace acm {

/// Dense matrix value with an optional gradient accumulator. Copies share
/// the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  /// requires_grad = true; gradients accumulate across backward() calls
  /// until zero_grad().
  static Tensor parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  /// Empty (0×0) until some gradient has been accumulated.
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  long rows() const { return static_cast<long>(node_->value.rows()); }
  long cols() const { return static_cast<long>(node_->value.cols()); }
  long size() const { return static_cast<long>(node_->value.size()); }
  void zero_grad() { node_->grad.resize(0, 0); }

  /// Adds g to the accumulator (allocating it on first use).
  void accumulate(const Matrix& g) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Node> node_;

  friend class Tape;
};

/// Records operations in execution order and replays their local gradients
/// in reverse. Single use: backward() may run once.
class Tape {
 public:
  Tensor matmul(const Tensor& a, const Tensor& b);
  /// op · b for a fixed operator (no gradient w.r.t. op).
  Tensor propagate(const Operator& op, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);
  /// diag(v)·m for an N×1 column v.
  Tensor row_scale(const Tensor& v, const Tensor& m);
  Tensor concat_cols(std::span<const Tensor> parts);
  /// Column j as an N×1 tensor.
  Tensor column(const Tensor& a, long j);
  /// Inverted dropout: kept entries scaled by 1/(1−p) when training,
  /// identity otherwise (and for p = 0).
  Tensor dropout(const Tensor& a, double p, Rng& rng, bool training);
  /// Scalar Σ entries.
  Tensor sum(const Tensor& a);
  /// Scalar Σ entries².
  Tensor sum_squares(const Tensor& a);
  /// Scalar −Σ_i log y[i, class(i)] over a row-stochastic y; probabilities
  /// are clamped to 1e-12 inside the log only. Throws NumericError on
  /// negative or NaN probabilities at the true class.
  Tensor cross_entropy(const Tensor& y, const Matrix& z);
  /// Fused, stable softmax + cross-entropy averaged over `rows`.
  Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> class_ids,
                               std::span<const int> rows);

  /// Runs the recorded closures in reverse, seeding d loss = 1. Throws
  /// ValidationError for a non-scalar loss or a second call.
  void backward(const Tensor& loss);

  std::size_t size() const { return steps_.size(); }

 private:
  Tensor make(Matrix value, bool requires_grad);
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  std::vector<std::function<void()>> steps_;
  bool done_ = false;
};

/// Row-wise softmax on a plain matrix.
Matrix softmax(const Matrix& logits);

/// Xᵀ Âᵀ (softmax(Â X W) − Z): gradient of the summed cross-entropy of the
/// one-layer linear model.
Matrix analytic_gcn_grad(const Operator& a_hat, const Matrix& x, const Matrix& w, const Matrix& z);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update using each parameter's accumulated
/// gradient (missing gradients count as zero).
void adam_step(std::span<Tensor> params, AdamState& state, double lr);

/// Glorot/Xavier uniform on ±sqrt(6 / (rows + cols)).
Matrix glorot(long rows, long cols, Rng& rng);

/// Worst |analytic − numeric| / max(|analytic|, |numeric|, 1e-3) over every
/// parameter entry, with central differences of step eps. `loss_fn` records
/// a forward pass on the given tape and returns a scalar.
double grad_check(const std::function<Tensor(Tape&)>& loss_fn, std::span<Tensor> params, double eps = 1e-6);

}  // namespace acm
