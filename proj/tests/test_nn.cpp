#include "doctest.h"
#include "test_util.hpp"

#include "acm/error.hpp"
#include "acm/filters.hpp"
#include "acm/gradcheck.hpp"
#include "acm/metrics.hpp"
#include "acm/nn.hpp"

#include <cmath>

using namespace acm;
using namespace testutil;

TEST_CASE("primitive examples") {
  Tape t;
  Matrix m(1, 2);
  m << -1, 2;
  Matrix want(1, 2);
  want << 0, 2;
  CHECK(t.relu(Tensor::constant(m)).value() == want);

  CHECK(t.softmax_rows(Tensor::constant(Matrix::Zero(1, 4))).value() == Matrix::Constant(1, 4, 0.25));

  Rng rng(1);
  const Tensor x = Tensor::parameter(random_matrix(3, 3, rng));
  CHECK(t.dropout(x, 0.0, rng, true).value() == x.value());
  CHECK(t.dropout(x, 0.5, rng, false).value() == x.value());
}

TEST_CASE("dropout scales kept entries") {
  Tape t;
  Rng rng(2);
  const Tensor x = Tensor::constant(Matrix::Ones(200, 50));
  const Matrix y = t.dropout(x, 0.3, rng, true).value();
  long kept = 0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (y(k) != 0) {
      CHECK(y(k) == doctest::Approx(1.0 / 0.7));
      ++kept;
    }
  }
  CHECK(static_cast<double>(kept) / y.size() == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("softmax rows lie on the simplex") {
  Rng rng(3);
  Matrix x = 20 * random_matrix(50, 6, rng);
  const Matrix y = softmax(x);
  for (long i = 0; i < y.rows(); ++i) {
    CHECK(std::abs(y.row(i).sum() - 1.0) < 1e-12);
    CHECK(y.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("cross entropy") {
  Tape t;
  const Matrix z = Graph::one_hot(std::vector<int>{0, 2, 1}, 3).cast<double>();
  CHECK(t.cross_entropy(Tensor::constant(z), z).value()(0, 0) == 0.0);
  const Tensor uniform = Tensor::constant(Matrix::Constant(3, 3, 1.0 / 3));
  CHECK(t.cross_entropy(uniform, z).value()(0, 0) == doctest::Approx(3 * std::log(3.0)));

  Matrix y(1, 2), z1(1, 2);
  y << 0.5, 0.5;
  z1 << 1, 0;
  CHECK(t.cross_entropy(Tensor::constant(y), z1).value()(0, 0) == doctest::Approx(0.6931471805599453));

  Matrix bad(1, 2);
  bad << -0.1, 1.1;
  CHECK_THROWS_AS(t.cross_entropy(Tensor::constant(bad), z1), NumericError);

  // Zero probability at the true class is clamped, not an error.
  Matrix zero(1, 2);
  zero << 0.0, 1.0;
  CHECK(t.cross_entropy(Tensor::constant(zero), z1).value()(0, 0) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("backward") {
  Rng rng(4);
  SUBCASE("sum gives ones") {
    Tape t;
    Tensor w = Tensor::parameter(random_matrix(3, 4, rng));
    t.backward(t.sum(w));
    CHECK(w.grad() == Matrix::Ones(3, 4));
  }
  SUBCASE("second call and non-scalar loss are errors") {
    Tape t;
    Tensor w = Tensor::parameter(random_matrix(3, 4, rng));
    const Tensor loss = t.sum(w);
    t.backward(loss);
    CHECK_THROWS_AS(t.backward(loss), ValidationError);
    Tape u;
    CHECK_THROWS_AS(u.backward(u.relu(w)), ValidationError);
  }
  SUBCASE("gradients accumulate until zero_grad") {
    Tensor w = Tensor::parameter(random_matrix(2, 2, rng));
    for (int i = 0; i < 2; ++i) {
      Tape t;
      t.backward(t.sum(w));
    }
    CHECK(w.grad() == Matrix::Constant(2, 2, 2.0));
    w.zero_grad();
    CHECK(w.grad().size() == 0);
  }
  SUBCASE("deterministic") {
    const Tensor x = Tensor::constant(random_matrix(5, 3, rng));
    Tensor w = Tensor::parameter(random_matrix(3, 2, rng));
    Matrix first;
    for (int i = 0; i < 2; ++i) {
      w.zero_grad();
      Tape t;
      t.backward(t.sum_squares(t.sigmoid(t.matmul(x, w))));
      if (i == 0) first = w.grad();
    }
    CHECK(w.grad() == first);
  }
}

TEST_CASE("shape mismatches") {
  Tape t;
  const Tensor a = Tensor::constant(Matrix::Ones(2, 3));
  const Tensor b = Tensor::constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(t.matmul(a, b), ValidationError);
  CHECK_THROWS_AS(t.add(a, b), ValidationError);
  CHECK_THROWS_AS(t.row_scale(a, b), ValidationError);
  CHECK_THROWS_AS(t.propagate(identity_operator(3), a), ValidationError);
}

TEST_CASE("finite-difference suite") {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const GradCheckRow& row : gradcheck_suite(seed)) {
      INFO(row.name << " seed " << seed << " worst " << row.worst);
      CHECK(row.ok());
    }
  }
}

TEST_CASE("analytic gradient") {
  Rng rng(5);
  const Graph g = random_graph(6, 2, 3, 0.4, rng);
  const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);
  const Matrix z = g.label_matrix();

  SUBCASE("matches finite differences") {
    const Matrix w0 = random_matrix(3, 2, rng);
    const Matrix grad = analytic_gcn_grad(a, g.features(), w0, z);
    const auto loss = [&](const Matrix& w) {
      const Matrix y = softmax(a.matrix() * g.features() * w);
      double s = 0;
      for (int i = 0; i < 6; ++i) s -= std::log(y(i, g.class_of(i)));
      return s;
    };
    double worst = 0;
    for (long k = 0; k < w0.size(); ++k) {
      Matrix up = w0, down = w0;
      up(k) += 1e-6;
      down(k) -= 1e-6;
      const double num = (loss(up) - loss(down)) / 2e-6;
      worst = std::max(worst, std::abs(num - grad(k)) / std::max({std::abs(num), std::abs(grad(k)), 1e-3}));
    }
    CHECK(worst < 1e-5);
  }

  SUBCASE("vanishes at a numerically found optimum") {
    // Each distinct input row carries both labels, so the minimizer is
    // finite; plain gradient descent on the convex loss finds it.
    Matrix x(6, 2);
    x << 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1;
    const Matrix zo = Graph::one_hot(std::vector<int>{0, 0, 1, 0, 1, 1}, 2).cast<double>();
    const Operator id = identity_operator(6);
    Matrix w = Matrix::Zero(2, 2);
    for (int it = 0; it < 5000; ++it) w -= 0.5 * analytic_gcn_grad(id, x, w, zo);
    CHECK(analytic_gcn_grad(id, x, w, zo).norm() < 1e-6);
    const Matrix y = softmax(x * w);
    CHECK(y(0, 0) == doctest::Approx(2.0 / 3));
  }

  SUBCASE("perfect logits give zero gradient") {
    const Matrix x = Matrix::Identity(6, 6);
    const Operator id = identity_operator(6);
    const Matrix w = 60.0 * (2 * z - Matrix::Ones(6, 2));
    CHECK(analytic_gcn_grad(id, x, w, z).cwiseAbs().maxCoeff() < 1e-12);
  }

  CHECK_THROWS_AS(analytic_gcn_grad(a, g.features(), Matrix::Ones(4, 2), z), ValidationError);
}

TEST_CASE("one gradient step on the linear model moves logits by S(A,X)(Z - Y)") {
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    const int n = 4 + static_cast<int>(rng.index(7));
    const Graph g = random_graph(n, 3, 4, 0.3, rng);
    const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);
    const Matrix ax = a.matrix() * g.features();
    const Matrix z = g.label_matrix();
    Tensor w = Tensor::parameter(random_matrix(4, 3, rng));
    Tape tape;
    tape.backward(tape.cross_entropy(tape.softmax_rows(tape.matmul(tape.propagate(a, Tensor::constant(g.features())), w)), z));
    const double lr = 0.01;
    const Matrix before = ax * w.value();
    const Matrix after = ax * (w.value() - lr * w.grad());
    const Matrix y = softmax(before);
    const Matrix predicted = lr * similarity_matrix(a, g.features()).matrix * (z - y);
    CHECK((after - before - predicted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters alone") {
    std::vector<Tensor> p{Tensor::parameter(Matrix::Constant(2, 2, 3.0))};
    p[0].accumulate(Matrix::Zero(2, 2));
    AdamState s;
    adam_step(p, s, 0.1);
    CHECK(p[0].value() == Matrix::Constant(2, 2, 3.0));
  }
  SUBCASE("first step is lr times the sign") {
    Matrix g(1, 3);
    g << 2.0, -0.5, 1e-3;
    std::vector<Tensor> p{Tensor::parameter(Matrix::Zero(1, 3))};
    p[0].accumulate(g);
    AdamState s;
    adam_step(p, s, 0.01);
    for (int k = 0; k < 3; ++k) CHECK(p[0].value()(k) == doctest::Approx(-0.01 * (g(k) > 0 ? 1 : -1)).epsilon(1e-4));
  }
  SUBCASE("constant gradient steps approach lr") {
    std::vector<Tensor> p{Tensor::parameter(Matrix::Zero(1, 1))};
    AdamState s;
    double prev = 0, step = 0;
    for (int i = 0; i < 500; ++i) {
      p[0].zero_grad();
      p[0].accumulate(Matrix::Constant(1, 1, 0.7));
      adam_step(p, s, 0.02);
      step = prev - p[0].value()(0, 0);
      prev = p[0].value()(0, 0);
    }
    CHECK(step == doctest::Approx(0.02).epsilon(1e-6));
  }
}

TEST_CASE("glorot bounds") {
  Rng rng(7);
  const Matrix w = glorot(30, 10, rng);
  const double bound = std::sqrt(6.0 / 40);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  CHECK(w.cwiseAbs().maxCoeff() > 0.9 * bound);
}
