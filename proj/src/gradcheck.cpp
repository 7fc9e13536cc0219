#include "acm/gradcheck.hpp"

#include "acm/models.hpp"
#include "acm/nn.hpp"
#include "acm/rng.hpp"

#include <algorithm>
#include <functional>

namespace acm {
namespace {

Matrix random_matrix(long r, long c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = rng.normal();
  return m;
}

// Ring plus random chords, so no node is isolated.
Graph toy_graph(int n, int f, int c, Rng& rng) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({std::min(i, (i + 1) % n), std::max(i, (i + 1) % n)});
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (rng.bernoulli(0.3)) edges.push_back({i, j});
    }
  }
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i % c;
  return Graph::checked(std::move(edges), random_matrix(n, f, rng), Graph::one_hot(ids, c));
}

using Unary = std::function<Tensor(Tape&, const Tensor&)>;

// Scalar probe: Σ (out · R) for a fixed random R.
double check_unary(const Unary& op, Matrix input, long out_cols, Rng& rng) {
  Tensor x = Tensor::parameter(std::move(input));
  const Tensor r = Tensor::constant(random_matrix(out_cols, 1, rng));
  std::vector<Tensor> params{x};
  return grad_check([&](Tape& t) { return t.sum(t.matmul(op(t, x), r)); }, params);
}

double check_model(const std::string& name, const Graph& g, std::uint64_t seed) {
  ModelConfig cfg = preset(name);
  cfg.hidden = 8;
  cfg.input_dropout = 0.0;
  cfg.dropout = 0.0;
  Model model = build(cfg, g, seed);
  Rng rng(seed);
  std::vector<int> rows(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) rows[i] = i;
  return grad_check(
      [&](Tape& t) { return t.softmax_cross_entropy(model.forward(t, false, rng), g.class_ids(), rows); },
      model.parameters());
}

}  // namespace

std::vector<GradCheckRow> gradcheck_suite(std::uint64_t seed) {
  constexpr double kPrimitive = 1e-5;
  constexpr double kAcm = 1e-4;
  Rng rng(seed);
  std::vector<GradCheckRow> rows;
  const Graph g = toy_graph(10, 5, 3, rng);
  const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);

  {
    const Tensor b = Tensor::parameter(random_matrix(4, 3, rng));
    Tensor x = Tensor::parameter(random_matrix(10, 4, rng));
    const Tensor r = Tensor::constant(random_matrix(3, 1, rng));
    std::vector<Tensor> params{x, b};
    rows.push_back({"matmul", grad_check([&](Tape& t) { return t.sum(t.matmul(t.matmul(x, b), r)); }, params),
                    kPrimitive});
  }
  rows.push_back({"propagate",
                  check_unary([&](Tape& t, const Tensor& x) { return t.propagate(a, x); }, random_matrix(10, 3, rng),
                              3, rng),
                  kPrimitive});
  {
    Tensor x = Tensor::parameter(random_matrix(4, 3, rng));
    Tensor y = Tensor::parameter(random_matrix(4, 3, rng));
    const Tensor r = Tensor::constant(random_matrix(3, 1, rng));
    std::vector<Tensor> params{x, y};
    rows.push_back({"add", grad_check([&](Tape& t) { return t.sum(t.matmul(t.add(x, y), r)); }, params), kPrimitive});
    rows.push_back({"sub", grad_check([&](Tape& t) { return t.sum(t.matmul(t.sub(x, y), r)); }, params), kPrimitive});
    rows.push_back({"row_scale",
                    grad_check([&](Tape& t) { return t.sum(t.matmul(t.row_scale(t.column(x, 1), y), r)); }, params),
                    kPrimitive});
    rows.push_back({"concat_cols",
                    grad_check(
                        [&](Tape& t) {
                          const std::vector<Tensor> parts{x, y};
                          const Tensor r6 = Tensor::constant(Matrix::Constant(6, 1, 0.7) + r.value().replicate(2, 1));
                          return t.sum(t.matmul(t.concat_cols(parts), r6));
                        },
                        params),
                    kPrimitive});
  }
  rows.push_back({"scale",
                  check_unary([](Tape& t, const Tensor& x) { return t.scale(x, -1.7); }, random_matrix(4, 3, rng), 3,
                              rng),
                  kPrimitive});
  rows.push_back({"relu",
                  check_unary([](Tape& t, const Tensor& x) { return t.relu(x); }, random_matrix(4, 3, rng), 3, rng),
                  kPrimitive});
  rows.push_back({"sigmoid",
                  check_unary([](Tape& t, const Tensor& x) { return t.sigmoid(x); }, random_matrix(4, 3, rng), 3, rng),
                  kPrimitive});
  rows.push_back({"softmax_rows",
                  check_unary([](Tape& t, const Tensor& x) { return t.softmax_rows(x); }, random_matrix(4, 3, rng), 3,
                              rng),
                  kPrimitive});
  rows.push_back({"column",
                  check_unary([](Tape& t, const Tensor& x) { return t.column(x, 2); }, random_matrix(4, 3, rng), 1,
                              rng),
                  kPrimitive});
  rows.push_back({"dropout",
                  check_unary(
                      [](Tape& t, const Tensor& x) {
                        Rng fixed(99);
                        return t.dropout(x, 0.3, fixed, true);
                      },
                      random_matrix(4, 3, rng), 3, rng),
                  kPrimitive});
  {
    Tensor x = Tensor::parameter(random_matrix(4, 3, rng));
    std::vector<Tensor> params{x};
    rows.push_back({"sum_squares", grad_check([&](Tape& t) { return t.sum_squares(x); }, params), kPrimitive});
    const Matrix z = Graph::one_hot(std::vector<int>{0, 2, 1, 2}, 3).cast<double>();
    rows.push_back({"cross_entropy",
                    grad_check([&](Tape& t) { return t.cross_entropy(t.softmax_rows(x), z); }, params), kPrimitive});
    const std::vector<int> ids{0, 2, 1, 2};
    const std::vector<int> sel{0, 1, 3};
    rows.push_back(
        {"softmax_cross_entropy", grad_check([&](Tape& t) { return t.softmax_cross_entropy(x, ids, sel); }, params),
         kPrimitive});
  }
  {
    // Integer features, dyadic weights and a power-of-two step keep every
    // operation exact, so any error left is the tape's.
    Matrix xv(10, 5), wv(5, 3);
    for (Eigen::Index k = 0; k < xv.size(); ++k) xv(k) = static_cast<double>(rng.index(9)) - 4.0;
    for (Eigen::Index k = 0; k < wv.size(); ++k) wv(k) = (static_cast<double>(rng.index(8193)) - 4096.0) / 1024.0;
    const Tensor x = Tensor::constant(xv);
    Tensor w = Tensor::parameter(wv);
    std::vector<Tensor> params{w};
    rows.push_back(
        {"linear model", grad_check([&](Tape& t) { return t.sum(t.matmul(x, w)); }, params, 0x1p-20), 1e-8});
  }

  for (const char* name : {"mlp1", "mlp2", "sgc1", "sgc2", "gcn", "snowball2", "snowball3"}) {
    rows.push_back({name, check_model(name, g, derive_seed(seed, rows.size())), kPrimitive});
  }
  for (const char* name : {"acm-sgc1", "acm-sgc2", "acm-gcn", "acmii-gcn", "acm-snowball2", "acmii-snowball2"}) {
    rows.push_back({name, check_model(name, g, derive_seed(seed, rows.size())), kAcm});
  }

  // Closed form vs tape on the one-layer model, ten random instances.
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.index(7));
    const Graph h = toy_graph(n, 4, 2 + static_cast<int>(rng.index(2)), rng);
    const Operator ah = affinity(h, OperatorKind::kRandomWalkRenorm);
    const Matrix z = h.label_matrix();
    Tensor w = Tensor::parameter(random_matrix(4, h.class_count(), rng));
    const Tensor x = Tensor::constant(h.features());
    Tape tape;
    tape.backward(tape.cross_entropy(tape.softmax_rows(tape.matmul(tape.propagate(ah, x), w)), z));
    const Matrix closed = analytic_gcn_grad(ah, h.features(), w.value(), z);
    worst = std::max(worst, (closed - w.grad()).cwiseAbs().maxCoeff());
  }
  rows.push_back({"analytic_gcn_grad", worst, 1e-10});
  return rows;
}

}  // namespace acm
