#include "acm/filters.hpp"

#include "acm/error.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace acm {
namespace {

constexpr std::array<std::pair<OperatorKind, std::string_view>, 10> kNames{{
    {OperatorKind::kIdentity, "identity"},
    {OperatorKind::kRandomWalk, "a_rw"},
    {OperatorKind::kSymmetric, "a_sym"},
    {OperatorKind::kRandomWalkRenorm, "a_rw_renorm"},
    {OperatorKind::kSymmetricRenorm, "a_sym_renorm"},
    {OperatorKind::kLaplacian, "l"},
    {OperatorKind::kSymLaplacian, "l_sym"},
    {OperatorKind::kRwLaplacian, "l_rw"},
    {OperatorKind::kSymLaplacianRenorm, "l_sym_renorm"},
    {OperatorKind::kRwLaplacianRenorm, "l_rw_renorm"},
}};

void require_no_isolated(const Graph& g, OperatorKind kind) {
  const auto d = degrees(g);
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (d[i] == 0) {
      throw ValidationError(std::string(to_string(kind)) + " is undefined: node " + std::to_string(i) +
                            " is isolated (use a renormalized operator)");
    }
  }
}

// I − m, entrywise.
Matrix complement(const Matrix& m) {
  Matrix out = -m;
  out.diagonal().array() += 1.0;
  return out;
}

}  // namespace

bool is_affinity(OperatorKind k) {
  return k == OperatorKind::kRandomWalk || k == OperatorKind::kSymmetric ||
         k == OperatorKind::kRandomWalkRenorm || k == OperatorKind::kSymmetricRenorm;
}

bool is_laplacian(OperatorKind k) {
  return k == OperatorKind::kLaplacian || k == OperatorKind::kSymLaplacian ||
         k == OperatorKind::kRwLaplacian || k == OperatorKind::kSymLaplacianRenorm ||
         k == OperatorKind::kRwLaplacianRenorm;
}

std::string_view to_string(OperatorKind k) {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<OperatorKind> parse_operator_kind(std::string_view name) {
  for (const auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

Operator::Operator(Matrix matrix, OperatorKind kind, bool highpass)
    : matrix_(std::move(matrix)), kind_(kind), highpass_(highpass) {
  sparse_ = matrix_.sparseView(0.0, 0.0);
  sparse_.makeCompressed();
  sparse_t_ = SparseMatrix(sparse_.transpose());
  sparse_t_.makeCompressed();
}

std::string Operator::name() const {
  const std::string base(to_string(kind_));
  return highpass_ ? "highpass(" + base + ")" : base;
}

Operator identity_operator(int n) { return Operator(Matrix::Identity(n, n), OperatorKind::kIdentity); }

Operator affinity(const Graph& g, OperatorKind kind) {
  if (!is_affinity(kind)) {
    throw ValidationError(std::string(to_string(kind)) + " is not an affinity kind");
  }
  const int n = g.num_nodes();
  const auto& nb = g.neighbors();
  const auto d = degrees(g);
  Matrix m = Matrix::Zero(n, n);
  switch (kind) {
    case OperatorKind::kRandomWalk:
      require_no_isolated(g, kind);
      for (int i = 0; i < n; ++i) {
        for (int j : nb[i]) m(i, j) = 1.0 / d[i];
      }
      break;
    case OperatorKind::kSymmetric:
      require_no_isolated(g, kind);
      for (int i = 0; i < n; ++i) {
        for (int j : nb[i]) m(i, j) = 1.0 / std::sqrt(static_cast<double>(d[i]) * d[j]);
      }
      break;
    case OperatorKind::kRandomWalkRenorm:
      for (int i = 0; i < n; ++i) {
        const double w = 1.0 / (d[i] + 1);
        m(i, i) = w;
        for (int j : nb[i]) m(i, j) = w;
      }
      break;
    case OperatorKind::kSymmetricRenorm:
      for (int i = 0; i < n; ++i) {
        m(i, i) = 1.0 / (d[i] + 1);
        for (int j : nb[i]) m(i, j) = 1.0 / std::sqrt(static_cast<double>(d[i] + 1) * (d[j] + 1));
      }
      break;
    default:
      break;
  }
  return Operator(std::move(m), kind);
}

Operator laplacian(const Graph& g, OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kLaplacian: {
      Matrix l = -g.adjacency_matrix();
      const auto d = degrees(g);
      for (int i = 0; i < g.num_nodes(); ++i) l(i, i) = d[i];
      return Operator(std::move(l), kind);
    }
    case OperatorKind::kSymLaplacian:
      return Operator(complement(affinity(g, OperatorKind::kSymmetric).matrix()), kind);
    case OperatorKind::kRwLaplacian:
      return Operator(complement(affinity(g, OperatorKind::kRandomWalk).matrix()), kind);
    case OperatorKind::kSymLaplacianRenorm:
      return Operator(complement(affinity(g, OperatorKind::kSymmetricRenorm).matrix()), kind);
    case OperatorKind::kRwLaplacianRenorm:
      return Operator(complement(affinity(g, OperatorKind::kRandomWalkRenorm).matrix()), kind);
    default:
      throw ValidationError(std::string(to_string(kind)) + " is not a Laplacian kind");
  }
}

Operator make_operator(const Graph& g, OperatorKind kind) {
  if (kind == OperatorKind::kIdentity) return identity_operator(g.num_nodes());
  if (is_affinity(kind)) return affinity(g, kind);
  return laplacian(g, kind);
}

Operator highpass(const Operator& a) {
  if (a.is_highpass() || is_laplacian(a.kind())) {
    throw ValidationError("highpass() needs an affinity or identity operator, got " + a.name());
  }
  return Operator(complement(a.matrix()), a.kind(), true);
}

Matrix apply(const Operator& op, const Matrix& m) {
  if (m.rows() != op.size()) {
    throw ValidationError("apply: operator is " + std::to_string(op.size()) + "x" +
                          std::to_string(op.size()) + " but signal has " + std::to_string(m.rows()) +
                          " rows");
  }
  return op.matrix() * m;
}

}  // namespace acm
