#pragma once

#include "acm/graph.hpp"

#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <string_view>

namespace acm {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class OperatorKind {
  kIdentity,
  kRandomWalk,           // A_rw = D^-1 A
  kSymmetric,            // A_sym = D^-1/2 A D^-1/2
  kRandomWalkRenorm,     // Â_rw = D̃^-1 Ã
  kSymmetricRenorm,      // Â_sym = D̃^-1/2 Ã D̃^-1/2
  kLaplacian,            // L = D - A
  kSymLaplacian,         // L_sym = I - A_sym
  kRwLaplacian,          // L_rw = I - A_rw
  kSymLaplacianRenorm,   // L̂_sym = I - Â_sym
  kRwLaplacianRenorm,    // L̂_rw = I - Â_rw
};

bool is_affinity(OperatorKind k);
bool is_laplacian(OperatorKind k);

/// Short names used by the CLI and config files: identity, a_rw, a_sym,
/// a_rw_renorm, a_sym_renorm, l, l_sym, l_rw, l_sym_renorm, l_rw_renorm.
std::string_view to_string(OperatorKind k);
std::optional<OperatorKind> parse_operator_kind(std::string_view name);

/// Dense N×N linear filter tagged with how it was built.
///
/// `highpass` marks I − M for an affinity or identity M. Immutable; a
/// compressed copy of the same entries is kept for fast products.
class Operator {
 public:
  Operator(Matrix matrix, OperatorKind kind, bool highpass = false);

  const Matrix& matrix() const { return matrix_; }
  const SparseMatrix& sparse() const { return sparse_; }
  const SparseMatrix& sparse_transpose() const { return sparse_t_; }
  OperatorKind kind() const { return kind_; }
  bool is_highpass() const { return highpass_; }
  int size() const { return static_cast<int>(matrix_.rows()); }
  long nnz() const { return static_cast<long>(sparse_.nonZeros()); }

  /// e.g. "a_rw_renorm" or "highpass(a_rw_renorm)".
  std::string name() const;

 private:
  Matrix matrix_;
  SparseMatrix sparse_;
  SparseMatrix sparse_t_;
  OperatorKind kind_;
  bool highpass_;
};

Operator identity_operator(int n);

/// Affinity (low-pass) operators. The non-renormalized kinds throw
/// ValidationError when some node is isolated.
Operator affinity(const Graph& g, OperatorKind kind);

/// Laplacian kinds, built as D − A or I − (matching affinity).
Operator laplacian(const Graph& g, OperatorKind kind);

/// Any kind, dispatching to affinity / laplacian / identity.
Operator make_operator(const Graph& g, OperatorKind kind);

/// I − a for an affinity or identity operator. Throws ValidationError for
/// Laplacian or already high-pass inputs.
Operator highpass(const Operator& a);

/// op · m. Throws ValidationError on a row-count mismatch.
Matrix apply(const Operator& op, const Matrix& m);

}  // namespace acm
