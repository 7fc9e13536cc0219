#pragma once

#include "acm/filters.hpp"
#include "acm/graph.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace acm {

enum class SignalTag { kLabels, kFeatures };

/// Post-aggregation similarity S(op, signal) = (op·signal)(op·signal)ᵀ.
struct SimMatrix {
  Matrix matrix;
  std::string operator_name;
  SignalTag signal = SignalTag::kFeatures;
};

/// Relative slack used when comparing the class means of a similarity row.
/// Exact ties (for example both means equal to 0) can come out a few ulps
/// apart depending on summation order, and a row that is zero in exact
/// arithmetic may carry rounding residue of the size of the other rows'
/// rounding. Anything within kTieTolerance · max_u |S_uu| of the bound counts
/// as satisfying the weak inequality.
inline constexpr double kTieTolerance = 1e-10;

struct HomophilyReport {
  double h_edge = 0;
  double h_node = 0;
  double h_class = 0;
  double h_agg = 0;
  double h_agg_mod = 0;
  double s_agg_ax = 0;  // S_agg(S(Â, X))
  double s_agg_ix = 0;  // S_agg(S(I, X))
  double dd = 0;        // DD over S(I − Â, X)
};

// Label/structure consistency --------------------------------------------------

/// Fraction of edges joining same-class endpoints. Throws on an empty edge set.
double edge_homophily(const Graph& g);

/// Mean over nodes of (same-class neighbors / degree). Throws on isolated nodes.
double node_homophily(const Graph& g);

/// (1/(C−1)) Σ_k [h_k − |class k|/N]₊. Throws on isolated nodes or C < 2.
double class_homophily(const Graph& g);

// Similarity-based metrics ----------------------------------------------------

SimMatrix similarity_matrix(const Operator& op, const Matrix& signal,
                            SignalTag tag = SignalTag::kFeatures);

/// Fraction of nodes whose same-class mean similarity (the node itself
/// included) is at least their other-class mean. Throws ValidationError when
/// some node has no other-class node.
double aggregation_similarity(const SimMatrix& s, std::span<const int> class_ids);

/// Same quantity without materializing S: works from B = op·signal and
/// B (Bᵀ Z), O(N·K·C).
double aggregation_similarity(const Operator& op, const Matrix& signal, std::span<const int> class_ids);

/// [2·s − 1]₊
double modified_aggregation_similarity(double s_agg);
double modified_aggregation_similarity(const SimMatrix& s, std::span<const int> class_ids);

/// (H_agg, H_agg^M) of S(op, Z) with op built from the graph.
std::pair<double, double> aggregation_homophily(const Graph& g,
                                                OperatorKind kind = OperatorKind::kRandomWalkRenorm);

/// Fraction of nodes v whose row of S(I − op, signal) has same-class mean
/// ≥ 0 and other-class mean ≤ 0. `op` must be an affinity or identity
/// operator (not high-pass).
double diversification_distinguishability(const Operator& op, const Matrix& signal,
                                          std::span<const int> class_ids);

/// Reads the two conditions straight off an explicit S(I − Â, X).
double diversification_distinguishability(const SimMatrix& s_highpass, std::span<const int> class_ids);

/// All metrics on the full graph.
HomophilyReport homophily_report(const Graph& g, OperatorKind kind = OperatorKind::kRandomWalkRenorm);

/// Metrics computed on the subgraph induced by the labeled nodes in
/// `train_nodes`. Nodes left isolated by the restriction are skipped in the
/// node/class homophily averages. Throws ValidationError when the mask is
/// empty, covers fewer than two classes or induces no edges.
HomophilyReport estimate_metrics(const Graph& g, std::span<const int> train_nodes,
                                 OperatorKind kind = OperatorKind::kRandomWalkRenorm);

}  // namespace acm
