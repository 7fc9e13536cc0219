#include "acm/metrics.hpp"

#include "acm/error.hpp"

#include <algorithm>
#include <cmath>

namespace acm {
namespace {

int infer_classes(std::span<const int> ids) {
  int c = 0;
  for (int id : ids) {
    if (id < 0) throw ValidationError("negative class id");
    c = std::max(c, id + 1);
  }
  return c;
}

Matrix indicator(std::span<const int> ids, int c) {
  Matrix z = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), c);
  for (std::size_t i = 0; i < ids.size(); ++i) z(static_cast<Eigen::Index>(i), ids[i]) = 1.0;
  return z;
}

// Per-node class sums of a similarity matrix plus what is needed for the
// tie slack: R(v, k) = Σ_{u: class k} S_vu and diag(S).
struct ClassSums {
  Matrix r;
  Vector diag;
};

std::vector<long> class_sizes(std::span<const int> ids, int c) {
  std::vector<long> sizes(c, 0);
  for (int id : ids) ++sizes[id];
  return sizes;
}

void require_other_class(std::span<const int> ids, const std::vector<long>& sizes) {
  const long n = static_cast<long>(ids.size());
  for (std::size_t v = 0; v < ids.size(); ++v) {
    if (sizes[ids[v]] == n) {
      throw ValidationError("degenerate classes: node " + std::to_string(v) +
                            " has no node of another class");
    }
  }
}

enum class Rule { kAggregation, kDiversification };

double node_fraction(const ClassSums& cs, std::span<const int> ids, Rule rule) {
  const int c = static_cast<int>(cs.r.cols());
  const auto sizes = class_sizes(ids, c);
  require_other_class(ids, sizes);
  const long n = static_cast<long>(ids.size());
  const double tol = kTieTolerance * (cs.diag.size() ? cs.diag.cwiseAbs().maxCoeff() : 0.0);

  long hits = 0;
  for (long v = 0; v < n; ++v) {
    const int k = ids[v];
    const double total = cs.r.row(v).sum();
    const double same = cs.r(v, k) / static_cast<double>(sizes[k]);
    const double other = (total - cs.r(v, k)) / static_cast<double>(n - sizes[k]);
    const bool ok = rule == Rule::kAggregation ? same >= other - tol : (same >= -tol && other <= tol);
    if (ok) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

ClassSums sums_from_matrix(const Matrix& s, std::span<const int> ids) {
  if (s.rows() != s.cols() || s.rows() != static_cast<Eigen::Index>(ids.size())) {
    throw ValidationError("similarity matrix is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                          " but there are " + std::to_string(ids.size()) + " labels");
  }
  if (ids.size() < 2) throw ValidationError("need at least 2 nodes");
  return {s * indicator(ids, infer_classes(ids)), s.diagonal()};
}

// S = B Bᵀ is never formed: S Z = B (Bᵀ Z) and S_vv = ‖B_v‖².
ClassSums sums_from_factor(const Matrix& b, std::span<const int> ids) {
  if (b.rows() != static_cast<Eigen::Index>(ids.size())) {
    throw ValidationError("signal has " + std::to_string(b.rows()) + " rows but there are " +
                          std::to_string(ids.size()) + " labels");
  }
  if (ids.size() < 2) throw ValidationError("need at least 2 nodes");
  const Matrix z = indicator(ids, infer_classes(ids));
  const Matrix btz = b.transpose() * z;
  return {b * btz, b.rowwise().squaredNorm()};
}

Matrix propagate(const Operator& op, const Matrix& signal) {
  if (signal.rows() != op.size()) {
    throw ValidationError("operator is " + std::to_string(op.size()) + "x" + std::to_string(op.size()) +
                          " but signal has " + std::to_string(signal.rows()) + " rows");
  }
  return op.sparse() * signal;
}

// Counts of same-class neighbors per node.
std::vector<int> same_class_neighbors(const Graph& g) {
  std::vector<int> out(g.num_nodes(), 0);
  for (const auto& e : g.edges()) {
    if (g.class_of(e.u) == g.class_of(e.v)) {
      ++out[e.u];
      ++out[e.v];
    }
  }
  return out;
}

void require_no_isolated(const Graph& g, const char* metric) {
  if (has_isolated_nodes(g)) {
    throw ValidationError(std::string(metric) + " is undefined for graphs with isolated nodes");
  }
}

double node_homophily_impl(const Graph& g) {
  const auto d = degrees(g);
  const auto same = same_class_neighbors(g);
  double total = 0.0;
  long counted = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (d[v] == 0) continue;
    total += static_cast<double>(same[v]) / d[v];
    ++counted;
  }
  if (counted == 0) throw ValidationError("node homophily: no node has a neighbor");
  return total / static_cast<double>(counted);
}

double class_homophily_impl(const Graph& g) {
  const int c = g.class_count();
  if (c < 2) throw ValidationError("class homophily needs C >= 2");
  const auto d = degrees(g);
  const auto same = same_class_neighbors(g);
  std::vector<double> same_sum(c, 0.0);
  std::vector<double> degree_sum(c, 0.0);
  std::vector<long> size(c, 0);
  long n = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (d[v] == 0) continue;
    const int k = g.class_of(v);
    same_sum[k] += same[v];
    degree_sum[k] += d[v];
    ++size[k];
    ++n;
  }
  if (n == 0) throw ValidationError("class homophily: no node has a neighbor");
  double total = 0.0;
  for (int k = 0; k < c; ++k) {
    if (degree_sum[k] == 0.0) continue;  // empty class
    const double h_k = same_sum[k] / degree_sum[k];
    total += std::max(h_k - static_cast<double>(size[k]) / n, 0.0);
  }
  return total / (c - 1);
}

HomophilyReport report_impl(const Graph& g, OperatorKind kind) {
  HomophilyReport r;
  r.h_edge = edge_homophily(g);
  r.h_node = node_homophily_impl(g);
  r.h_class = class_homophily_impl(g);

  const Operator a = make_operator(g, kind);
  const auto& ids = g.class_ids();
  r.h_agg = aggregation_similarity(a, g.label_matrix(), ids);
  r.h_agg_mod = modified_aggregation_similarity(r.h_agg);

  const Matrix ax = propagate(a, g.features());
  r.s_agg_ax = node_fraction(sums_from_factor(ax, ids), ids, Rule::kAggregation);
  r.s_agg_ix = node_fraction(sums_from_factor(g.features(), ids), ids, Rule::kAggregation);
  r.dd = node_fraction(sums_from_factor(g.features() - ax, ids), ids, Rule::kDiversification);
  return r;
}

}  // namespace

double edge_homophily(const Graph& g) {
  if (g.num_edges() == 0) throw ValidationError("edge homophily is undefined for an empty edge set");
  long same = 0;
  for (const auto& e : g.edges()) {
    if (g.class_of(e.u) == g.class_of(e.v)) ++same;
  }
  return static_cast<double>(same) / g.num_edges();
}

double node_homophily(const Graph& g) {
  require_no_isolated(g, "node homophily");
  return node_homophily_impl(g);
}

double class_homophily(const Graph& g) {
  if (g.class_count() < 2) throw ValidationError("class homophily needs C >= 2");
  require_no_isolated(g, "class homophily");
  return class_homophily_impl(g);
}

SimMatrix similarity_matrix(const Operator& op, const Matrix& signal, SignalTag tag) {
  const Matrix b = propagate(op, signal);
  return {b * b.transpose(), op.name(), tag};
}

double aggregation_similarity(const SimMatrix& s, std::span<const int> class_ids) {
  return node_fraction(sums_from_matrix(s.matrix, class_ids), class_ids, Rule::kAggregation);
}

double aggregation_similarity(const Operator& op, const Matrix& signal, std::span<const int> class_ids) {
  return node_fraction(sums_from_factor(propagate(op, signal), class_ids), class_ids, Rule::kAggregation);
}

double modified_aggregation_similarity(double s_agg) { return std::max(2.0 * s_agg - 1.0, 0.0); }

double modified_aggregation_similarity(const SimMatrix& s, std::span<const int> class_ids) {
  return modified_aggregation_similarity(aggregation_similarity(s, class_ids));
}

std::pair<double, double> aggregation_homophily(const Graph& g, OperatorKind kind) {
  const double h = aggregation_similarity(make_operator(g, kind), g.label_matrix(), g.class_ids());
  return {h, modified_aggregation_similarity(h)};
}

double diversification_distinguishability(const Operator& op, const Matrix& signal,
                                          std::span<const int> class_ids) {
  if (op.is_highpass() || is_laplacian(op.kind())) {
    throw ValidationError("DD takes the low-pass operator, got " + op.name());
  }
  const Matrix b = signal - propagate(op, signal);
  return node_fraction(sums_from_factor(b, class_ids), class_ids, Rule::kDiversification);
}

double diversification_distinguishability(const SimMatrix& s_highpass, std::span<const int> class_ids) {
  return node_fraction(sums_from_matrix(s_highpass.matrix, class_ids), class_ids, Rule::kDiversification);
}

HomophilyReport homophily_report(const Graph& g, OperatorKind kind) {
  if (g.class_count() < 2) throw ValidationError("metrics need C >= 2");
  require_no_isolated(g, "homophily report");
  return report_impl(g, kind);
}

HomophilyReport estimate_metrics(const Graph& g, std::span<const int> train_nodes, OperatorKind kind) {
  if (train_nodes.empty()) throw ValidationError("degenerate mask: no training nodes");
  std::vector<char> seen(g.num_nodes(), 0);
  std::vector<char> classes(g.class_count(), 0);
  for (int v : train_nodes) {
    if (v < 0 || v >= g.num_nodes()) throw ValidationError("mask node " + std::to_string(v) + " out of range");
    if (seen[v]) throw ValidationError("mask lists node " + std::to_string(v) + " twice");
    seen[v] = 1;
    classes[g.class_of(v)] = 1;
  }
  if (std::count(classes.begin(), classes.end(), 1) < 2) {
    throw ValidationError("degenerate mask: training nodes cover fewer than 2 classes");
  }
  const Graph sub = induced_subgraph(g, train_nodes);
  if (sub.num_edges() == 0) throw ValidationError("degenerate mask: no edge between training nodes");
  return report_impl(sub, kind);
}

}  // namespace acm
