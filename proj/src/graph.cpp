#include "acm/graph.hpp"

#include "acm/error.hpp"

#include <algorithm>
#include <sstream>

namespace acm {

Graph::Graph(std::vector<Edge> edges, Matrix features, LabelMatrix labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  for (auto& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  const int n = num_nodes();
  adjacency_.assign(n, {});
  for (const auto& e : edges_) {
    if (e.u < 0 || e.v >= n || e.u == e.v) continue;
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());

  class_ids_.assign(labels_.rows(), -1);
  for (Eigen::Index i = 0; i < labels_.rows(); ++i) {
    for (Eigen::Index k = 0; k < labels_.cols(); ++k) {
      if (labels_(i, k) == 1) {
        class_ids_[i] = static_cast<int>(k);
        break;
      }
    }
  }
}

Graph Graph::checked(std::vector<Edge> edges, Matrix features, LabelMatrix labels) {
  Graph g(std::move(edges), std::move(features), std::move(labels));
  if (auto v = validate(g); !v.empty()) throw ValidationError(describe(v));
  return g;
}

LabelMatrix Graph::one_hot(std::span<const int> class_ids, int class_count) {
  LabelMatrix z = LabelMatrix::Zero(static_cast<Eigen::Index>(class_ids.size()), class_count);
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    const int c = class_ids[i];
    if (c < 0 || c >= class_count) {
      throw ValidationError("class id " + std::to_string(c) + " at row " + std::to_string(i) +
                            " outside [0, " + std::to_string(class_count) + ")");
    }
    z(static_cast<Eigen::Index>(i), c) = 1;
  }
  return z;
}

Matrix Graph::adjacency_matrix() const {
  const int n = num_nodes();
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : adjacency_[i]) a(i, j) = 1.0;
  }
  return a;
}

DegreeVector degrees(const Graph& g) {
  DegreeVector d(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) d[i] = static_cast<int>(g.neighbors()[i].size());
  return d;
}

bool has_isolated_nodes(const Graph& g) {
  return std::any_of(g.neighbors().begin(), g.neighbors().end(),
                     [](const auto& nb) { return nb.empty(); });
}

std::vector<Violation> validate(const Graph& g) {
  std::vector<Violation> out;
  const long n = g.num_nodes();
  if (g.labels().rows() != n) {
    out.push_back({"row-count", -1,
                   "features have " + std::to_string(n) + " rows, labels have " +
                       std::to_string(g.labels().rows())});
  }
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    const auto& e = g.edges()[k];
    if (e.u < 0 || e.v >= n) {
      out.push_back({"edge-range", static_cast<long>(k),
                     "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                         ") outside [0, " + std::to_string(n) + ")"});
    } else if (e.u == e.v) {
      out.push_back({"self-loop", static_cast<long>(k), "self-loop at node " + std::to_string(e.u)});
    }
  }
  const auto& z = g.labels();
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    bool binary = true;
    for (Eigen::Index k = 0; k < z.cols(); ++k) binary = binary && (z(i, k) == 0 || z(i, k) == 1);
    const long sum = z.row(i).cast<long>().sum();
    if (!binary || sum != 1) {
      out.push_back({"one-hot", static_cast<long>(i),
                     "label row " + std::to_string(i) + " sums to " + std::to_string(sum)});
    }
  }
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    if (k) os << "; ";
    os << violations[k].invariant << ": " << violations[k].detail;
  }
  return os.str();
}

Graph induced_subgraph(const Graph& g, std::span<const int> nodes) {
  std::vector<int> position(g.num_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) position[nodes[k]] = static_cast<int>(k);

  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const int a = position[e.u];
    const int b = position[e.v];
    if (a >= 0 && b >= 0) edges.push_back({a, b});
  }
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Matrix x(m, g.num_features());
  LabelMatrix z(m, g.class_count());
  for (Eigen::Index k = 0; k < m; ++k) {
    x.row(k) = g.features().row(nodes[k]);
    z.row(k) = g.labels().row(nodes[k]);
  }
  return Graph(std::move(edges), std::move(x), std::move(z));
}

Graph permute(const Graph& g, std::span<const int> perm) {
  std::vector<Edge> edges;
  edges.reserve(g.edges().size());
  for (const auto& e : g.edges()) edges.push_back({perm[e.u], perm[e.v]});
  Matrix x(g.num_nodes(), g.num_features());
  LabelMatrix z(g.num_nodes(), g.class_count());
  for (int i = 0; i < g.num_nodes(); ++i) {
    x.row(perm[i]) = g.features().row(i);
    z.row(perm[i]) = g.labels().row(i);
  }
  return Graph(std::move(edges), std::move(x), std::move(z));
}

}  // namespace acm
