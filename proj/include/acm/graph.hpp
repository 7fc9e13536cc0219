#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace acm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Unordered node pair stored with u < v (self-loops keep u == v so that
/// validate() can report them).
struct Edge {
  int u = 0;
  int v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using DegreeVector = std::vector<int>;

struct Violation {
  std::string invariant;
  long index = -1;  // offending row / edge position, -1 when global
  std::string detail;
};

/// Undirected, unweighted graph with dense node features and one-hot labels.
///
/// The constructor canonicalizes the edge list (orders endpoints, drops
/// duplicates) but does not reject bad data; call validate() or build through
/// Graph::checked() / load_graph() to get a graph whose invariants hold.
/// Immutable after construction.
class Graph {
 public:
  Graph() = default;
  Graph(std::vector<Edge> edges, Matrix features, LabelMatrix labels);

  /// Same as the constructor, but throws ValidationError listing every
  /// violation when the result is not a valid graph.
  static Graph checked(std::vector<Edge> edges, Matrix features, LabelMatrix labels);

  /// Builds labels from class ids (one-hot with `class_count` columns).
  static LabelMatrix one_hot(std::span<const int> class_ids, int class_count);

  int num_nodes() const { return static_cast<int>(features_.rows()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_features() const { return static_cast<int>(features_.cols()); }
  int class_count() const { return static_cast<int>(labels_.cols()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const LabelMatrix& labels() const { return labels_; }

  /// Neighbor lists (sorted). Only valid in-range, non-loop edges contribute.
  const std::vector<std::vector<int>>& neighbors() const { return adjacency_; }

  /// Class id of node i (column of the first 1 in its label row, -1 if none).
  int class_of(int i) const { return class_ids_[i]; }
  const std::vector<int>& class_ids() const { return class_ids_; }

  /// Labels as a real matrix Z for use in algebra.
  Matrix label_matrix() const { return labels_.cast<double>(); }

  /// Dense symmetric 0/1 adjacency matrix.
  Matrix adjacency_matrix() const;

 private:
  std::vector<Edge> edges_;
  Matrix features_;
  LabelMatrix labels_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> class_ids_;
};

DegreeVector degrees(const Graph& g);

/// Empty iff every Graph invariant holds.
std::vector<Violation> validate(const Graph& g);

std::string describe(const std::vector<Violation>& violations);

/// True when some node has degree 0.
bool has_isolated_nodes(const Graph& g);

/// Subgraph induced by `nodes` (in the given order); node k of the result is
/// nodes[k] of the input.
Graph induced_subgraph(const Graph& g, std::span<const int> nodes);

/// Relabels nodes: node i of the input becomes node perm[i] of the result.
Graph permute(const Graph& g, std::span<const int> perm);

// File I/O ------------------------------------------------------------------

struct LoadOptions {
  bool features_header = false;
  /// Declared number of classes for class-id label files; 0 means max id + 1.
  int class_count = 0;
};

/// Reads the three graph files. Throws ValidationError on parse errors
/// (with line number), dimension mismatches, self-loops and non one-hot
/// labels.
Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, const LoadOptions& options = {});

/// Conventional layout used by the CLI: edges.txt, features.csv, labels.csv.
Graph load_graph_dir(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes edges.txt (one "u v" per undirected edge), features.csv (17
/// significant digits, so values round-trip bit-exactly) and labels.csv
/// (one-hot rows).
void save_graph(const Graph& g, const std::filesystem::path& dir);

}  // namespace acm
