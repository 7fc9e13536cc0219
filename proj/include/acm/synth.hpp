#pragma once

#include "acm/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace acm {

enum class FeatureMode { kGaussianMeans, kFromBaseGraph };

struct SynthConfig {
  double h_target = 0.5;
  int classes = 5;
  int nodes_per_class = 400;
  int d_intra = 2;
  std::uint64_t seed = 0;
  FeatureMode feature_mode = FeatureMode::kGaussianMeans;
  std::filesystem::path base_graph;  // directory for kFromBaseGraph

  // gaussian_means: class k ~ Normal(μ_k, σ²I), ‖μ_k‖ = separation.
  int feature_dim = 16;
  double separation = 2.0;
  double sigma = 1.0;
};

/// Inter-class stubs per node: ⌊d_intra/h − d_intra⌋ (truncated).
long inter_class_stubs(int d_intra, double h);

/// Throws ValidationError when cfg is unusable.
void check_config(const SynthConfig& cfg);

/// Node i belongs to class i / nodes_per_class. Each node draws d_intra
/// same-class endpoints (itself excluded) and inter_class_stubs() endpoints
/// among all other-class nodes, uniformly with replacement; the stubs are
/// symmetrized and repeated pairs collapse.
Graph generate(const SynthConfig& cfg);

/// ((c−1)(hd+1) − (1−h)d)² / ((c−1)(d+1))²
double g_of_h(double h, int d, int c);

/// d_intra / (c·d_intra + c − 1), the zero of g.
double optimal_h(int d_intra, int c);

struct Estimate {
  double mean = 0;
  double stderr_ = 0;
};

/// Samples S(Â_rw, Z)_{v,u1} − S(Â_rw, Z)_{v,u2} under the i.i.d. edge model:
/// every node has d edges, each to its own class with probability h and
/// otherwise to one of the other c − 1 classes uniformly.
Estimate monte_carlo_g(double h, int d, int c, long trials, std::uint64_t seed);

struct OracleRow {
  double h;
  int d;
  int c;
};

/// Ten (h, d, C) points, including (1/7, 14, 5).
std::vector<OracleRow> default_oracle_grid();

/// {0.005, 0.010, …, 0.05} ∪ {0.05, 0.10, …, 0.95}: 28 levels, ascending.
std::vector<double> default_h_grid();

/// Complete clusters: one big cluster (label 0) and `small_clusters` small
/// ones (labels 1..k). Every small-cluster node is also linked to
/// `links_per_node` distinct random big-cluster nodes. Features are the
/// one-hot labels.
Graph limitation_scenario(int small_clusters, int small_size, int big_size, std::uint64_t seed,
                          int links_per_node = 2);

}  // namespace acm
