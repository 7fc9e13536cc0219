#include "acm/synth.hpp"

#include "acm/error.hpp"
#include "acm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace acm {
namespace {

Matrix gaussian_features(const SynthConfig& cfg, Rng& rng) {
  const int n = cfg.classes * cfg.nodes_per_class;
  Matrix means(cfg.classes, cfg.feature_dim);
  for (int k = 0; k < cfg.classes; ++k) {
    Vector dir(cfg.feature_dim);
    do {
      for (int j = 0; j < cfg.feature_dim; ++j) dir(j) = rng.normal();
    } while (dir.norm() == 0.0);
    means.row(k) = cfg.separation * dir.normalized();
  }
  Matrix x(n, cfg.feature_dim);
  for (int i = 0; i < n; ++i) {
    const int k = i / cfg.nodes_per_class;
    for (int j = 0; j < cfg.feature_dim; ++j) x(i, j) = means(k, j) + cfg.sigma * rng.normal();
  }
  return x;
}

Matrix base_graph_features(const SynthConfig& cfg, Rng& rng) {
  const Graph base = load_graph_dir(cfg.base_graph);
  if (base.class_count() < cfg.classes) {
    throw ValidationError("base graph has " + std::to_string(base.class_count()) + " classes, need " +
                          std::to_string(cfg.classes));
  }
  std::vector<std::vector<int>> members(base.class_count());
  for (int v = 0; v < base.num_nodes(); ++v) members[base.class_of(v)].push_back(v);
  for (int k = 0; k < cfg.classes; ++k) {
    if (members[k].empty()) throw ValidationError("base graph class " + std::to_string(k) + " is empty");
  }
  const int n = cfg.classes * cfg.nodes_per_class;
  Matrix x(n, base.num_features());
  for (int i = 0; i < n; ++i) {
    const auto& pool = members[i / cfg.nodes_per_class];
    x.row(i) = base.features().row(pool[rng.index(pool.size())]);
  }
  return x;
}

// One row of Â_rw Z for a node with d sampled edges (self-loop included).
void sample_row(double h, int d, int c, int own, Rng& rng, std::vector<double>& row) {
  std::fill(row.begin(), row.end(), 0.0);
  row[own] = 1.0;
  for (int e = 0; e < d; ++e) {
    if (rng.uniform() < h) {
      row[own] += 1.0;
    } else {
      int k = static_cast<int>(rng.index(c - 1));
      if (k >= own) ++k;
      row[k] += 1.0;
    }
  }
  for (double& r : row) r /= d + 1;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

long inter_class_stubs(int d_intra, double h) { return static_cast<long>(d_intra / h - d_intra); }

void check_config(const SynthConfig& cfg) {
  if (!(cfg.h_target > 0.0 && cfg.h_target <= 1.0)) {
    throw ValidationError("h_target must lie in (0, 1], got " + std::to_string(cfg.h_target));
  }
  if (cfg.classes < 2) throw ValidationError("need at least 2 classes");
  if (cfg.nodes_per_class < 2) throw ValidationError("need at least 2 nodes per class");
  if (cfg.d_intra < 1) throw ValidationError("d_intra must be >= 1");
  if (inter_class_stubs(cfg.d_intra, cfg.h_target) < 0) throw ValidationError("negative inter-class stub count");
  if (cfg.feature_mode == FeatureMode::kGaussianMeans && cfg.feature_dim < 1) {
    throw ValidationError("feature_dim must be >= 1");
  }
  if (cfg.sigma < 0.0) throw ValidationError("sigma must be >= 0");
}

Graph generate(const SynthConfig& cfg) {
  check_config(cfg);
  Rng rng(cfg.seed);
  const int per = cfg.nodes_per_class;
  const int n = cfg.classes * per;
  const long inter = inter_class_stubs(cfg.d_intra, cfg.h_target);

  std::vector<Edge> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * (cfg.d_intra + inter));
  for (int v = 0; v < n; ++v) {
    const int start = (v / per) * per;
    for (int s = 0; s < cfg.d_intra; ++s) {
      int u = start + static_cast<int>(rng.index(per - 1));
      if (u >= v) ++u;
      stubs.push_back({std::min(u, v), std::max(u, v)});
    }
    for (long s = 0; s < inter; ++s) {
      int u = static_cast<int>(rng.index(n - per));
      if (u >= start) u += per;
      stubs.push_back({std::min(u, v), std::max(u, v)});
    }
  }

  Matrix x = cfg.feature_mode == FeatureMode::kGaussianMeans ? gaussian_features(cfg, rng)
                                                              : base_graph_features(cfg, rng);
  std::vector<int> ids(n);
  for (int v = 0; v < n; ++v) ids[v] = v / per;
  Graph g(std::move(stubs), std::move(x), Graph::one_hot(ids, cfg.classes));
  // Every node owns at least d_intra >= 1 stubs, so nobody ends up isolated.
  if (has_isolated_nodes(g)) throw std::logic_error("generate: isolated node");
  return g;
}

double g_of_h(double h, int d, int c) {
  if (d < 1 || c < 2 || !(h >= 0.0 && h <= 1.0)) {
    throw ValidationError("g(h) needs d >= 1, c >= 2 and h in [0, 1]");
  }
  const double num = (c - 1) * (h * d + 1) - (1 - h) * d;
  const double den = (c - 1) * (d + 1.0);
  return (num * num) / (den * den);
}

double optimal_h(int d_intra, int c) {
  if (d_intra < 1 || c < 2) throw ValidationError("optimal_h needs d_intra >= 1 and c >= 2");
  return static_cast<double>(d_intra) / (c * d_intra + c - 1);
}

Estimate monte_carlo_g(double h, int d, int c, long trials, std::uint64_t seed) {
  g_of_h(h, d, c);  // domain check
  if (trials < 1) throw ValidationError("trials must be >= 1");
  Rng rng(seed);
  std::vector<double> rv(c), r1(c), r2(c);
  double mean = 0.0;
  double m2 = 0.0;
  for (long t = 0; t < trials; ++t) {
    sample_row(h, d, c, 0, rng, rv);
    sample_row(h, d, c, 0, rng, r1);
    sample_row(h, d, c, 1, rng, r2);
    const double x = dot(rv, r1) - dot(rv, r2);
    const double delta = x - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (x - mean);
  }
  const double var = trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(trials))};
}

std::vector<OracleRow> default_oracle_grid() {
  return {{1.0 / 7.0, 14, 5}, {0.0, 3, 2}, {1.0, 4, 3}, {0.1, 10, 5}, {0.3, 6, 4},
          {0.5, 8, 2},        {0.9, 5, 5}, {0.05, 20, 10}, {1.0 / 3.0, 3, 2}, {0.7, 12, 6}};
}

std::vector<double> default_h_grid() {
  std::vector<double> out;
  for (int k = 1; k <= 10; ++k) out.push_back(k / 200.0);
  for (int k = 2; k <= 19; ++k) out.push_back(k / 20.0);
  return out;
}

Graph limitation_scenario(int small_clusters, int small_size, int big_size, std::uint64_t seed,
                          int links_per_node) {
  if (small_clusters < 2) throw ValidationError("need at least 2 small clusters");
  if (small_size < 2 || big_size < 2) throw ValidationError("clusters need at least 2 nodes");
  if (links_per_node < 1 || links_per_node > big_size) {
    throw ValidationError("links_per_node must lie in [1, big_size]");
  }
  Rng rng(seed);
  const int n = big_size + small_clusters * small_size;
  std::vector<int> ids(n, 0);
  std::vector<Edge> edges;
  auto clique = [&](int start, int size) {
    for (int a = start; a < start + size; ++a) {
      for (int b = a + 1; b < start + size; ++b) edges.push_back({a, b});
    }
  };
  clique(0, big_size);
  for (int s = 0; s < small_clusters; ++s) {
    const int start = big_size + s * small_size;
    clique(start, small_size);
    for (int v = start; v < start + small_size; ++v) {
      ids[v] = s + 1;
      std::vector<int> pool(big_size);
      for (int b = 0; b < big_size; ++b) pool[b] = b;
      for (int k = 0; k < links_per_node; ++k) {
        const auto j = k + static_cast<int>(rng.index(big_size - k));
        std::swap(pool[k], pool[j]);
        edges.push_back({pool[k], v});
      }
    }
  }
  LabelMatrix z = Graph::one_hot(ids, small_clusters + 1);
  Matrix x = z.cast<double>();
  return Graph::checked(std::move(edges), std::move(x), std::move(z));
}

}  // namespace acm
