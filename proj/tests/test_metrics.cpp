#include "doctest.h"
#include "oracle/brute_metrics.hpp"
#include "test_util.hpp"

#include "acm/error.hpp"
#include "acm/metrics.hpp"
#include "acm/synth.hpp"

#include <cmath>

using namespace acm;
using namespace testutil;

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

TEST_CASE("label/structure metrics on the small examples") {
  const Graph tri = triangle();
  CHECK(edge_homophily(tri) == doctest::Approx(1.0 / 3));
  CHECK(node_homophily(tri) == doctest::Approx(1.0 / 3));
  CHECK(class_homophily(tri) == 0.0);

  const Graph same = make({{0, 1}, {1, 2}}, {0, 0, 0}, 1);
  CHECK(edge_homophily(same) == 1.0);
  CHECK(node_homophily(same) == 1.0);
  CHECK_THROWS_AS(class_homophily(same), ValidationError);

  const Graph k = k33();
  CHECK(edge_homophily(k) == 0.0);
  CHECK(node_homophily(k) == 0.0);
  CHECK(class_homophily(k) == 0.0);
}

TEST_CASE("metric errors") {
  const Graph empty = make({}, {0, 1}, 2);
  CHECK_THROWS_AS(edge_homophily(empty), ValidationError);
  const Graph iso = make({{0, 1}}, {0, 1, 0}, 2);
  CHECK_THROWS_AS(node_homophily(iso), ValidationError);
  CHECK_THROWS_AS(class_homophily(iso), ValidationError);
  const Graph same = make({{0, 1}, {1, 2}}, {0, 0, 0}, 2);
  CHECK_THROWS_AS(aggregation_homophily(same), ValidationError);
  CHECK_THROWS_AS(similarity_matrix(identity_operator(3), Matrix::Ones(4, 2)), ValidationError);
}

TEST_CASE("similarity matrix examples") {
  const Graph k = k33();
  const Matrix z = k.label_matrix();
  CHECK(similarity_matrix(identity_operator(6), z).matrix == z * z.transpose());

  const SimMatrix s = similarity_matrix(affinity(k, OperatorKind::kRandomWalkRenorm), z, SignalTag::kLabels);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double want = (i < 3) == (j < 3) ? 10.0 / 16 : 6.0 / 16;
      CHECK(s.matrix(i, j) == want);
    }
  }
  CHECK(s.signal == SignalTag::kLabels);
  CHECK(s.operator_name == "a_rw_renorm");

  CHECK(similarity_matrix(affinity(k, OperatorKind::kRandomWalkRenorm), Matrix::Zero(6, 3)).matrix.isZero(0));
}

TEST_CASE("aggregation similarity examples") {
  const Graph k = k33();
  const auto ids = k.class_ids();
  const SimMatrix s = similarity_matrix(affinity(k, OperatorKind::kRandomWalkRenorm), k.label_matrix());
  CHECK(aggregation_similarity(s, ids) == 1.0);

  SimMatrix flat{Matrix::Constant(6, 6, 0.3), "x", SignalTag::kFeatures};
  CHECK(aggregation_similarity(flat, ids) == 1.0);

  CHECK(aggregation_similarity(similarity_matrix(identity_operator(6), k.label_matrix()), ids) == 1.0);

  CHECK(modified_aggregation_similarity(1.0) == 1.0);
  CHECK(modified_aggregation_similarity(0.5) == 0.0);
  CHECK(modified_aggregation_similarity(0.75) == 0.5);
  CHECK(modified_aggregation_similarity(0.2) == 0.0);

  const auto [h, hm] = aggregation_homophily(k);
  CHECK(h == 1.0);
  CHECK(hm == 1.0);
}

TEST_CASE("harmful heterophily at the generator's optimum is visible, high h is not") {
  SynthConfig cfg;
  cfg.classes = 5;
  cfg.nodes_per_class = 120;
  cfg.h_target = 0.9;
  cfg.seed = 4;
  CHECK(aggregation_homophily(generate(cfg)).second > 0.9);
}

TEST_CASE("diversification distinguishability") {
  Rng rng(21);
  const Graph g = random_graph(12, 2, 3, 0.3, rng);
  const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);
  CHECK(diversification_distinguishability(a, g.label_matrix(), g.class_ids()) == 1.0);
  CHECK(diversification_distinguishability(a, Matrix::Zero(12, 3), g.class_ids()) == 1.0);
  CHECK_THROWS_AS(diversification_distinguishability(highpass(a), g.label_matrix(), g.class_ids()),
                  ValidationError);

  const Graph lim = limitation_scenario(2, 5, 50, 8);
  CHECK(lim.class_count() == 3);
  const Operator al = affinity(lim, OperatorKind::kRandomWalkRenorm);
  CHECK(diversification_distinguishability(al, lim.label_matrix(), lim.class_ids()) < 1.0);
}

TEST_CASE("Theorem 2: DD is exactly one for two classes") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const int n = 6 + static_cast<int>(rng.index(35));
    const Graph g = random_graph(n, 2, 1, rng.uniform(0.05, 0.5), rng);
    const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);
    CHECK(diversification_distinguishability(a, g.label_matrix(), g.class_ids()) == 1.0);
  }
}

TEST_CASE("optimized paths match the brute-force oracle") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const int n = 4 + static_cast<int>(rng.index(37));
    const int c = 2 + static_cast<int>(rng.index(3));
    const Graph g = random_graph(n, c, 1 + static_cast<int>(rng.index(5)), rng.uniform(0.05, 0.4), rng);
    const auto ids = g.class_ids();
    const Operator a = affinity(g, OperatorKind::kRandomWalkRenorm);
    const Matrix ab = brute::a_rw_renorm(g);
    CHECK((a.matrix() - ab).cwiseAbs().maxCoeff() < 1e-15);

    CHECK(edge_homophily(g) == doctest::Approx(brute::edge_homophily(g)).epsilon(1e-12));
    CHECK(std::abs(node_homophily(g) - brute::node_homophily(g)) < 1e-10);
    CHECK(std::abs(class_homophily(g) - brute::class_homophily(g)) < 1e-10);

    const Matrix sz = brute::similarity(ab, g.label_matrix());
    const Matrix sx = brute::similarity(ab, g.features());
    CHECK((similarity_matrix(a, g.features()).matrix - sx).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(aggregation_similarity(similarity_matrix(a, g.label_matrix()), ids) ==
          brute::aggregation_similarity(sz, g));
    CHECK(aggregation_similarity(a, g.label_matrix(), ids) == brute::aggregation_similarity(sz, g));
    CHECK(aggregation_similarity(a, g.features(), ids) == brute::aggregation_similarity(sx, g));

    const Matrix hp = brute::identity_minus(ab);
    const Matrix sh = brute::similarity(hp, g.features());
    CHECK(diversification_distinguishability(a, g.features(), ids) == brute::dd(sh, g));
    CHECK(diversification_distinguishability(similarity_matrix(highpass(a), g.features()), ids) ==
          brute::dd(sh, g));
  }
}

TEST_CASE("report fields are ratios and consistent") {
  Rng rng(41);
  for (int t = 0; t < 30; ++t) {
    const Graph g = random_graph(5 + static_cast<int>(rng.index(30)), 3, 4, 0.2, rng);
    const HomophilyReport r = homophily_report(g);
    for (double v : {r.h_edge, r.h_node, r.h_class, r.h_agg, r.h_agg_mod, r.s_agg_ax, r.s_agg_ix, r.dd}) {
      CHECK(in_unit(v));
    }
    CHECK(r.h_agg_mod == std::max(2.0 * r.h_agg - 1.0, 0.0));
    CHECK(r.h_edge == edge_homophily(g));
  }
}

TEST_CASE("estimate_metrics") {
  Rng rng(43);
  const Graph g = random_graph(30, 3, 4, 0.2, rng);
  std::vector<int> all(30);
  for (int i = 0; i < 30; ++i) all[i] = i;
  const HomophilyReport full = homophily_report(g);
  const HomophilyReport est = estimate_metrics(g, all);
  CHECK(est.h_edge == full.h_edge);
  CHECK(est.h_node == full.h_node);
  CHECK(est.h_class == full.h_class);
  CHECK(est.h_agg == full.h_agg);
  CHECK(est.h_agg_mod == full.h_agg_mod);
  CHECK(est.s_agg_ax == full.s_agg_ax);
  CHECK(est.s_agg_ix == full.s_agg_ix);
  CHECK(est.dd == full.dd);

  std::vector<int> one_class;
  for (int i = 0; i < 30; ++i) {
    if (g.class_of(i) == 0) one_class.push_back(i);
  }
  CHECK_THROWS_AS(estimate_metrics(g, one_class), ValidationError);
  CHECK_THROWS_AS(estimate_metrics(g, std::vector<int>{}), ValidationError);
  CHECK_THROWS_AS(estimate_metrics(g, std::vector<int>{0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(estimate_metrics(g, std::vector<int>{0, 30}), ValidationError);
}

TEST_CASE("estimated metrics ignore nodes the mask isolates") {
  // Path 0-1-2-3 with node 3 hanging off 2; masking out 2 strands 3.
  const Graph g = make({{0, 1}, {1, 2}, {2, 3}}, {0, 1, 0, 1}, 2);
  const HomophilyReport r = estimate_metrics(g, std::vector<int>{0, 1, 3});
  CHECK(r.h_edge == 0.0);
  CHECK(r.h_node == 0.0);
}

TEST_CASE("aggregation similarity is at least one half on average") {
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.nodes_per_class = 20;
  cfg.h_target = 0.2;
  std::vector<double> values;
  for (int s = 0; s < 50; ++s) {
    cfg.seed = 1000 + s;
    values.push_back(aggregation_homophily(generate(cfg)).first);
  }
  double mean = 0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (values.size() - 1)) / std::sqrt(double(values.size()));
  CHECK(mean >= 0.5 - 2 * se);
}
