// Command-line front end: metrics, filters, synth, nn, train, sweep, ablation.

#include "acm/error.hpp"
#include "acm/filters.hpp"
#include "acm/gradcheck.hpp"
#include "acm/graph.hpp"
#include "acm/harness.hpp"
#include "acm/metrics.hpp"
#include "acm/models.hpp"
#include "acm/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace acm;

std::string fmt(double x, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

OperatorKind operator_kind(const std::string& name) {
  const auto k = parse_operator_kind(name);
  if (!k) throw ValidationError("unknown operator kind '" + name + "'");
  return *k;
}

void apply_overrides(ModelConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
    set_option(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  check_config(cfg);
}

std::vector<double> parse_grid(const std::string& spec) {
  if (spec == "default") return default_h_grid();
  std::vector<double> out;
  for (const auto& part : split_list(spec)) {
    double h = 0.0;
    std::istringstream in(part);
    if (!(in >> h) || !in.eof()) throw ValidationError("bad grid value '" + part + "'");
    out.push_back(h);
  }
  if (out.empty()) throw ValidationError("empty grid");
  return out;
}

struct SynthFlags {
  int classes = 5;
  int per_class = 100;
  int d_intra = 2;
  int feature_dim = SynthConfig{}.feature_dim;
  double separation = SynthConfig{}.separation;
  std::string base_graph;

  void add(CLI::App* app) {
    app->add_option("--classes", classes, "number of classes")->capture_default_str();
    app->add_option("--per-class", per_class, "nodes per class")->capture_default_str();
    app->add_option("--d-intra", d_intra, "intra-class stubs per node")->capture_default_str();
    app->add_option("--feature-dim", feature_dim, "Gaussian feature dimension")->capture_default_str();
    app->add_option("--separation", separation, "norm of the class means")->capture_default_str();
    app->add_option("--base-graph", base_graph, "sample features from this graph directory instead");
  }

  SynthConfig config() const {
    SynthConfig c;
    c.classes = classes;
    c.nodes_per_class = per_class;
    c.d_intra = d_intra;
    c.feature_dim = feature_dim;
    c.separation = separation;
    if (!base_graph.empty()) {
      c.feature_mode = FeatureMode::kFromBaseGraph;
      c.base_graph = base_graph;
    }
    return c;
  }
};

std::vector<std::pair<std::string, double>> report_fields(const HomophilyReport& r) {
  return {{"h_edge", r.h_edge},     {"h_node", r.h_node},     {"h_class", r.h_class},
          {"h_agg", r.h_agg},       {"h_agg_mod", r.h_agg_mod}, {"s_agg_ax", r.s_agg_ax},
          {"s_agg_ix", r.s_agg_ix}, {"dd", r.dd}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterophily metrics, synthetic graphs and channel-mixing GNNs"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  // metrics -------------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "homophily metrics of a graph");
  metrics->require_subcommand(1);
  std::string graph_dir;
  std::string csv_path;
  std::string op_name = "a_rw_renorm";
  std::uint64_t seed = 0;

  auto* report = metrics->add_subcommand("report", "all metrics on the full graph");
  report->add_option("--graph", graph_dir, "directory with edges.txt, features.csv, labels.csv")->required();
  report->add_option("--csv", csv_path, "also write metric,value rows here");
  report->add_option("--op", op_name, "aggregation operator")->capture_default_str();

  double train_frac = 0.6;
  int n_seeds = 10;
  auto* estimate = metrics->add_subcommand("estimate", "metrics from training labels only, over random masks");
  estimate->add_option("--graph", graph_dir, "graph directory")->required();
  estimate->add_option("--train-frac", train_frac, "fraction of nodes in each mask")->capture_default_str();
  estimate->add_option("--seeds", n_seeds, "number of masks")->capture_default_str();
  estimate->add_option("--seed", seed, "base seed")->required();
  estimate->add_option("--csv", csv_path, "write metric,full,mean,std rows here");
  estimate->add_option("--op", op_name, "aggregation operator")->capture_default_str();

  // filters -------------------------------------------------------------------
  auto* filters = app.add_subcommand("filters", "graph operators");
  filters->require_subcommand(1);
  std::string kind_name = "a_rw_renorm";
  bool want_highpass = false;
  std::string out_path;
  auto* dump = filters->add_subcommand("dump", "write an operator as CSV");
  dump->add_option("--graph", graph_dir, "graph directory")->required();
  dump->add_option("--kind", kind_name, "operator kind")->capture_default_str();
  dump->add_flag("--highpass", want_highpass, "dump I minus the operator");
  dump->add_option("--out", out_path, "output file (default stdout)");

  // synth ---------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "synthetic graphs and the g(h) oracle");
  synth->require_subcommand(1);
  SynthFlags sflags;
  double h = 0.5;
  auto* make = synth->add_subcommand("make", "generate a graph with target edge homophily");
  make->add_option("--h", h, "target edge homophily in (0, 1]")->required();
  sflags.add(make);
  make->add_option("--seed", seed, "generator seed")->required();
  make->add_option("--out", out_path, "output directory")->required();

  int small_clusters = 3;
  int small_size = 5;
  int big_size = 50;
  auto* limit = synth->add_subcommand("limitation", "small clusters hanging off one big cluster");
  limit->add_option("--small-clusters", small_clusters)->capture_default_str();
  limit->add_option("--small-size", small_size)->capture_default_str();
  limit->add_option("--big-size", big_size)->capture_default_str();
  limit->add_option("--seed", seed, "generator seed")->required();
  limit->add_option("--out", out_path, "output directory")->required();

  std::string grid_name = "default";
  long trials = 100000;
  auto* oracle = synth->add_subcommand("oracle", "closed-form g(h) against Monte Carlo");
  oracle->add_option("--grid", grid_name, "'default' or h:d:c triples separated by commas")->capture_default_str();
  oracle->add_option("--trials", trials, "Monte Carlo samples per point")->capture_default_str();
  oracle->add_option("--seed", seed, "base seed")->required();
  oracle->add_option("--csv", csv_path, "also write the table here");

  // nn ------------------------------------------------------------------------
  auto* nn = app.add_subcommand("nn", "autodiff checks");
  nn->require_subcommand(1);
  auto* gradcheck = nn->add_subcommand("gradcheck", "finite differences against tape gradients");
  gradcheck->add_option("--seed", seed, "seed for the random inputs")->required();
  gradcheck->add_option("--csv", csv_path, "also write the table here");

  // train ---------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train one model on one graph");
  std::string config_path;
  std::string model_name;
  std::vector<std::string> sets;
  TrainOptions topts;
  train_cmd->add_option("--config", config_path, "key=value model config file");
  train_cmd->add_option("--model", model_name, "preset name (mlp2, gcn, acm-gcn, ...)");
  train_cmd->add_option("--set", sets, "override one config key (key=value)");
  train_cmd->add_option("--graph", graph_dir, "graph directory")->required();
  train_cmd->add_option("--seed", seed, "split and init seed")->required();
  train_cmd->add_option("--max-epochs", topts.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", topts.patience)->capture_default_str();
  train_cmd->add_option("--csv", csv_path, "write the per-epoch trajectory here");

  // sweep ---------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy across homophily levels on generated graphs");
  std::string models_list = "sgc1,gcn";
  int repeats = 3;
  int threads = 1;
  sweep_cmd->add_option("--grid", grid_name, "'default' or comma-separated h values")->capture_default_str();
  sweep_cmd->add_option("--models", models_list, "comma-separated presets")->capture_default_str();
  sweep_cmd->add_option("--repeats", repeats, "graphs per h")->capture_default_str();
  sweep_cmd->add_option("--set", sets, "override a config key for every model (key=value)");
  sweep_cmd->add_option("--out", out_path, "CSV output")->required();
  sweep_cmd->add_option("--seed", seed, "base seed")->required();
  sweep_cmd->add_option("--threads", threads, "worker threads")->capture_default_str();
  sweep_cmd->add_option("--max-epochs", topts.max_epochs)->capture_default_str();
  sweep_cmd->add_option("--patience", topts.patience)->capture_default_str();
  sflags.add(sweep_cmd);

  // ablation ------------------------------------------------------------------
  auto* ablation_cmd = app.add_subcommand("ablation", "channel and mixing toggles");
  std::string families = "sgc,gcn";
  bool with_timing = false;
  double ablation_h = 0.1;
  int ablation_repeats = 5;
  ablation_cmd->add_option("--families", families, "sgc, gcn or both")->capture_default_str();
  ablation_cmd->add_option("--graph", graph_dir, "use this graph (new split per repeat)");
  ablation_cmd->add_option("--h", ablation_h, "otherwise generate graphs at this homophily")->capture_default_str();
  ablation_cmd->add_option("--repeats", ablation_repeats)->capture_default_str();
  ablation_cmd->add_option("--set", sets, "override a config key (key=value)");
  ablation_cmd->add_option("--out", out_path, "CSV output")->required();
  ablation_cmd->add_option("--seed", seed, "base seed")->required();
  ablation_cmd->add_option("--threads", threads, "worker threads")->capture_default_str();
  ablation_cmd->add_flag("--with-timing", with_timing, "add per-epoch time columns (not reproducible)");
  ablation_cmd->add_option("--max-epochs", topts.max_epochs)->capture_default_str();
  ablation_cmd->add_option("--patience", topts.patience)->capture_default_str();
  sflags.add(ablation_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*report) {
      const Graph g = load_graph_dir(graph_dir);
      const HomophilyReport r = homophily_report(g, operator_kind(op_name));
      for (const auto& [name, value] : report_fields(r)) {
        std::cout << name << std::string(12 - name.size(), ' ') << fmt(value) << '\n';
      }
      if (!csv_path.empty()) {
        auto out = open_output(csv_path);
        out << "metric,value\n";
        for (const auto& [name, value] : report_fields(r)) out << name << ',' << fmt(value, "%.17g") << '\n';
      }
    } else if (*estimate) {
      if (!(train_frac > 0.0 && train_frac <= 1.0)) throw ValidationError("--train-frac must lie in (0, 1]");
      if (n_seeds < 1) throw ValidationError("--seeds must be >= 1");
      const Graph g = load_graph_dir(graph_dir);
      const OperatorKind kind = operator_kind(op_name);
      const auto full = report_fields(homophily_report(g, kind));
      const double rest = (1.0 - train_frac) / 2.0;
      std::vector<std::vector<double>> samples(full.size());
      for (int s = 0; s < n_seeds; ++s) {
        const SplitMasks m = split(g.num_nodes(), {train_frac, rest, rest}, derive_seed(seed, s));
        const auto est = report_fields(estimate_metrics(g, m.train, kind));
        for (std::size_t k = 0; k < est.size(); ++k) samples[k].push_back(est[k].second);
      }
      std::ofstream csv;
      if (!csv_path.empty()) {
        csv = open_output(csv_path);
        csv << "metric,full,mean,std\n";
      }
      std::cout << "metric      full      estimate (" << n_seeds << " masks, train " << fmt(train_frac, "%.2f") << ")\n";
      for (std::size_t k = 0; k < full.size(); ++k) {
        const Summary s = summarize(samples[k]);
        std::cout << full[k].first << std::string(12 - full[k].first.size(), ' ') << fmt(full[k].second, "%.4f")
                  << "    " << fmt(s.mean, "%.4f") << " ± " << fmt(s.std, "%.4f") << '\n';
        if (csv.is_open()) {
          csv << full[k].first << ',' << fmt(full[k].second) << ',' << fmt(s.mean) << ',' << fmt(s.std) << '\n';
        }
      }
    } else if (*dump) {
      const Graph g = load_graph_dir(graph_dir);
      Operator op = make_operator(g, operator_kind(kind_name));
      if (want_highpass) op = highpass(op);
      std::ofstream file;
      if (!out_path.empty()) file = open_output(out_path);
      std::ostream& out = out_path.empty() ? std::cout : file;
      const Matrix& m = op.matrix();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt(m(i, j), "%.17g");
        out << '\n';
      }
    } else if (*make) {
      SynthConfig cfg = sflags.config();
      cfg.h_target = h;
      cfg.seed = seed;
      const Graph g = generate(cfg);
      save_graph(g, out_path);
      std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges, h_edge "
                << fmt(edge_homophily(g), "%.4f") << " to " << out_path << '\n';
    } else if (*limit) {
      const Graph g = limitation_scenario(small_clusters, small_size, big_size, seed);
      save_graph(g, out_path);
      std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << out_path << '\n';
    } else if (*oracle) {
      std::vector<OracleRow> grid;
      if (grid_name == "default") {
        grid = default_oracle_grid();
      } else {
        for (const auto& part : split_list(grid_name)) {
          OracleRow row{};
          char c1 = 0;
          char c2 = 0;
          std::istringstream in(part);
          if (!(in >> row.h >> c1 >> row.d >> c2 >> row.c) || c1 != ':' || c2 != ':') {
            throw ValidationError("grid entries look like h:d:c, got '" + part + "'");
          }
          grid.push_back(row);
        }
      }
      std::ofstream csv;
      if (!csv_path.empty()) {
        csv = open_output(csv_path);
        csv << "h,d,c,g_closed_form,g_monte_carlo,stderr\n";
      }
      std::cout << "       h    d    C   g(h)        monte carlo  stderr\n";
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& r = grid[k];
        const double closed = g_of_h(r.h, r.d, r.c);
        const Estimate mc = monte_carlo_g(r.h, r.d, r.c, trials, derive_seed(seed, k));
        std::cout << fmt(r.h, "%8.4f") << fmt(r.d, "%5.0f") << fmt(r.c, "%5.0f") << "   " << fmt(closed, "%.6f")
                  << "    " << fmt(mc.mean, "%.6f") << "     " << fmt(mc.stderr_, "%.2e") << '\n';
        if (csv.is_open()) {
          csv << fmt(r.h, "%.17g") << ',' << r.d << ',' << r.c << ',' << fmt(closed, "%.17g") << ','
              << fmt(mc.mean, "%.17g") << ',' << fmt(mc.stderr_, "%.17g") << '\n';
        }
      }
    } else if (*gradcheck) {
      const auto rows = gradcheck_suite(seed);
      std::ofstream csv;
      if (!csv_path.empty()) {
        csv = open_output(csv_path);
        csv << "check,worst,bound,ok\n";
      }
      bool all_ok = true;
      for (const auto& r : rows) {
        std::cout << r.name << std::string(24 - std::min<std::size_t>(r.name.size(), 23), ' ') << fmt(r.worst, "%.3e")
                  << "  < " << fmt(r.bound, "%.0e") << (r.ok() ? "  ok" : "  FAIL") << '\n';
        if (csv.is_open()) csv << r.name << ',' << fmt(r.worst, "%.6e") << ',' << fmt(r.bound, "%.0e") << ',' << r.ok() << '\n';
        all_ok = all_ok && r.ok();
      }
      if (!all_ok) return 2;
    } else if (*train_cmd) {
      ModelConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ValidationError("cannot open " + config_path);
        std::stringstream text;
        text << in.rdbuf();
        cfg = from_text(text.str());
      } else if (!model_name.empty()) {
        cfg = preset(model_name);
      } else {
        throw ValidationError("train needs --config or --model");
      }
      apply_overrides(cfg, sets);
      const Graph g = load_graph_dir(graph_dir);
      const SplitMasks masks = split(g.num_nodes(), derive_seed(seed, 1));
      const TrainResult r = train(cfg, g, masks, topts, derive_seed(seed, 2));
      std::cout << "model " << (cfg.id.empty() ? to_string(cfg.family) : cfg.id) << ": best val "
                << fmt(r.best_val_acc, "%.4f") << " at epoch " << r.best_epoch << ", test " << fmt(r.test_acc, "%.4f")
                << ", " << r.epochs_run << " epochs, " << fmt(r.ms_per_epoch, "%.2f") << " ms/epoch\n";
      if (!csv_path.empty()) {
        auto out = open_output(csv_path);
        out << "epoch,train_loss,train_acc,val_acc,test_acc\n";
        for (int e = 0; e < r.epochs_run; ++e) {
          out << e << ',' << fmt(r.train_loss[e], "%.10f") << ',' << fmt(r.train_acc[e]) << ',' << fmt(r.val_acc[e])
              << ',' << fmt(r.test_acc_curve[e]) << '\n';
        }
      }
    } else if (*sweep_cmd) {
      SweepSpec spec;
      spec.h_grid = parse_grid(grid_name);
      for (const auto& name : split_list(models_list)) {
        ModelConfig cfg = preset(name);
        apply_overrides(cfg, sets);
        spec.models.push_back(cfg);
      }
      spec.repeats = repeats;
      spec.seed = seed;
      spec.synth = sflags.config();
      spec.train = topts;
      spec.threads = threads;
      const auto rows = sweep(spec);
      auto out = open_output(out_path);
      write_sweep_csv(out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    } else if (*ablation_cmd) {
      AblationSpec spec;
      spec.families.clear();
      for (const auto& f : split_list(families)) {
        if (f == "sgc") spec.families.push_back(Family::kSgc);
        else if (f == "gcn") spec.families.push_back(Family::kGcn);
        else throw ValidationError("unknown family '" + f + "' (sgc or gcn)");
      }
      if (!graph_dir.empty()) spec.graph = load_graph_dir(graph_dir);
      spec.synth = sflags.config();
      spec.synth.h_target = ablation_h;
      spec.repeats = ablation_repeats;
      spec.seed = seed;
      apply_overrides(spec.base, sets);
      spec.train = topts;
      spec.threads = threads;
      const auto rows = ablation(spec);
      auto out = open_output(out_path);
      write_ablation_csv(out, rows, with_timing);
      std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
