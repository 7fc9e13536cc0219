#include "acm/harness.hpp"

#include "acm/error.hpp"
#include "acm/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

namespace acm {
namespace {

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string channel_label(Channels c) {
  std::string out;
  for (auto [on, name] : {std::pair{c.low, "lp"}, std::pair{c.high, "hp"}, std::pair{c.identity, "id"}}) {
    if (!on) continue;
    if (!out.empty()) out += '+';
    out += name;
  }
  return out;
}

}  // namespace

SplitMasks split(int n, std::array<double, 3> ratios, std::uint64_t seed) {
  if (n < 0) throw ValidationError("split: negative node count");
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ValidationError("split: ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ValidationError("split: ratios must sum to 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  // The small slack keeps products like 10·0.6 from landing just below an
  // integer.
  const auto n_train = static_cast<std::size_t>(std::floor(n * ratios[0] + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1] + 1e-9));
  SplitMasks m;
  m.train.assign(perm.begin(), perm.begin() + n_train);
  m.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  m.test.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

double accuracy(const Matrix& logits, std::span<const int> class_ids, std::span<const int> rows) {
  if (rows.empty()) return 0.0;
  long hits = 0;
  for (int i : rows) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (best == class_ids[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

TrainResult train(const ModelConfig& cfg, const Graph& g, const SplitMasks& masks, const TrainOptions& options,
                  std::uint64_t seed) {
  if (masks.train.empty()) throw ValidationError("train: empty training set");
  if (options.max_epochs < 1 || options.patience < 0) throw ValidationError("train: bad epoch limits");
  Model model = build(cfg, g, derive_seed(seed, 1));
  Rng dropout_rng(derive_seed(seed, 2));
  AdamState adam;
  auto& params = model.parameters();
  const auto& ids = g.class_ids();

  TrainResult r;
  double best_val = -1.0;
  double total_ms = 0.0;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& p : params) p.zero_grad();
    double loss_value = 0.0;
    {
      Tape tape;
      const Tensor logits = model.forward(tape, true, dropout_rng);
      Tensor loss = tape.softmax_cross_entropy(logits, ids, masks.train);
      loss_value = loss.value()(0, 0);
      if (cfg.weight_decay > 0.0) {
        for (const auto& p : params) loss = tape.add(loss, tape.scale(tape.sum_squares(p), 0.5 * cfg.weight_decay));
      }
      tape.backward(loss);
    }
    adam_step(params, adam, cfg.lr);
    total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(loss_value)) throw NumericError("train: loss became non-finite at epoch " + std::to_string(epoch));

    Matrix logits;
    {
      Tape tape;
      logits = model.forward(tape, false, dropout_rng).value();
    }
    if (!logits.allFinite()) throw NumericError("train: non-finite logits at epoch " + std::to_string(epoch));
    r.train_loss.push_back(loss_value);
    r.train_acc.push_back(accuracy(logits, ids, masks.train));
    r.val_acc.push_back(accuracy(logits, ids, masks.val));
    r.test_acc_curve.push_back(accuracy(logits, ids, masks.test));
    r.epochs_run = epoch + 1;

    if (r.val_acc.back() > best_val) {
      best_val = r.val_acc.back();
      r.best_epoch = epoch;
      r.best_val_acc = best_val;
      r.test_acc = r.test_acc_curve.back();
    } else if (epoch - r.best_epoch > options.patience) {
      break;
    }
  }
  r.mixing = model.mixing_weights();
  r.ms_per_epoch = total_ms / r.epochs_run;
  return r;
}

Summary summarize(std::span<const double> xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(threads, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  if (spec.h_grid.empty() || spec.models.empty()) throw ValidationError("sweep: empty grid or model list");
  if (spec.repeats < 1) throw ValidationError("sweep: repeats must be >= 1");
  for (const auto& m : spec.models) check_config(m);

  const int n_h = static_cast<int>(spec.h_grid.size());
  const int n_m = static_cast<int>(spec.models.size());
  struct Cell {
    HomophilyReport report;
    std::vector<double> acc;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(n_h) * spec.repeats);

  parallel_for(static_cast<int>(cells.size()), spec.threads, [&](int index) {
    const int hi = index / spec.repeats;
    const int rep = index % spec.repeats;
    SynthConfig sc = spec.synth;
    sc.h_target = spec.h_grid[hi];
    sc.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(hi), static_cast<std::uint64_t>(rep));
    const Graph g = generate(sc);
    Cell& cell = cells[index];
    cell.report = homophily_report(g);
    const SplitMasks masks = split(g.num_nodes(), derive_seed(sc.seed, 1));
    for (int m = 0; m < n_m; ++m) {
      cell.acc.push_back(train(spec.models[m], g, masks, spec.train, derive_seed(sc.seed, 2)).test_acc);
    }
  });

  std::vector<SweepRow> rows;
  for (int hi = 0; hi < n_h; ++hi) {
    std::vector<double> he, hn, hc, ha, hm;
    for (int rep = 0; rep < spec.repeats; ++rep) {
      const auto& r = cells[hi * spec.repeats + rep].report;
      he.push_back(r.h_edge);
      hn.push_back(r.h_node);
      hc.push_back(r.h_class);
      ha.push_back(r.h_agg);
      hm.push_back(r.h_agg_mod);
    }
    for (int m = 0; m < n_m; ++m) {
      SweepRow row;
      row.h_target = spec.h_grid[hi];
      row.model = spec.models[m].id;
      row.h_edge = summarize(he);
      row.h_node = summarize(hn);
      row.h_class = summarize(hc);
      row.h_agg = summarize(ha);
      row.h_agg_mod = summarize(hm);
      for (int rep = 0; rep < spec.repeats; ++rep) row.accs.push_back(cells[hi * spec.repeats + rep].acc[m]);
      row.acc = summarize(row.accs);
      row.repeats = spec.repeats;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "h_target,h_edge,h_node,h_class,h_agg,h_agg_mod,model,acc_mean,acc_std,repeats\n";
  for (const auto& r : rows) {
    out << fixed(r.h_target) << ',' << fixed(r.h_edge.mean) << ',' << fixed(r.h_node.mean) << ','
        << fixed(r.h_class.mean) << ',' << fixed(r.h_agg.mean) << ',' << fixed(r.h_agg_mod.mean) << ',' << r.model
        << ',' << fixed(r.acc.mean) << ',' << fixed(r.acc.std) << ',' << r.repeats << '\n';
  }
}

std::vector<ModelConfig> ablation_configs(Family family, const ModelConfig& base) {
  if (family != Family::kSgc && family != Family::kGcn) {
    throw ValidationError("ablation: families are sgc and gcn, got " + to_string(family));
  }
  const std::vector<std::pair<Channels, Mixing>> settings{
      {{true, false, false}, Mixing::kSum},
      {{true, true, false}, Mixing::kAdaptive},
      {{true, false, true}, Mixing::kAdaptive},
      {kAllChannels, Mixing::kSum},
      {kAllChannels, Mixing::kAdaptive},
  };
  std::vector<ModelConfig> out;
  for (const auto& [channels, mixing] : settings) {
    ModelConfig cfg = base;
    cfg.family = family;
    cfg.depth = family == Family::kSgc ? 1 : 2;
    cfg.variant = AcmVariant::kAcm;
    cfg.channels = channels;
    cfg.mixing = mixing;
    const std::string name = family == Family::kSgc ? "sgc1" : "gcn";
    cfg.id = channels.count() == 1 ? name : "acm-" + name;
    cfg.id += "[" + channel_label(channels) + ";" + to_string(mixing) + "]";
    check_config(cfg);
    out.push_back(cfg);
  }
  return out;
}

std::vector<AblationRow> ablation(const AblationSpec& spec) {
  if (spec.repeats < 1) throw ValidationError("ablation: repeats must be >= 1");
  std::vector<ModelConfig> configs;
  for (Family f : spec.families) {
    for (auto& c : ablation_configs(f, spec.base)) configs.push_back(std::move(c));
  }
  const int n_c = static_cast<int>(configs.size());
  struct Cell {
    std::vector<double> acc;
    std::vector<double> ms;
  };
  std::vector<Cell> cells(spec.repeats);
  parallel_for(spec.repeats, spec.threads, [&](int rep) {
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(rep));
    Graph g;
    if (spec.graph) {
      g = *spec.graph;
    } else {
      SynthConfig sc = spec.synth;
      sc.seed = seed;
      g = generate(sc);
    }
    const SplitMasks masks = split(g.num_nodes(), derive_seed(seed, 1));
    for (int c = 0; c < n_c; ++c) {
      const TrainResult r = train(configs[c], g, masks, spec.train, derive_seed(seed, 2));
      cells[rep].acc.push_back(r.test_acc);
      cells[rep].ms.push_back(r.ms_per_epoch);
    }
  });

  std::vector<AblationRow> rows;
  for (int c = 0; c < n_c; ++c) {
    std::vector<double> acc, ms;
    for (const auto& cell : cells) {
      acc.push_back(cell.acc[c]);
      ms.push_back(cell.ms[c]);
    }
    AblationRow row;
    row.family = to_string(configs[c].family);
    row.label = configs[c].id;
    row.config = configs[c];
    row.acc = summarize(acc);
    row.ms_per_epoch = summarize(ms);
    row.repeats = spec.repeats;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows, bool with_timing) {
  out << "family,model,channels,mixing,acc_mean,acc_std,repeats";
  if (with_timing) out << ",ms_per_epoch_mean,ms_per_epoch_std";
  out << '\n';
  for (const auto& r : rows) {
    out << r.family << ',' << r.label << ',' << channel_label(r.config.channels) << ','
        << to_string(r.config.mixing) << ',' << fixed(r.acc.mean) << ',' << fixed(r.acc.std) << ',' << r.repeats;
    if (with_timing) out << ',' << fixed(r.ms_per_epoch.mean) << ',' << fixed(r.ms_per_epoch.std);
    out << '\n';
  }
}

}  // namespace acm
