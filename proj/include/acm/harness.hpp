#pragma once

#include "acm/graph.hpp"
#include "acm/metrics.hpp"
#include "acm/models.hpp"
#include "acm/synth.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace acm {

struct SplitMasks {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Random partition: ⌊n·r_train⌋ train nodes, ⌊n·r_val⌋ validation nodes,
/// the rest test. Each list is sorted.
SplitMasks split(int n, std::array<double, 3> ratios, std::uint64_t seed);
inline SplitMasks split(int n, std::uint64_t seed) { return split(n, {0.6, 0.2, 0.2}, seed); }

struct TrainOptions {
  int max_epochs = 1000;
  /// Stop once this many consecutive epochs pass without a new best
  /// validation accuracy, plus one.
  int patience = 40;
};

struct TrainResult {
  double best_val_acc = 0;
  double test_acc = 0;  // at the best-validation epoch
  int best_epoch = 0;   // 0-based
  int epochs_run = 0;
  std::vector<double> train_loss;
  std::vector<double> train_acc;
  std::vector<double> val_acc;
  std::vector<double> test_acc_curve;
  /// Mixing weights of every ACM layer after the last epoch (evaluation mode).
  std::vector<Matrix> mixing;
  double ms_per_epoch = 0;
};

double accuracy(const Matrix& logits, std::span<const int> class_ids, std::span<const int> rows);

TrainResult train(const ModelConfig& cfg, const Graph& g, const SplitMasks& masks, const TrainOptions& options,
                  std::uint64_t seed);

struct Summary {
  double mean = 0;
  double std = 0;  // population
};
Summary summarize(std::span<const double> xs);

// Sweeps ----------------------------------------------------------------------

struct SweepSpec {
  std::vector<double> h_grid;
  std::vector<ModelConfig> models;
  int repeats = 10;
  std::uint64_t seed = 0;
  /// Template for generated graphs; h_target and seed are overwritten.
  SynthConfig synth;
  TrainOptions train;
  int threads = 1;
};

struct SweepRow {
  double h_target = 0;
  std::string model;
  Summary h_edge, h_node, h_class, h_agg, h_agg_mod;
  Summary acc;
  std::vector<double> accs;  // per repeat
  int repeats = 0;
};

/// One fresh graph and split per (h, repeat); every model trains on the same
/// graph and split. Rows ordered by (h, model).
std::vector<SweepRow> sweep(const SweepSpec& spec);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Ablation --------------------------------------------------------------------

struct AblationSpec {
  std::vector<Family> families{Family::kSgc, Family::kGcn};
  /// Use this graph for every repeat (new split each time) ...
  std::optional<Graph> graph;
  /// ... or generate a fresh one per repeat from this template.
  SynthConfig synth;
  int repeats = 5;
  std::uint64_t seed = 0;
  ModelConfig base;  // hyperparameters shared by all cells
  TrainOptions train;
  int threads = 1;
};

struct AblationRow {
  std::string family;
  std::string label;  // e.g. "acm-gcn[lp+hp+id;adaptive]"
  ModelConfig config;
  Summary acc;
  Summary ms_per_epoch;
  int repeats = 0;
};

/// The five channel/mixing settings for one family: {LP}, {LP,HP}+mix,
/// {LP,I}+mix, {LP,HP,I} summed, {LP,HP,I}+mix.
std::vector<ModelConfig> ablation_configs(Family family, const ModelConfig& base);

std::vector<AblationRow> ablation(const AblationSpec& spec);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows, bool with_timing);

/// Runs fn(0) … fn(count−1) on up to `threads` workers. fn must only write
/// to its own slot of any shared output.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace acm
