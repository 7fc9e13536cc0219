#pragma once

#include "acm/filters.hpp"
#include "acm/graph.hpp"
#include "acm/nn.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace acm {

enum class Family { kMlp, kSgc, kGcn, kSnowball };
enum class Mixing { kAdaptive, kSum };
enum class AcmVariant { kNone, kAcm, kAcmii };

/// Active filterbank channels, always visited in the order LP, HP, identity.
struct Channels {
  bool low = true;
  bool high = false;
  bool identity = false;

  int count() const { return int{low} + int{high} + int{identity}; }
  friend bool operator==(const Channels&, const Channels&) = default;
};

inline constexpr Channels kAllChannels{true, true, true};

struct ModelConfig {
  std::string id;  // free-form label used in CSV output
  Family family = Family::kGcn;
  /// mlp: layers (1 or 2); sgc: propagation hops; gcn: graph-conv layers;
  /// snowball: hidden layers.
  int depth = 2;
  int hidden = 64;
  Channels channels;
  Mixing mixing = Mixing::kAdaptive;
  AcmVariant variant = AcmVariant::kNone;
  double temperature = 3.0;
  double input_dropout = 0.5;
  double dropout = 0.5;
  double lr = 0.05;
  double weight_decay = 5e-4;
  OperatorKind op_kind = OperatorKind::kRandomWalkRenorm;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws ValidationError when the combination is not supported.
void check_config(const ModelConfig& cfg);

/// Named presets: mlp1, mlp2, sgc1, sgc2, gcn, snowball2, snowball3 and
/// their acm-/acmii- forms (acm-sgc1, acm-sgc2, acm-gcn, acmii-gcn,
/// acm-snowball2, acmii-snowball3, ...).
ModelConfig preset(const std::string& name);

/// One `key=value` per line; `#` starts a comment.
std::string to_text(const ModelConfig& cfg);
ModelConfig from_text(const std::string& text);
/// Applies one `key=value` assignment.
void set_option(ModelConfig& cfg, const std::string& key, const std::string& value);

/// Filters seen by one ACM layer. Either pointer may be null when the
/// matching channel is off.
struct LayerFilters {
  const Operator* low = nullptr;
  const Operator* high = nullptr;
};

/// Parameters of one layer. `weights` has one F_in×F_out matrix per active
/// channel; `gates` (F_out×1 each) and `mix` (k×k) exist only for adaptive
/// mixing with k > 1.
struct LayerParams {
  std::vector<Tensor> weights;
  std::vector<Tensor> gates;
  Tensor mix;
};

struct AcmOptions {
  AcmVariant option = AcmVariant::kAcm;
  Channels channels = kAllChannels;
  Mixing mixing = Mixing::kAdaptive;
  double temperature = 3.0;
  /// false on output layers: no ReLU in step 1.
  bool activate = true;
};

/// Three-step channel mixing layer. When `alpha` is non-null it receives the
/// N×k mixing weights (all ones for k = 1 or sum mixing).
Tensor acm_layer(Tape& tape, const Tensor& h_prev, const LayerParams& params, const LayerFilters& filters,
                 const AcmOptions& options, Matrix* alpha = nullptr);

class Model {
 public:
  Model(const ModelConfig& cfg, const Graph& g, std::uint64_t seed);

  /// N×C logits. Dropout draws from `rng` when training.
  Tensor forward(Tape& tape, bool training, Rng& rng);

  std::vector<Tensor>& parameters() { return params_; }
  long registered_parameter_count() const;
  const ModelConfig& config() const { return cfg_; }

  /// Mixing weights of each ACM layer from the latest forward pass.
  const std::vector<Matrix>& mixing_weights() const { return alphas_; }

 private:
  struct Layer {
    LayerParams params;
    LayerFilters filters;
    AcmOptions options;
    bool plain = true;  // ordinary (non-ACM) layer
  };

  Tensor run_layer(Tape& tape, const Tensor& h, const Layer& layer, std::size_t& acm_index);
  Layer make_layer(long in, long out, bool graph_layer, bool output, Rng& rng);

  ModelConfig cfg_;
  std::vector<std::unique_ptr<Operator>> ops_;
  const Operator* low_ = nullptr;
  const Operator* high_ = nullptr;
  Tensor x_;
  std::vector<Layer> layers_;
  std::vector<Tensor> params_;
  std::vector<Matrix> alphas_;
};

Model build(const ModelConfig& cfg, const Graph& g, std::uint64_t seed);

/// Number of learnable scalars the model registers for F input features and
/// C classes.
long param_count(const ModelConfig& cfg, long num_features, long num_classes);

/// Per-layer parameter count of a graph layer from f_in to f_out.
long layer_param_count(long f_in, long f_out, Channels channels, Mixing mixing, bool acm);

/// Forward-pass flop estimate, summed over layers, using nnz of the graph's
/// operators.
double flop_estimate(const ModelConfig& cfg, const Graph& g);

/// Flops of one layer: full three-channel ACM follows
/// N·F_out·(8 + 6·F_in) + 2·F_out·(nnz_lp + nnz_hp) + 18·N; a plain graph
/// layer is 2·N·F_in·F_out + 2·F_out·nnz_lp.
double layer_flops(long n, long f_in, long f_out, long nnz_lp, long nnz_hp, Channels channels, Mixing mixing,
                   bool acm);

std::string to_string(Family f);
std::string to_string(Mixing m);
std::string to_string(AcmVariant v);

}  // namespace acm
