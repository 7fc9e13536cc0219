#include "acm/models.hpp"

#include "acm/error.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace acm {
namespace {

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config: " + key + " expects a number, got '" + value + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config: " + key + " expects an integer, got '" + value + "'");
  }
  return out;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

Channels parse_channels(const std::string& value) {
  Channels c{false, false, false};
  std::stringstream ss(value);
  for (std::string part; std::getline(ss, part, ',');) {
    part = trim(part);
    if (part == "lp") {
      c.low = true;
    } else if (part == "hp") {
      c.high = true;
    } else if (part == "id") {
      c.identity = true;
    } else {
      throw ValidationError("config: unknown channel '" + part + "' (expected lp, hp, id)");
    }
  }
  return c;
}

std::string channels_text(Channels c) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(c.low, "lp");
  add(c.high, "hp");
  add(c.identity, "id");
  return out;
}

bool is_acm(const ModelConfig& cfg) { return cfg.variant != AcmVariant::kNone; }

bool adaptive(Channels channels, Mixing mixing) { return mixing == Mixing::kAdaptive && channels.count() > 1; }

// (f_in, f_out, graph layer?, output layer?) for every layer of the model.
struct LayerShape {
  long in;
  long out;
  bool graph;
  bool output;
};

std::vector<LayerShape> layer_shapes(const ModelConfig& cfg, long f, long c) {
  std::vector<LayerShape> out;
  const long h = cfg.hidden;
  switch (cfg.family) {
    case Family::kMlp:
      if (cfg.depth == 1) {
        out.push_back({f, c, false, true});
      } else {
        out.push_back({f, h, false, false});
        out.push_back({h, c, false, true});
      }
      break;
    case Family::kSgc:
      out.push_back({f, c, true, true});
      break;
    case Family::kGcn:
      for (int l = 0; l < cfg.depth; ++l) {
        const bool last = l + 1 == cfg.depth;
        out.push_back({l == 0 ? f : h, last ? c : h, true, last});
      }
      break;
    case Family::kSnowball:
      for (int l = 0; l < cfg.depth; ++l) out.push_back({f + l * h, h, true, false});
      out.push_back({f + cfg.depth * h, c, false, true});
      break;
  }
  return out;
}

Operator power(const Operator& a, int k) {
  Matrix m = a.matrix();
  for (int i = 1; i < k; ++i) m = a.sparse() * m;
  return Operator(std::move(m), a.kind());
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::kMlp: return "mlp";
    case Family::kSgc: return "sgc";
    case Family::kGcn: return "gcn";
    case Family::kSnowball: return "snowball";
  }
  return "?";
}

std::string to_string(Mixing m) { return m == Mixing::kAdaptive ? "adaptive" : "sum"; }

std::string to_string(AcmVariant v) {
  switch (v) {
    case AcmVariant::kNone: return "none";
    case AcmVariant::kAcm: return "acm";
    case AcmVariant::kAcmii: return "acmii";
  }
  return "?";
}

void check_config(const ModelConfig& cfg) {
  if (cfg.depth < 1) throw ValidationError("config: depth must be >= 1");
  if (cfg.family == Family::kMlp && cfg.depth > 2) throw ValidationError("config: mlp depth must be 1 or 2");
  if (cfg.hidden < 1) throw ValidationError("config: hidden must be >= 1");
  if (cfg.channels.count() == 0) throw ValidationError("config: channel set is empty");
  if (!is_acm(cfg) && !(cfg.channels == Channels{})) {
    throw ValidationError("config: channels other than lp need variant=acm or acmii");
  }
  if (cfg.family == Family::kMlp && is_acm(cfg)) throw ValidationError("config: mlp has no graph channels");
  if (cfg.variant == AcmVariant::kAcmii && cfg.family == Family::kSgc) {
    throw ValidationError("config: acmii coincides with acm for sgc; use variant=acm");
  }
  if (!(cfg.temperature > 0.0)) throw ValidationError("config: temperature must be > 0");
  if (!(cfg.input_dropout >= 0.0 && cfg.input_dropout < 1.0) || !(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ValidationError("config: dropout must lie in [0, 1)");
  }
  if (!(cfg.lr > 0.0)) throw ValidationError("config: lr must be > 0");
  if (!(cfg.weight_decay >= 0.0)) throw ValidationError("config: weight_decay must be >= 0");
  if (!is_affinity(cfg.op_kind)) {
    throw ValidationError("config: op must be an affinity kind, got " + std::string(to_string(cfg.op_kind)));
  }
}

ModelConfig preset(const std::string& name) {
  ModelConfig cfg;
  cfg.id = name;
  std::string base = name;
  if (base.starts_with("acmii-")) {
    cfg.variant = AcmVariant::kAcmii;
    base = base.substr(6);
  } else if (base.starts_with("acm-")) {
    cfg.variant = AcmVariant::kAcm;
    base = base.substr(4);
  }
  if (base == "mlp1" || base == "mlp2") {
    cfg.family = Family::kMlp;
    cfg.depth = base.back() - '0';
  } else if (base == "sgc1" || base == "sgc2") {
    cfg.family = Family::kSgc;
    cfg.depth = base.back() - '0';
  } else if (base == "gcn") {
    cfg.family = Family::kGcn;
    cfg.depth = 2;
  } else if (base == "snowball2" || base == "snowball3") {
    cfg.family = Family::kSnowball;
    cfg.depth = base.back() - '0';
  } else {
    throw ValidationError("unknown model '" + name + "'");
  }
  if (is_acm(cfg)) cfg.channels = kAllChannels;
  check_config(cfg);
  return cfg;
}

void set_option(ModelConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "id") {
    cfg.id = value;
  } else if (key == "family") {
    if (value == "mlp") cfg.family = Family::kMlp;
    else if (value == "sgc") cfg.family = Family::kSgc;
    else if (value == "gcn") cfg.family = Family::kGcn;
    else if (value == "snowball") cfg.family = Family::kSnowball;
    else throw ValidationError("config: unknown family '" + value + "'");
  } else if (key == "depth") {
    cfg.depth = parse_int(key, value);
  } else if (key == "hidden") {
    cfg.hidden = parse_int(key, value);
  } else if (key == "channels") {
    cfg.channels = parse_channels(value);
  } else if (key == "mixing") {
    if (value == "adaptive") cfg.mixing = Mixing::kAdaptive;
    else if (value == "sum") cfg.mixing = Mixing::kSum;
    else throw ValidationError("config: mixing must be adaptive or sum");
  } else if (key == "variant") {
    if (value == "none") cfg.variant = AcmVariant::kNone;
    else if (value == "acm") cfg.variant = AcmVariant::kAcm;
    else if (value == "acmii") cfg.variant = AcmVariant::kAcmii;
    else throw ValidationError("config: variant must be none, acm or acmii");
  } else if (key == "temperature") {
    cfg.temperature = parse_double(key, value);
  } else if (key == "input_dropout") {
    cfg.input_dropout = parse_double(key, value);
  } else if (key == "dropout") {
    cfg.dropout = parse_double(key, value);
  } else if (key == "lr") {
    cfg.lr = parse_double(key, value);
  } else if (key == "weight_decay") {
    cfg.weight_decay = parse_double(key, value);
  } else if (key == "op") {
    const auto kind = parse_operator_kind(value);
    if (!kind) throw ValidationError("config: unknown operator '" + value + "'");
    cfg.op_kind = *kind;
  } else if (key == "preset") {
    const std::string id = cfg.id;
    cfg = preset(value);
    if (!id.empty()) cfg.id = id;
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

std::string to_text(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "id=" << cfg.id << '\n'
      << "family=" << to_string(cfg.family) << '\n'
      << "depth=" << cfg.depth << '\n'
      << "hidden=" << cfg.hidden << '\n'
      << "channels=" << channels_text(cfg.channels) << '\n'
      << "mixing=" << to_string(cfg.mixing) << '\n'
      << "variant=" << to_string(cfg.variant) << '\n'
      << "temperature=" << format_double(cfg.temperature) << '\n'
      << "input_dropout=" << format_double(cfg.input_dropout) << '\n'
      << "dropout=" << format_double(cfg.dropout) << '\n'
      << "lr=" << format_double(cfg.lr) << '\n'
      << "weight_decay=" << format_double(cfg.weight_decay) << '\n'
      << "op=" << to_string(cfg.op_kind) << '\n';
  return out.str();
}

ModelConfig from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  long lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  check_config(cfg);
  return cfg;
}

Tensor acm_layer(Tape& tape, const Tensor& h_prev, const LayerParams& params, const LayerFilters& filters,
                 const AcmOptions& options, Matrix* alpha) {
  const Channels ch = options.channels;
  const int k = ch.count();
  if (k == 0 || static_cast<int>(params.weights.size()) != k) {
    throw ValidationError("acm_layer: expected one weight matrix per active channel");
  }
  std::vector<const Operator*> filter_of;
  if (ch.low) {
    if (!filters.low) throw ValidationError("acm_layer: low-pass channel without a filter");
    filter_of.push_back(filters.low);
  }
  if (ch.high) {
    if (!filters.high) throw ValidationError("acm_layer: high-pass channel without a filter");
    filter_of.push_back(filters.high);
  }
  if (ch.identity) filter_of.push_back(nullptr);

  // Step 1: per-channel feature extraction.
  std::vector<Tensor> h(k);
  for (int c = 0; c < k; ++c) {
    Tensor t = tape.matmul(h_prev, params.weights[c]);
    if (options.option == AcmVariant::kAcmii) {
      if (options.activate) t = tape.relu(t);
      if (filter_of[c]) t = tape.propagate(*filter_of[c], t);
    } else {
      if (filter_of[c]) t = tape.propagate(*filter_of[c], t);
      if (options.activate) t = tape.relu(t);
    }
    h[c] = t;
  }

  if (!adaptive(ch, options.mixing)) {
    if (alpha) *alpha = Matrix::Ones(h_prev.rows(), k);
    Tensor out = h[0];
    for (int c = 1; c < k; ++c) out = tape.add(out, h[c]);
    return out;
  }

  // Step 2: node-wise mixing weights.
  if (static_cast<int>(params.gates.size()) != k || !params.mix.defined() || params.mix.rows() != k ||
      params.mix.cols() != k) {
    throw ValidationError("acm_layer: adaptive mixing needs k gate vectors and a k x k mixing matrix");
  }
  std::vector<Tensor> gates(k);
  for (int c = 0; c < k; ++c) gates[c] = tape.sigmoid(tape.matmul(h[c], params.gates[c]));
  const Tensor logits = tape.scale(tape.matmul(tape.concat_cols(gates), params.mix), 1.0 / options.temperature);
  const Tensor a = tape.softmax_rows(logits);
  if (alpha) *alpha = a.value();

  // Step 3: recombination.
  Tensor out = tape.row_scale(tape.column(a, 0), h[0]);
  for (int c = 1; c < k; ++c) out = tape.add(out, tape.row_scale(tape.column(a, c), h[c]));
  return out;
}

Model::Model(const ModelConfig& cfg, const Graph& g, std::uint64_t seed) : cfg_(cfg) {
  check_config(cfg_);
  if (g.class_count() < 1) throw ValidationError("model needs at least one class");
  Rng rng(seed);
  x_ = Tensor::constant(g.features());

  if (cfg_.family != Family::kMlp) {
    auto a = std::make_unique<Operator>(make_operator(g, cfg_.op_kind));
    if (cfg_.family == Family::kSgc && cfg_.depth > 1) a = std::make_unique<Operator>(power(*a, cfg_.depth));
    low_ = a.get();
    ops_.push_back(std::move(a));
    if (is_acm(cfg_) && cfg_.channels.high) {
      ops_.push_back(std::make_unique<Operator>(highpass(*low_)));
      high_ = ops_.back().get();
    }
  }

  for (const auto& s : layer_shapes(cfg_, g.num_features(), g.class_count())) {
    layers_.push_back(make_layer(s.in, s.out, s.graph, s.output, rng));
  }
  for (const auto& layer : layers_) {
    for (const auto& w : layer.params.weights) params_.push_back(w);
    for (const auto& w : layer.params.gates) params_.push_back(w);
    if (layer.params.mix.defined()) params_.push_back(layer.params.mix);
  }
}

Model::Layer Model::make_layer(long in, long out, bool graph_layer, bool output, Rng& rng) {
  Layer layer;
  layer.plain = !(graph_layer && is_acm(cfg_));
  layer.options.activate = !output && cfg_.family != Family::kSgc;
  if (layer.plain) {
    layer.params.weights.push_back(Tensor::parameter(glorot(in, out, rng)));
    if (graph_layer) layer.filters.low = low_;
    return layer;
  }
  layer.options.option = cfg_.variant;
  layer.options.channels = cfg_.channels;
  layer.options.mixing = cfg_.mixing;
  layer.options.temperature = cfg_.temperature;
  layer.filters = {cfg_.channels.low ? low_ : nullptr, cfg_.channels.high ? high_ : nullptr};
  const int k = cfg_.channels.count();
  for (int c = 0; c < k; ++c) layer.params.weights.push_back(Tensor::parameter(glorot(in, out, rng)));
  if (adaptive(cfg_.channels, cfg_.mixing)) {
    for (int c = 0; c < k; ++c) layer.params.gates.push_back(Tensor::parameter(glorot(out, 1, rng)));
    layer.params.mix = Tensor::parameter(glorot(k, k, rng));
  }
  return layer;
}

Tensor Model::run_layer(Tape& tape, const Tensor& h, const Layer& layer, std::size_t& acm_index) {
  if (!layer.plain) {
    Matrix* alpha = acm_index < alphas_.size() ? &alphas_[acm_index] : nullptr;
    ++acm_index;
    return acm_layer(tape, h, layer.params, layer.filters, layer.options, alpha);
  }
  Tensor t = tape.matmul(h, layer.params.weights[0]);
  if (layer.filters.low) t = tape.propagate(*layer.filters.low, t);
  if (layer.options.activate) t = tape.relu(t);
  return t;
}

Tensor Model::forward(Tape& tape, bool training, Rng& rng) {
  std::size_t acm_layers = 0;
  for (const auto& l : layers_) acm_layers += l.plain ? 0 : 1;
  alphas_.assign(acm_layers, Matrix());
  std::size_t acm_index = 0;

  Tensor h = tape.dropout(x_, cfg_.input_dropout, rng, training);
  if (cfg_.family == Family::kSnowball) {
    std::vector<Tensor> pieces{h};
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const Tensor in = pieces.size() == 1 ? pieces[0] : tape.concat_cols(pieces);
      Tensor out = run_layer(tape, in, layers_[l], acm_index);
      pieces.push_back(tape.dropout(out, cfg_.dropout, rng, training));
    }
    return run_layer(tape, tape.concat_cols(pieces), layers_.back(), acm_index);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0) h = tape.dropout(h, cfg_.dropout, rng, training);
    h = run_layer(tape, h, layers_[l], acm_index);
  }
  return h;
}

long Model::registered_parameter_count() const {
  long n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Model build(const ModelConfig& cfg, const Graph& g, std::uint64_t seed) { return Model(cfg, g, seed); }

long layer_param_count(long f_in, long f_out, Channels channels, Mixing mixing, bool acm) {
  if (!acm) return f_in * f_out;
  const long k = channels.count();
  long n = k * f_in * f_out;
  if (adaptive(channels, mixing)) n += k * f_out + k * k;
  return n;
}

long param_count(const ModelConfig& cfg, long num_features, long num_classes) {
  check_config(cfg);
  long n = 0;
  for (const auto& s : layer_shapes(cfg, num_features, num_classes)) {
    n += layer_param_count(s.in, s.out, cfg.channels, cfg.mixing, s.graph && is_acm(cfg));
  }
  return n;
}

double layer_flops(long n, long f_in, long f_out, long nnz_lp, long nnz_hp, Channels channels, Mixing mixing,
                   bool acm) {
  const double N = static_cast<double>(n);
  const double fi = static_cast<double>(f_in);
  const double fo = static_cast<double>(f_out);
  if (!acm) return 2.0 * N * fi * fo + 2.0 * fo * static_cast<double>(nnz_lp);
  const double k = channels.count();
  double flops = 2.0 * k * N * fi * fo;
  flops += 2.0 * fo * static_cast<double>((channels.low ? nnz_lp : 0) + (channels.high ? nnz_hp : 0));
  if (adaptive(channels, mixing)) {
    flops += (2.0 * k + 2.0) * N * fo + 2.0 * k * k * N;
  } else {
    flops += (k - 1.0) * N * fo;
  }
  return flops;
}

double flop_estimate(const ModelConfig& cfg, const Graph& g) {
  check_config(cfg);
  const long n = g.num_nodes();
  if (n == 0) return 0.0;
  long nnz_lp = 0;
  long nnz_hp = 0;
  if (cfg.family != Family::kMlp) {
    Operator a = make_operator(g, cfg.op_kind);
    if (cfg.family == Family::kSgc && cfg.depth > 1) a = power(a, cfg.depth);
    nnz_lp = a.nnz();
    nnz_hp = highpass(a).nnz();
  }
  double total = 0.0;
  for (const auto& s : layer_shapes(cfg, g.num_features(), g.class_count())) {
    if (!s.graph) {
      total += 2.0 * static_cast<double>(n) * static_cast<double>(s.in) * static_cast<double>(s.out);
      continue;
    }
    total += layer_flops(n, s.in, s.out, nnz_lp, nnz_hp, cfg.channels, cfg.mixing, is_acm(cfg));
  }
  return total;
}

}  // namespace acm
