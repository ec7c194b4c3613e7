#include "gata2floor/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace g2f {

namespace {

constexpr double kMaskedOut = -1e30;
constexpr const char* kCheckpointMagic = "g2f-checkpoint";
constexpr const char* kCheckpointVersion = "1";

std::string block_name(int l, int h, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "gat%d.h%d.%s", l, h, suffix);
  return buf;
}

std::string vert_name(int h, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "vert.h%d.%s", h, suffix);
  return buf;
}

enum class InitKind { kWeight, kZero, kOne, kQuery };

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  InitKind kind;
};

std::vector<TensorSpec> param_specs(const ModelConfig& c) {
  std::size_t d = static_cast<std::size_t>(c.d_model);
  std::size_t dg = d / static_cast<std::size_t>(c.gat_heads);
  std::size_t dv = d / static_cast<std::size_t>(c.vert_heads);
  std::size_t ph = static_cast<std::size_t>(c.pos_hidden);
  std::size_t bh = static_cast<std::size_t>(c.bias_hidden);
  std::size_t ch = static_cast<std::size_t>(c.count_hidden);
  std::size_t s = static_cast<std::size_t>(c.floor_slots);
  std::size_t zg = d + 3;

  std::vector<TensorSpec> specs;
  specs.push_back({"embed.W", {6, d}, InitKind::kWeight});
  specs.push_back({"embed.b", {1, d}, InitKind::kZero});
  specs.push_back({"pos.W1", {2, ph}, InitKind::kWeight});
  specs.push_back({"pos.b1", {1, ph}, InitKind::kZero});
  specs.push_back({"pos.W2", {ph, d}, InitKind::kWeight});
  specs.push_back({"pos.b2", {1, d}, InitKind::kZero});
  for (int l = 0; l < c.gat_layers; ++l) {
    for (int h = 0; h < c.gat_heads; ++h) {
      specs.push_back({block_name(l, h, "Ws"), {d, dg}, InitKind::kWeight});
      specs.push_back({block_name(l, h, "Wt"), {d, dg}, InitKind::kWeight});
      specs.push_back({block_name(l, h, "We"), {4, dg}, InitKind::kWeight});
      specs.push_back({block_name(l, h, "a"), {dg, 1}, InitKind::kWeight});
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gat%d.", l);
    std::string p = buf;
    specs.push_back({p + "Wo", {d, d}, InitKind::kWeight});
    specs.push_back({p + "bo", {1, d}, InitKind::kZero});
    specs.push_back({p + "norm.scale", {1, d}, InitKind::kOne});
    specs.push_back({p + "norm.shift", {1, d}, InitKind::kZero});
  }
  if (c.per_head_bias) {
    for (int h = 0; h < c.vert_heads; ++h) {
      specs.push_back({vert_name(h, "bias.W1"), {1, bh}, InitKind::kWeight});
      specs.push_back({vert_name(h, "bias.b1"), {1, bh}, InitKind::kZero});
      specs.push_back({vert_name(h, "bias.W2"), {bh, 1}, InitKind::kWeight});
      specs.push_back({vert_name(h, "bias.b2"), {1, 1}, InitKind::kZero});
    }
  } else {
    specs.push_back({"vbias.W1", {1, bh}, InitKind::kWeight});
    specs.push_back({"vbias.b1", {1, bh}, InitKind::kZero});
    specs.push_back({"vbias.W2", {bh, 1}, InitKind::kWeight});
    specs.push_back({"vbias.b2", {1, 1}, InitKind::kZero});
  }
  for (int h = 0; h < c.vert_heads; ++h) {
    specs.push_back({vert_name(h, "Wq"), {d, dv}, InitKind::kWeight});
    specs.push_back({vert_name(h, "bq"), {1, dv}, InitKind::kZero});
    specs.push_back({vert_name(h, "Wk"), {d, dv}, InitKind::kWeight});
    specs.push_back({vert_name(h, "bk"), {1, dv}, InitKind::kZero});
    specs.push_back({vert_name(h, "Wv"), {d, dv}, InitKind::kWeight});
    specs.push_back({vert_name(h, "bv"), {1, dv}, InitKind::kZero});
  }
  specs.push_back({"vert.Wo", {d, d}, InitKind::kWeight});
  specs.push_back({"vert.bo", {1, d}, InitKind::kZero});
  specs.push_back({"vert.norm.scale", {1, d}, InitKind::kOne});
  specs.push_back({"vert.norm.shift", {1, d}, InitKind::kZero});
  specs.push_back({"count.W1", {zg, ch}, InitKind::kWeight});
  specs.push_back({"count.b1", {1, ch}, InitKind::kZero});
  specs.push_back({"count.W2", {ch, 1}, InitKind::kWeight});
  specs.push_back({"count.b2", {1, 1}, InitKind::kZero});
  specs.push_back({"conf.w", {zg, 1}, InitKind::kWeight});
  specs.push_back({"conf.b", {1, 1}, InitKind::kZero});
  specs.push_back({"assign.Wk", {d, d}, InitKind::kWeight});
  specs.push_back({"assign.bk", {1, d}, InitKind::kZero});
  specs.push_back({"assign.queries", {s, d}, InitKind::kQuery});
  return specs;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model <= 0 || gat_layers <= 0 || gat_heads <= 0 || vert_heads <= 0 || floor_slots <= 0 ||
      pos_hidden <= 0 || bias_hidden <= 0 || count_hidden <= 0)
    throw std::invalid_argument("model config: all sizes must be positive");
  if (d_model % gat_heads != 0)
    throw std::invalid_argument("model config: d_model must be divisible by gat_heads");
  if (d_model % vert_heads != 0)
    throw std::invalid_argument("model config: d_model must be divisible by vert_heads");
  if (edge_dropout < 0.0 || edge_dropout >= 1.0)
    throw std::invalid_argument("model config: edge_dropout must lie in [0,1)");
  if (leaky_slope < 0.0) throw std::invalid_argument("model config: leaky_slope must be >= 0");
}

int ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Array& ModelParams::at(std::string_view name) {
  int i = index_of(name);
  if (i < 0) throw std::out_of_range("model params: unknown tensor '" + std::string(name) + "'");
  return tensors_[static_cast<std::size_t>(i)];
}

const Array& ModelParams::at(std::string_view name) const {
  int i = index_of(name);
  if (i < 0) throw std::out_of_range("model params: unknown tensor '" + std::string(name) + "'");
  return tensors_[static_cast<std::size_t>(i)];
}

void ModelParams::add(std::string name, Array tensor) {
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

bool ModelParams::all_finite() const {
  for (const Array& t : tensors_)
    if (!t.all_finite()) return false;
  return true;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng = substream(seed, "init");
  ModelParams params;
  for (const TensorSpec& spec : param_specs(config)) {
    Array t(spec.shape);
    switch (spec.kind) {
      case InitKind::kWeight: {
        double bound = std::sqrt(1.0 / static_cast<double>(spec.shape[0]));
        for (double& v : t.data()) v = rng.uniform(-bound, bound);
        break;
      }
      case InitKind::kZero:
        break;
      case InitKind::kOne:
        for (double& v : t.data()) v = 1.0;
        break;
      case InitKind::kQuery:
        for (double& v : t.data()) v = 0.02 * rng.normal();
        break;
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams out;
  for (std::size_t i = 0; i < other.size(); ++i)
    out.add(other.name(i), Array(other.tensor(i).shape()));
  return out;
}

int count_to_floors(double c_hat) {
  return std::max(1, static_cast<int>(std::llround(c_hat)));
}

std::vector<int> hard_assignments(const Array& assign_probs) {
  std::vector<int> out(assign_probs.rows(), 0);
  for (std::size_t i = 0; i < assign_probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < assign_probs.cols(); ++j)
      if (assign_probs(i, j) > assign_probs(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

// Leaf lookup bound to one forward pass.
struct ParamLeaves {
  const ModelParams* params;
  Tape* tape;
  std::vector<VarId> ids;

  VarId operator()(std::string_view name) const {
    int i = params->index_of(name);
    if (i < 0) throw std::out_of_range("forward: unknown tensor '" + std::string(name) + "'");
    return ids[static_cast<std::size_t>(i)];
  }
};

}  // namespace

ForwardPass run_forward(const FacadeGraph& graph, const ModelParams& params,
                        const ModelConfig& config, RunMode mode, Rng* edge_dropout_rng,
                        ForwardDiagnostics* diagnostics) {
  config.validate();
  std::size_t n = graph.num_nodes;
  if (n == 0) throw std::invalid_argument("forward: graph has no nodes");

  {  // shapes must match what the config dictates
    auto specs = param_specs(config);
    if (specs.size() != params.size())
      throw std::invalid_argument("forward: parameter count does not match config");
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (params.name(i) != specs[i].name || params.tensor(i).shape() != specs[i].shape)
        throw std::invalid_argument("forward: tensor '" + params.name(i) +
                                    "' does not match config layout");
    }
  }

  ForwardPass fp;
  Tape& t = fp.tape;
  ParamLeaves p{&params, &t, {}};
  p.ids.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) p.ids.push_back(t.leaf(params.tensor(i)));
  fp.param_ids = p.ids;

  std::size_t d = static_cast<std::size_t>(config.d_model);

  // constants of this graph
  Array feat({n, 6});
  Array pos({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 6; ++j) feat(i, j) = graph.node_features[i][j];
    pos(i, 0) = graph.node_features[i][0];
    pos(i, 1) = graph.node_features[i][1];
  }

  // attention mask over N(i) ∪ {i}; train mode drops undirected edges whole
  Array mask = Array::full({n, n}, kMaskedOut);
  for (std::size_t i = 0; i < n; ++i) mask(i, i) = 0.0;
  Array edge_feat({n * n, 4});
  bool training_dropout = mode == RunMode::kTrain && config.edge_dropout > 0.0;
  if (training_dropout && edge_dropout_rng == nullptr)
    throw std::invalid_argument("forward: train mode with edge dropout needs an rng");
  for (const GraphEdge& e : graph.edges) {
    bool dropped = training_dropout && edge_dropout_rng->bernoulli(config.edge_dropout);
    if (dropped) continue;
    mask(e.i, e.j) = 0.0;
    mask(e.j, e.i) = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
      edge_feat(e.i * n + e.j, f) = e.features[f];
      edge_feat(e.j * n + e.i, f) = e.features[f];
    }
  }

  std::vector<std::size_t> rep_i(n * n), rep_j(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rep_i[i * n + j] = i;
      rep_j[i * n + j] = j;
    }

  VarId feat_id = t.leaf(std::move(feat));
  VarId pos_id = t.leaf(std::move(pos));
  VarId edge_feat_id = t.leaf(std::move(edge_feat));

  // input embedding + positional MLP
  VarId proj = linear(t, feat_id, p("embed.W"), p("embed.b"));
  VarId pos_hidden = t.relu(linear(t, pos_id, p("pos.W1"), p("pos.b1")));
  VarId pos_out = linear(t, pos_hidden, p("pos.W2"), p("pos.b2"));
  VarId h = t.add(proj, pos_out);

  // residual edge-aware GATv2 blocks
  for (int l = 0; l < config.gat_layers; ++l) {
    std::vector<VarId> head_outs;
    for (int head = 0; head < config.gat_heads; ++head) {
      VarId src = t.matmul(h, p(block_name(l, head, "Ws")));
      VarId tgt = t.matmul(h, p(block_name(l, head, "Wt")));
      VarId edg = t.matmul(edge_feat_id, p(block_name(l, head, "We")));
      VarId pre = t.add(t.add(t.gather_rows(src, rep_i), t.gather_rows(tgt, rep_j)), edg);
      VarId act = t.leaky_relu(pre, config.leaky_slope);
      VarId scores = t.reshape(t.matmul(act, p(block_name(l, head, "a"))), {n, n});
      VarId attn = t.softmax(scores, 1, &mask);
      if (diagnostics) diagnostics->gat_attention.push_back(t.value(attn));
      head_outs.push_back(t.matmul(attn, tgt));
    }
    VarId merged = config.gat_heads == 1 ? head_outs[0] : t.concat(head_outs, 1);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gat%d.", l);
    std::string prefix = buf;
    VarId mixed = linear(t, merged, p(prefix + "Wo"), p(prefix + "bo"));
    h = graph_norm(t, t.add(h, mixed), p(prefix + "norm.scale"), p(prefix + "norm.shift"));
  }

  // vertical bias b_ij = -softplus(r(d_y)); non-positive by construction
  Array dy_pairs({n * n, 1});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      dy_pairs(i * n + j, 0) = std::fabs(graph.y_centers_norm[i] - graph.y_centers_norm[j]);
  VarId dy_id = t.leaf(std::move(dy_pairs));

  auto bias_map = [&](const std::string& w1, const std::string& b1, const std::string& w2,
                      const std::string& b2) {
    VarId hidden = t.relu(linear(t, dy_id, p(w1), p(b1)));
    VarId raw = linear(t, hidden, p(w2), p(b2));
    return t.reshape(t.neg(t.softplus(raw)), {n, n});
  };
  VarId shared_bias = -1;
  if (!config.per_head_bias) shared_bias = bias_map("vbias.W1", "vbias.b1", "vbias.W2", "vbias.b2");
  if (diagnostics && shared_bias >= 0) diagnostics->vertical_bias = t.value(shared_bias);

  // dense multi-head self-attention with the vertical bias as mask logits
  std::size_t dv = d / static_cast<std::size_t>(config.vert_heads);
  double inv_sqrt_dv = 1.0 / std::sqrt(static_cast<double>(dv));
  std::vector<VarId> vert_outs;
  for (int head = 0; head < config.vert_heads; ++head) {
    VarId q = linear(t, h, p(vert_name(head, "Wq")), p(vert_name(head, "bq")));
    VarId k = linear(t, h, p(vert_name(head, "Wk")), p(vert_name(head, "bk")));
    VarId v = linear(t, h, p(vert_name(head, "Wv")), p(vert_name(head, "bv")));
    VarId logits = t.smul(t.matmul(q, t.transpose(k)), inv_sqrt_dv);
    VarId bias = shared_bias;
    if (config.per_head_bias)
      bias = bias_map(vert_name(head, "bias.W1"), vert_name(head, "bias.b1"),
                      vert_name(head, "bias.W2"), vert_name(head, "bias.b2"));
    if (diagnostics && config.per_head_bias && head == 0) diagnostics->vertical_bias = t.value(bias);
    VarId attn = t.softmax(t.add(logits, bias), 1);
    if (diagnostics) diagnostics->vertical_attention.push_back(t.value(attn));
    vert_outs.push_back(t.matmul(attn, v));
  }
  VarId vert_merged = config.vert_heads == 1 ? vert_outs[0] : t.concat(vert_outs, 1);
  VarId vert_mixed = linear(t, vert_merged, p("vert.Wo"), p("vert.bo"));
  VarId h_vert = t.add(h, vert_mixed);
  if (config.vert_post_norm)
    h_vert = graph_norm(t, h_vert, p("vert.norm.scale"), p("vert.norm.shift"));

  // counting + confidence heads on [z; g]
  Array g_row({1, 3});
  for (std::size_t i = 0; i < 3; ++i) g_row(0, i) = graph.global_vector[i];
  VarId g_id = t.leaf(std::move(g_row));
  VarId z = t.mean_axis(h_vert, 0);
  VarId zg = t.concat({z, g_id}, 1);
  VarId count_hidden = t.relu(linear(t, zg, p("count.W1"), p("count.b1")));
  fp.count_id = t.softplus(linear(t, count_hidden, p("count.W2"), p("count.b2")));
  fp.confidence_id = t.sigmoid(linear(t, zg, p("conf.w"), p("conf.b")));

  // floor-slot assignment via learnable queries
  VarId keys = linear(t, h_vert, p("assign.Wk"), p("assign.bk"));
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  fp.assign_logits_id = t.smul(t.matmul(keys, t.transpose(p("assign.queries"))), inv_sqrt_d);
  VarId probs = t.softmax(fp.assign_logits_id, 1);
  fp.assign_probs = t.value(probs);
  if (diagnostics) diagnostics->assignment_probs = t.value(probs);

  return fp;
}

ForwardOutput forward_eval(const FacadeGraph& graph, const ModelParams& params,
                           const ModelConfig& config, bool with_diagnostics) {
  ForwardDiagnostics diag;
  ForwardPass fp = run_forward(graph, params, config, RunMode::kEval, nullptr,
                               with_diagnostics ? &diag : nullptr);
  ForwardOutput out;
  out.count = fp.tape.value(fp.count_id).scalar_value();
  out.confidence = fp.tape.value(fp.confidence_id).scalar_value();
  out.assign_logits = fp.tape.value(fp.assign_logits_id);
  out.assign_probs = fp.assign_probs;
  if (with_diagnostics) out.diagnostics = std::move(diag);
  return out;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config, const std::string& path) {
  if (!params.all_finite()) throw std::runtime_error("checkpoint: refusing to save non-finite weights");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "config d_model " << config.d_model << '\n';
  out << "config gat_layers " << config.gat_layers << '\n';
  out << "config gat_heads " << config.gat_heads << '\n';
  out << "config vert_heads " << config.vert_heads << '\n';
  out << "config floor_slots " << config.floor_slots << '\n';
  out << "config edge_dropout " << format_double(config.edge_dropout) << '\n';
  out << "config leaky_slope " << format_double(config.leaky_slope) << '\n';
  out << "config pos_hidden " << config.pos_hidden << '\n';
  out << "config bias_hidden " << config.bias_hidden << '\n';
  out << "config count_hidden " << config.count_hidden << '\n';
  out << "config per_head_bias " << (config.per_head_bias ? 1 : 0) << '\n';
  out << "config vert_post_norm " << (config.vert_post_norm ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Array& tensor = params.tensor(i);
    out << "tensor " << params.name(i) << ' ' << tensor.rank();
    for (std::size_t dim : tensor.shape()) out << ' ' << dim;
    out << '\n';
    const std::vector<double>& vals = tensor.data();
    for (std::size_t v = 0; v < vals.size(); ++v) {
      if (v) out << ' ';
      out << format_double(vals[v]);
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string magic, version;
  if (!(in >> magic >> version)) throw std::runtime_error("checkpoint: truncated header");
  if (magic != kCheckpointMagic || version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version '" + magic + " " + version +
                             "', expected '" + kCheckpointMagic + " " + kCheckpointVersion + "'");

  ModelConfig config;
  std::string tok;
  // config block runs until the first tensor
  while (in >> tok && tok == "config") {
    std::string key, value;
    if (!(in >> key >> value)) throw std::runtime_error("checkpoint: truncated config entry");
    auto as_int = [&](const std::string& v) {
      int out_v = 0;
      auto res = std::from_chars(v.data(), v.data() + v.size(), out_v);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::runtime_error("checkpoint: bad integer '" + v + "' for " + key);
      return out_v;
    };
    auto as_double = [&](const std::string& v) {
      double out_v = 0;
      auto res = std::from_chars(v.data(), v.data() + v.size(), out_v);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::runtime_error("checkpoint: bad number '" + v + "' for " + key);
      return out_v;
    };
    if (key == "d_model")
      config.d_model = as_int(value);
    else if (key == "gat_layers")
      config.gat_layers = as_int(value);
    else if (key == "gat_heads")
      config.gat_heads = as_int(value);
    else if (key == "vert_heads")
      config.vert_heads = as_int(value);
    else if (key == "floor_slots")
      config.floor_slots = as_int(value);
    else if (key == "edge_dropout")
      config.edge_dropout = as_double(value);
    else if (key == "leaky_slope")
      config.leaky_slope = as_double(value);
    else if (key == "pos_hidden")
      config.pos_hidden = as_int(value);
    else if (key == "bias_hidden")
      config.bias_hidden = as_int(value);
    else if (key == "count_hidden")
      config.count_hidden = as_int(value);
    else if (key == "per_head_bias")
      config.per_head_bias = as_int(value) != 0;
    else if (key == "vert_post_norm")
      config.vert_post_norm = as_int(value) != 0;
    else
      throw std::runtime_error("checkpoint: unknown config key '" + key + "'");
  }
  if (!in) throw std::runtime_error("checkpoint: truncated after config block");
  config.validate();

  auto specs = param_specs(config);
  ModelParams params;
  std::size_t spec_idx = 0;
  while (tok == "tensor") {
    if (spec_idx >= specs.size()) throw std::runtime_error("checkpoint: more tensors than expected");
    const TensorSpec& spec = specs[spec_idx++];
    std::string name;
    std::size_t rank = 0;
    if (!(in >> name >> rank)) throw std::runtime_error("checkpoint: truncated tensor header");
    if (name != spec.name)
      throw std::runtime_error("checkpoint: expected tensor '" + spec.name + "', found '" + name + "'");
    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i)
      if (!(in >> shape[i])) throw std::runtime_error("checkpoint: truncated shape for " + name);
    if (shape != spec.shape)
      throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                               shape_to_string(shape) + ", config expects " +
                               shape_to_string(spec.shape));
    Array tensor(shape);
    for (std::size_t v = 0; v < tensor.numel(); ++v) {
      std::string num;
      if (!(in >> num)) throw std::runtime_error("checkpoint: truncated values for " + name);
      double parsed = 0;
      auto res = std::from_chars(num.data(), num.data() + num.size(), parsed);
      if (res.ec != std::errc() || res.ptr != num.data() + num.size())
        throw std::runtime_error("checkpoint: bad value '" + num + "' in " + name);
      tensor[v] = parsed;
    }
    if (!tensor.all_finite())
      throw std::runtime_error("checkpoint: non-finite value in tensor " + name);
    params.add(name, std::move(tensor));
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated after tensor " + name);
  }
  if (tok != "end") throw std::runtime_error("checkpoint: unexpected token '" + tok + "'");
  if (spec_idx != specs.size())
    throw std::runtime_error("checkpoint: missing tensors (got " + std::to_string(spec_idx) +
                             " of " + std::to_string(specs.size()) + ")");
  return Checkpoint{config, std::move(params)};
}

}  // namespace g2f
