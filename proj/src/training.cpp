#include "gata2floor/training.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gata2floor/rng.hpp"

namespace g2f {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0.0 || weight_decay < 0.0 || batch_size <= 0 || grad_clip_norm <= 0.0 || epochs <= 0 ||
      w_count < 0.0 || w_assign < 0.0 || w_conf < 0.0 || delta <= 0.0)
    throw std::invalid_argument("train config: invalid value");
}

double smooth_l1(double x, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("smooth_l1: delta must be positive");
  double ax = std::fabs(x);
  return ax < delta ? x * x / (2.0 * delta) : ax - delta / 2.0;
}

namespace {

double confidence_target(double count_error_abs, bool literal) {
  return literal ? std::exp(count_error_abs) : std::exp(-count_error_abs);
}

Array one_hot_rows(const std::vector<int>& ids, std::size_t cols, int floor_slots) {
  Array out({ids.size(), cols});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= floor_slots)
      throw std::invalid_argument("loss: pseudo floor id " + std::to_string(ids[i]) +
                                  " outside the " + std::to_string(floor_slots) + " floor slots");
    out(i, static_cast<std::size_t>(ids[i])) = 1.0;
  }
  return out;
}

}  // namespace

LossIds attach_loss(ForwardPass& fp, const PseudoLabels& labels, const TrainConfig& cfg,
                    int floor_slots) {
  cfg.validate();
  Tape& t = fp.tape;
  const Array& logits = t.value(fp.assign_logits_id);
  std::size_t n = logits.rows();
  if (labels.floor_ids.size() != n)
    throw std::invalid_argument("loss: pseudo label count does not match node count");
  if (labels.pseudo_count > floor_slots)
    throw std::invalid_argument("loss: pseudo floor count " + std::to_string(labels.pseudo_count) +
                                " exceeds the " + std::to_string(floor_slots) +
                                " floor slots; increase floor_slots");

  double c_bar = static_cast<double>(labels.pseudo_count);
  double c_hat = t.value(fp.count_id).scalar_value();

  // SmoothL1(c_hat - c_bar)
  VarId count_err = t.add_scalar(fp.count_id, -c_bar);
  VarId count_term = t.smooth_l1(count_err, cfg.delta);

  // mean cross-entropy of the assignment rows against pseudo floor ids
  VarId log_probs = t.log_softmax(fp.assign_logits_id, 1);
  VarId picked = t.mul(log_probs, t.leaf(one_hot_rows(labels.floor_ids, logits.cols(), floor_slots)));
  VarId assign_term = t.smul(t.sum_all(picked), -1.0 / static_cast<double>(n));

  // squared confidence error against a constant target of the count error
  double target = confidence_target(std::fabs(c_hat - c_bar), cfg.literal_conf_target);
  VarId conf_err = t.add_scalar(fp.confidence_id, -target);
  VarId conf_term = t.mul(conf_err, conf_err);

  VarId total = t.add(t.add(t.smul(count_term, cfg.w_count), t.smul(assign_term, cfg.w_assign)),
                      t.smul(conf_term, cfg.w_conf));

  LossIds ids;
  ids.total = total;
  ids.values.count = t.value(count_term).scalar_value();
  ids.values.assign = t.value(assign_term).scalar_value();
  ids.values.conf = t.value(conf_term).scalar_value();
  ids.values.total = t.value(total).scalar_value();
  return ids;
}

LossBreakdown loss_total(const ForwardOutput& output, const PseudoLabels& labels,
                         const TrainConfig& cfg, int floor_slots) {
  cfg.validate();
  std::size_t n = output.assign_logits.rows();
  if (labels.floor_ids.size() != n)
    throw std::invalid_argument("loss: pseudo label count does not match node count");
  if (labels.pseudo_count > floor_slots)
    throw std::invalid_argument("loss: pseudo floor count exceeds the floor slots");

  LossBreakdown b;
  double c_bar = static_cast<double>(labels.pseudo_count);
  b.count = smooth_l1(output.count - c_bar, cfg.delta);

  double ce = 0.0;
  std::size_t s = output.assign_logits.cols();
  for (std::size_t i = 0; i < n; ++i) {
    int y = labels.floor_ids[i];
    if (y < 0 || y >= floor_slots)
      throw std::invalid_argument("loss: pseudo floor id outside the floor slots");
    double mx = output.assign_logits(i, 0);
    for (std::size_t j = 1; j < s; ++j) mx = std::max(mx, output.assign_logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < s; ++j) denom += std::exp(output.assign_logits(i, j) - mx);
    ce -= output.assign_logits(i, static_cast<std::size_t>(y)) - mx - std::log(denom);
  }
  b.assign = ce / static_cast<double>(n);

  double target = confidence_target(std::fabs(output.count - c_bar), cfg.literal_conf_target);
  double diff = output.confidence - target;
  b.conf = diff * diff;

  b.total = cfg.w_count * b.count + cfg.w_assign * b.assign + cfg.w_conf * b.conf;
  return b;
}

double clip_gradients(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (double v : grads.tensor(i).data()) sq += v * v;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (double& v : grads.tensor(i).data()) v *= scale;
  }
  return norm;
}

AdamWState AdamWState::init(const ModelParams& params) {
  AdamWState s;
  s.m = ModelParams::zeros_like(params);
  s.v = ModelParams::zeros_like(params);
  return s;
}

void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state,
                const TrainConfig& cfg) {
  cfg.validate();
  if (grads.size() != params.size()) throw std::invalid_argument("adamw: gradient layout mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!grads.tensor(i).all_finite())
      throw std::runtime_error("adamw: non-finite gradient in tensor " + grads.name(i));

  ++state.step;
  double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& p = params.tensor(i);
    const Array& g = grads.tensor(i);
    Array& m = state.m.tensor(i);
    Array& v = state.v.tensor(i);
    for (std::size_t j = 0; j < p.numel(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      double m_hat = m[j] / bc1;
      double v_hat = v[j] / bc2;
      // decoupled decay straight on the weight, outside the moments
      p[j] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + kAdamEps) + cfg.weight_decay * p[j]);
    }
  }
}

TrainResult train_model(const std::vector<FacadeRecord>& train_set, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const GraphBuildOptions& graph_opts) {
  model_cfg.validate();
  train_cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: dataset is empty");

  std::vector<FacadeGraph> graphs;
  std::vector<PseudoLabels> labels;
  graphs.reserve(train_set.size());
  for (const FacadeRecord& rec : train_set) {
    if (rec.boxes.empty())
      throw std::invalid_argument("train: facade '" + rec.facade_id + "' has no boxes");
    graphs.push_back(build_graph(rec, graph_opts));
    labels.push_back(pseudo_labels(graphs.back()));
    if (labels.back().pseudo_count > model_cfg.floor_slots)
      throw std::invalid_argument("train: facade '" + rec.facade_id + "' has " +
                                  std::to_string(labels.back().pseudo_count) +
                                  " pseudo floors; increase floor_slots above this value");
  }

  TrainResult result;
  result.params = ModelParams::init(model_cfg, train_cfg.seed);
  AdamWState state = AdamWState::init(result.params);

  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    Rng shuffle_rng = substream(train_cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    EpochStats stats;
    stats.epoch = epoch;
    double abs_err_sum = 0.0;
    std::size_t exact = 0;
    std::size_t seen = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(train_cfg.batch_size)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
      double inv_batch = 1.0 / static_cast<double>(stop - start);
      ModelParams grads = ModelParams::zeros_like(result.params);

      for (std::size_t b = start; b < stop; ++b) {
        std::size_t gi = order[b];
        Rng dropout_rng = substream(train_cfg.seed, "dropout", static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(start), static_cast<std::uint64_t>(b));
        ForwardPass fp = run_forward(graphs[gi], result.params, model_cfg, RunMode::kTrain,
                                     &dropout_rng);
        LossIds loss = attach_loss(fp, labels[gi], train_cfg, model_cfg.floor_slots);
        fp.tape.backward(loss.total);
        for (std::size_t pi = 0; pi < grads.size(); ++pi) {
          const Array& g = fp.tape.grad(fp.param_ids[pi]);
          Array& acc = grads.tensor(pi);
          for (std::size_t j = 0; j < acc.numel(); ++j) acc[j] += inv_batch * g[j];
        }

        stats.loss_total += loss.values.total;
        stats.loss_count += loss.values.count;
        stats.loss_assign += loss.values.assign;
        stats.loss_conf += loss.values.conf;
        double c_hat = fp.tape.value(fp.count_id).scalar_value();
        int rounded = count_to_floors(c_hat);
        abs_err_sum += std::fabs(static_cast<double>(rounded - labels[gi].pseudo_count));
        exact += rounded == labels[gi].pseudo_count ? 1 : 0;
        ++seen;
      }

      clip_gradients(grads, train_cfg.grad_clip_norm);
      adamw_step(result.params, grads, state, train_cfg);
    }

    double inv_seen = 1.0 / static_cast<double>(seen);
    stats.loss_total *= inv_seen;
    stats.loss_count *= inv_seen;
    stats.loss_assign *= inv_seen;
    stats.loss_conf *= inv_seen;
    stats.train_mae = abs_err_sum * inv_seen;
    stats.train_acc = static_cast<double>(exact) * inv_seen;
    result.log.push_back(stats);
  }
  return result;
}

std::string epoch_log_csv(const std::vector<EpochStats>& log) {
  std::string out = "epoch,L_total,L_count,L_assign,L_conf,train_mae,train_acc\n";
  for (const EpochStats& e : log) {
    out += std::to_string(e.epoch);
    out += ',';
    out += format_double(e.loss_total);
    out += ',';
    out += format_double(e.loss_count);
    out += ',';
    out += format_double(e.loss_assign);
    out += ',';
    out += format_double(e.loss_conf);
    out += ',';
    out += format_double(e.train_mae);
    out += ',';
    out += format_double(e.train_acc);
    out += '\n';
  }
  return out;
}

bool is_validation_facade(const std::string& facade_id) {
  return fnv1a(facade_id) % 5 == 0;
}

}  // namespace g2f
