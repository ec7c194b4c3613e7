#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gata2floor/graph_build.hpp"
#include "gata2floor/model.hpp"

namespace g2f {

struct TrainConfig {
  double lr = 3e-5;
  double weight_decay = 1e-4;
  int batch_size = 4;
  double grad_clip_norm = 2.0;
  int epochs = 200;
  double w_count = 0.4;
  double w_assign = 0.4;
  double w_conf = 0.2;
  double delta = 1.0;  // SmoothL1 transition point
  std::uint64_t seed = 1;
  // Literal confidence target exp(+|c_hat - c_bar|); the default uses the
  // negated exponent so the target stays inside the sigmoid's codomain.
  bool literal_conf_target = false;

  void validate() const;
};

double smooth_l1(double x, double delta);

struct LossBreakdown {
  double total = 0.0;
  double count = 0.0;   // unweighted SmoothL1 term
  double assign = 0.0;  // unweighted mean cross-entropy
  double conf = 0.0;    // unweighted squared confidence error
};

struct LossIds {
  VarId total = -1;
  LossBreakdown values;
};

// Attaches the weighted multi-task loss to a forward pass's tape. The
// confidence target is treated as a constant of the current count error.
LossIds attach_loss(ForwardPass& fp, const PseudoLabels& labels, const TrainConfig& cfg,
                    int floor_slots);

// Tape-free loss evaluation from plain outputs; mirrors attach_loss and is
// used for reporting and as a cross-check of the differentiated route.
LossBreakdown loss_total(const ForwardOutput& output, const PseudoLabels& labels,
                         const TrainConfig& cfg, int floor_slots);

// Rescales gradients in place so the global L2 norm is at most max_norm;
// returns the pre-clip norm.
double clip_gradients(ModelParams& grads, double max_norm);

struct AdamWState {
  ModelParams m;
  ModelParams v;
  long step = 0;

  static AdamWState init(const ModelParams& params);
};

void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state,
                const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_count = 0.0;
  double loss_assign = 0.0;
  double loss_conf = 0.0;
  double train_mae = 0.0;
  double train_acc = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> log;
};

TrainResult train_model(const std::vector<FacadeRecord>& train_set, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const GraphBuildOptions& graph_opts = {});

std::string epoch_log_csv(const std::vector<EpochStats>& log);

// Deterministic 80/20 split on the facade_id hash; true means validation.
bool is_validation_facade(const std::string& facade_id);

}  // namespace g2f
