#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gata2floor/array.hpp"
#include "gata2floor/graph_build.hpp"
#include "gata2floor/rng.hpp"
#include "gata2floor/tape.hpp"

namespace g2f {

struct ModelConfig {
  int d_model = 64;
  int gat_layers = 3;
  int gat_heads = 8;
  int vert_heads = 8;
  int floor_slots = 15;
  double edge_dropout = 0.1;
  double leaky_slope = 0.2;
  int pos_hidden = 32;    // positional MLP hidden width
  int bias_hidden = 16;   // vertical-bias MLP hidden width
  int count_hidden = 64;  // counting MLP hidden width
  bool per_head_bias = false;  // separate vertical-bias MLP per head
  bool vert_post_norm = true;  // GraphNorm after the vertical-attention residual

  void validate() const;
};

// Named weight arrays in fixed construction order; the order defines the
// checkpoint layout and the optimizer state layout.
class ModelParams {
 public:
  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Array& tensor(std::size_t i) { return tensors_[i]; }
  const Array& tensor(std::size_t i) const { return tensors_[i]; }
  int index_of(std::string_view name) const;
  Array& at(std::string_view name);
  const Array& at(std::string_view name) const;
  void add(std::string name, Array tensor);
  bool all_finite() const;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  // same names/shapes, zero values; used for gradients and moments
  static ModelParams zeros_like(const ModelParams& other);

 private:
  std::vector<std::string> names_;
  std::vector<Array> tensors_;
};

enum class RunMode { kTrain, kEval };

struct ForwardDiagnostics {
  std::vector<Array> gat_attention;       // one N x N row-stochastic map per block and head
  std::vector<Array> vertical_attention;  // one per head
  Array vertical_bias;                    // N x N, all entries <= 0
  Array assignment_probs;                 // N x S
};

struct ForwardOutput {
  double count = 0.0;       // non-negative regression output
  double confidence = 0.0;  // strictly inside (0,1)
  Array assign_logits;      // N x S
  Array assign_probs;       // rows sum to 1
  std::optional<ForwardDiagnostics> diagnostics;
};

// Tape-bound forward pass; keeps ids alive so a loss can be attached and
// differentiated.
struct ForwardPass {
  Tape tape;
  VarId count_id = -1;
  VarId confidence_id = -1;
  VarId assign_logits_id = -1;
  std::vector<VarId> param_ids;  // aligned with ModelParams order
  Array assign_probs;
};

ForwardPass run_forward(const FacadeGraph& graph, const ModelParams& params,
                        const ModelConfig& config, RunMode mode, Rng* edge_dropout_rng = nullptr,
                        ForwardDiagnostics* diagnostics = nullptr);

ForwardOutput forward_eval(const FacadeGraph& graph, const ModelParams& params,
                           const ModelConfig& config, bool with_diagnostics = false);

int count_to_floors(double c_hat);  // max(1, round(c_hat))

// argmax per row; ties break toward the lower slot index
std::vector<int> hard_assignments(const Array& assign_probs);

void save_checkpoint(const ModelParams& params, const ModelConfig& config, const std::string& path);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace g2f
