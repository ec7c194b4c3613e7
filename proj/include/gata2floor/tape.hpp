#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gata2floor/array.hpp"

namespace g2f {

using VarId = int;

// Reverse-mode tape. Node values are immutable once recorded; ops append in
// execution order, so index order is a topological order and backward() is a
// single reverse sweep. One tape per forward pass, single-threaded; distinct
// tapes are independent.
class Tape {
 public:
  VarId leaf(Array value);

  const Array& value(VarId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }

  // binary ops; add/sub/mul broadcast a {1,n} row or {m,1} column against a
  // {m,n} matrix on either side
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);
  VarId matmul(VarId a, VarId b);

  // unary / constant-parameter ops
  VarId smul(VarId a, double c);
  VarId add_scalar(VarId a, double c);
  VarId neg(VarId a);
  VarId transpose(VarId a);
  VarId reshape(VarId a, std::vector<std::size_t> shape);
  VarId relu(VarId a);
  VarId leaky_relu(VarId a, double slope);
  VarId sigmoid(VarId a);
  VarId softplus(VarId a);
  VarId exp(VarId a);
  VarId log(VarId a);
  VarId smooth_l1(VarId a, double delta);
  VarId dropout(VarId a, const Array& mask);  // multiply by a precomputed mask

  VarId concat(const std::vector<VarId>& parts, int axis);
  VarId gather_rows(VarId a, std::vector<std::size_t> index);
  VarId scatter_add_rows(VarId a, std::vector<std::size_t> index, std::size_t out_rows);

  // axis 0 reduces over rows to {1,n}; axis 1 over columns to {m,1}
  VarId sum_axis(VarId a, int axis);
  VarId mean_axis(VarId a, int axis);
  VarId sum_all(VarId a);

  // mask, when given, is added to the logits before normalization
  VarId softmax(VarId a, int axis, const Array* mask = nullptr);
  VarId log_softmax(VarId a, int axis);

  // Gradient of `loss` (scalar) w.r.t. every node; leaves untouched by the
  // loss end up with zero gradient.
  void backward(VarId loss);
  const Array& grad(VarId id) const;

 private:
  struct Node {
    Array value;
    std::vector<VarId> parents;
    std::function<void(Tape&, VarId)> back;  // accumulate into parents' grads
  };

  VarId push(Array value, std::vector<VarId> parents, std::function<void(Tape&, VarId)> back);
  Array& grad_ref(VarId id) { return grads_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
  std::vector<Array> grads_;
  bool has_grads_ = false;
};

// Feature-wise normalization over a graph's nodes with learnable scale/shift,
// composed from primitive ops so gradients come for free.
VarId graph_norm(Tape& t, VarId x, VarId scale, VarId shift, double eps = 1e-8);

// linear layer helper: x @ W + b (b broadcast as a row)
VarId linear(Tape& t, VarId x, VarId w, VarId b);

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  double median_rel_err = 0.0;
  std::vector<double> rel_errs;  // per checked coordinate, flattened over params
  double fraction_below(double threshold) const;
};

// Central finite differences against analytic gradients. `loss_fn` must be a
// deterministic map from parameter values to a scalar; `grad_fn` returns the
// analytic gradient per parameter at the given point. Relative error per
// coordinate is |a - n| / max(1e-8, |a| + |n|).
FiniteDiffReport finite_diff_check(
    const std::function<double(const std::vector<Array>&)>& loss_fn,
    const std::function<std::vector<Array>(const std::vector<Array>&)>& grad_fn,
    std::vector<Array> params, double eps);

}  // namespace g2f
