#include "gata2floor/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace g2f {

namespace {

[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                              " vs " + shape_to_string(b.shape()));
}

[[noreturn]] void shape_error(const char* op, const Array& a) {
  throw std::invalid_argument(std::string(op) + ": unsupported shape " + shape_to_string(a.shape()));
}

bool is_matrix(const Array& a) { return a.rank() == 2; }

// Broadcast classification for binary elementwise ops. `kRowB` means b is a
// {1,n} row against a {m,n} matrix a, and so on.
enum class Bcast { kNone, kRowB, kColB, kRowA, kColA };

Bcast classify(const char* op, const Array& a, const Array& b) {
  if (a.same_shape(b)) return Bcast::kNone;
  if (!is_matrix(a) || !is_matrix(b)) shape_error(op, a, b);
  if (b.rows() == 1 && b.cols() == a.cols() && a.rows() > 1) return Bcast::kRowB;
  if (b.cols() == 1 && b.rows() == a.rows() && a.cols() > 1) return Bcast::kColB;
  if (a.rows() == 1 && a.cols() == b.cols() && b.rows() > 1) return Bcast::kRowA;
  if (a.cols() == 1 && a.rows() == b.rows() && b.cols() > 1) return Bcast::kColA;
  shape_error(op, a, b);
}

// out gets the broadcast-expanded value of the smaller operand at (i,j)
double pick(const Array& v, Bcast mode, bool is_a, std::size_t i, std::size_t j) {
  switch (mode) {
    case Bcast::kNone:
      return v(i, j);
    case Bcast::kRowB:
      return is_a ? v(i, j) : v(0, j);
    case Bcast::kColB:
      return is_a ? v(i, j) : v(i, 0);
    case Bcast::kRowA:
      return is_a ? v(0, j) : v(i, j);
    case Bcast::kColA:
      return is_a ? v(i, 0) : v(i, j);
  }
  return 0.0;
}

// accumulate grad for a possibly-broadcast operand
void accumulate(Array& dst, const Array& gout, Bcast mode, bool is_a,
                const std::function<double(std::size_t, std::size_t)>& term) {
  bool reduced = (mode != Bcast::kNone) && (is_a == (mode == Bcast::kRowA || mode == Bcast::kColA));
  std::size_t m = gout.rows(), n = gout.cols();
  if (!reduced) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dst(i, j) += gout(i, j) * term(i, j);
    return;
  }
  bool row = (mode == Bcast::kRowA || mode == Bcast::kRowB);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double g = gout(i, j) * term(i, j);
      if (row)
        dst(0, j) += g;
      else
        dst(i, 0) += g;
    }
  }
}

void mm_accum(Array& c, const Array& a, const Array& b) {  // c += a @ b
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data().data() + i * k;
    double* crow = c.data().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void mm_accum_at_b(Array& c, const Array& a, const Array& b) {  // c += a^T @ b
  std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data().data() + p * m;
    const double* brow = b.data().data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void mm_accum_a_bt(Array& c, const Array& a, const Array& b) {  // c += a @ b^T
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data().data() + i * k;
    double* crow = c.data().data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data().data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

VarId Tape::push(Array value, std::vector<VarId> parents, std::function<void(Tape&, VarId)> back) {
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(back)});
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::leaf(Array value) { return push(std::move(value), {}, nullptr); }

VarId Tape::add(VarId a, VarId b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  Bcast mode = classify("add", va, vb);
  const Array& big = (mode == Bcast::kRowA || mode == Bcast::kColA) ? vb : va;
  Array out(big.shape());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = pick(va, mode, true, i, j) + pick(vb, mode, false, i, j);
  return push(std::move(out), {a, b}, [a, b, mode](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    accumulate(t.grad_ref(a), g, mode, true, [](std::size_t, std::size_t) { return 1.0; });
    accumulate(t.grad_ref(b), g, mode, false, [](std::size_t, std::size_t) { return 1.0; });
  });
}

VarId Tape::sub(VarId a, VarId b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  Bcast mode = classify("sub", va, vb);
  const Array& big = (mode == Bcast::kRowA || mode == Bcast::kColA) ? vb : va;
  Array out(big.shape());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = pick(va, mode, true, i, j) - pick(vb, mode, false, i, j);
  return push(std::move(out), {a, b}, [a, b, mode](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    accumulate(t.grad_ref(a), g, mode, true, [](std::size_t, std::size_t) { return 1.0; });
    accumulate(t.grad_ref(b), g, mode, false, [](std::size_t, std::size_t) { return -1.0; });
  });
}

VarId Tape::mul(VarId a, VarId b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  Bcast mode = classify("mul", va, vb);
  const Array& big = (mode == Bcast::kRowA || mode == Bcast::kColA) ? vb : va;
  Array out(big.shape());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = pick(va, mode, true, i, j) * pick(vb, mode, false, i, j);
  return push(std::move(out), {a, b}, [a, b, mode](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& va = t.value(a);
    const Array& vb = t.value(b);
    accumulate(t.grad_ref(a), g, mode, true,
               [&](std::size_t i, std::size_t j) { return pick(vb, mode, false, i, j); });
    accumulate(t.grad_ref(b), g, mode, false,
               [&](std::size_t i, std::size_t j) { return pick(va, mode, true, i, j); });
  });
}

VarId Tape::matmul(VarId a, VarId b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  if (!is_matrix(va) || !is_matrix(vb) || va.cols() != vb.rows()) shape_error("matmul", va, vb);
  Array out({va.rows(), vb.cols()});
  mm_accum(out, va, vb);
  return push(std::move(out), {a, b}, [a, b](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    mm_accum_a_bt(t.grad_ref(a), g, t.value(b));   // dA += G @ B^T
    mm_accum_at_b(t.grad_ref(b), t.value(a), g);   // dB += A^T @ G
  });
}

VarId Tape::smul(VarId a, double c) {
  Array out = value(a);
  for (double& v : out.data()) v *= c;
  return push(std::move(out), {a}, [a, c](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
  });
}

VarId Tape::add_scalar(VarId a, double c) {
  Array out = value(a);
  for (double& v : out.data()) v += c;
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
}

VarId Tape::neg(VarId a) { return smul(a, -1.0); }

VarId Tape::transpose(VarId a) {
  const Array& va = value(a);
  if (!is_matrix(va)) shape_error("transpose", va);
  Array out({va.cols(), va.rows()});
  for (std::size_t i = 0; i < va.rows(); ++i)
    for (std::size_t j = 0; j < va.cols(); ++j) out(j, i) = va(i, j);
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
  });
}

VarId Tape::reshape(VarId a, std::vector<std::size_t> shape) {
  const Array& va = value(a);
  Array out(std::move(shape), va.data());
  if (out.numel() != va.numel()) shape_error("reshape", va, out);
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
}

VarId Tape::relu(VarId a) {
  Array out = value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& x = t.value(a);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
  });
}

VarId Tape::leaky_relu(VarId a, double slope) {
  Array out = value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return push(std::move(out), {a}, [a, slope](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& x = t.value(a);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += (x[i] > 0.0 ? 1.0 : slope) * g[i];
  });
}

VarId Tape::sigmoid(VarId a) {
  Array out = value(a);
  for (double& v : out.data()) v = stable_sigmoid(v);
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& y = t.value(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += y[i] * (1.0 - y[i]) * g[i];
  });
}

VarId Tape::softplus(VarId a) {
  Array out = value(a);
  for (double& v : out.data()) v = stable_softplus(v);
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& x = t.value(a);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += stable_sigmoid(x[i]) * g[i];
  });
}

VarId Tape::exp(VarId a) {
  Array out = value(a);
  for (double& v : out.data()) v = std::exp(v);
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& y = t.value(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += y[i] * g[i];
  });
}

VarId Tape::log(VarId a) {
  Array out = value(a);
  for (double& v : out.data()) {
    if (v <= 0.0) throw std::domain_error("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  return push(std::move(out), {a}, [a](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& x = t.value(a);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] / x[i];
  });
}

VarId Tape::smooth_l1(VarId a, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("smooth_l1: delta must be positive");
  Array out = value(a);
  for (double& v : out.data()) {
    double ax = std::fabs(v);
    v = ax < delta ? v * v / (2.0 * delta) : ax - delta / 2.0;
  }
  return push(std::move(out), {a}, [a, delta](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& x = t.value(a);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double d = std::fabs(x[i]) < delta ? x[i] / delta : (x[i] > 0.0 ? 1.0 : -1.0);
      ga[i] += d * g[i];
    }
  });
}

VarId Tape::dropout(VarId a, const Array& mask) {
  const Array& va = value(a);
  if (!va.same_shape(mask)) shape_error("dropout", va, mask);
  Array out = va;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i];
  Array mask_copy = mask;
  return push(std::move(out), {a}, [a, mask_copy](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += mask_copy[i] * g[i];
  });
}

VarId Tape::concat(const std::vector<VarId>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  const Array& first = value(parts[0]);
  if (!is_matrix(first)) shape_error("concat", first);
  std::size_t rows = first.rows(), cols = first.cols();
  std::size_t total = axis == 0 ? rows : cols;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Array& v = value(parts[p]);
    if (!is_matrix(v) || (axis == 0 ? v.cols() != cols : v.rows() != rows))
      shape_error("concat", first, v);
    total += axis == 0 ? v.rows() : v.cols();
  }
  Array out(axis == 0 ? std::vector<std::size_t>{total, cols} : std::vector<std::size_t>{rows, total});
  std::size_t offset = 0;
  for (VarId p : parts) {
    const Array& v = value(p);
    if (axis == 0) {
      std::copy(v.data().begin(), v.data().end(), out.data().begin() + offset * cols);
      offset += v.rows();
    } else {
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
      offset += v.cols();
    }
  }
  std::vector<VarId> parents = parts;
  return push(std::move(out), parents, [parents, axis](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    std::size_t offset = 0;
    for (VarId p : parents) {
      Array& gp = t.grad_ref(p);
      const Array& v = t.value(p);
      if (axis == 0) {
        for (std::size_t i = 0; i < v.rows(); ++i)
          for (std::size_t j = 0; j < v.cols(); ++j) gp(i, j) += g(offset + i, j);
        offset += v.rows();
      } else {
        for (std::size_t i = 0; i < v.rows(); ++i)
          for (std::size_t j = 0; j < v.cols(); ++j) gp(i, j) += g(i, offset + j);
        offset += v.cols();
      }
    }
  });
}

VarId Tape::gather_rows(VarId a, std::vector<std::size_t> index) {
  const Array& va = value(a);
  if (!is_matrix(va)) shape_error("gather_rows", va);
  for (std::size_t r : index) {
    if (r >= va.rows())
      throw std::out_of_range("gather_rows: index " + std::to_string(r) + " out of " +
                              std::to_string(va.rows()) + " rows");
  }
  std::size_t cols = va.cols();
  Array out({index.size(), cols});
  for (std::size_t r = 0; r < index.size(); ++r)
    std::copy(va.data().begin() + index[r] * cols, va.data().begin() + (index[r] + 1) * cols,
              out.data().begin() + r * cols);
  return push(std::move(out), {a}, [a, index = std::move(index)](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    std::size_t cols = g.cols();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < cols; ++j) ga(index[r], j) += g(r, j);
  });
}

VarId Tape::scatter_add_rows(VarId a, std::vector<std::size_t> index, std::size_t out_rows) {
  const Array& va = value(a);
  if (!is_matrix(va) || index.size() != va.rows()) shape_error("scatter_add_rows", va);
  for (std::size_t r : index) {
    if (r >= out_rows)
      throw std::out_of_range("scatter_add_rows: index " + std::to_string(r) + " out of " +
                              std::to_string(out_rows) + " rows");
  }
  std::size_t cols = va.cols();
  Array out({out_rows, cols});
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t j = 0; j < cols; ++j) out(index[r], j) += va(r, j);
  return push(std::move(out), {a}, [a, index = std::move(index)](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    std::size_t cols = g.cols();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < cols; ++j) ga(r, j) += g(index[r], j);
  });
}

VarId Tape::sum_axis(VarId a, int axis) {
  const Array& va = value(a);
  if (!is_matrix(va) || (axis != 0 && axis != 1)) shape_error("sum_axis", va);
  std::size_t m = va.rows(), n = va.cols();
  Array out(axis == 0 ? std::vector<std::size_t>{1, n} : std::vector<std::size_t>{m, 1});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (axis == 0)
        out(0, j) += va(i, j);
      else
        out(i, 0) += va(i, j);
    }
  return push(std::move(out), {a}, [a, axis](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += axis == 0 ? g(0, j) : g(i, 0);
  });
}

VarId Tape::mean_axis(VarId a, int axis) {
  const Array& va = value(a);
  if (!is_matrix(va) || (axis != 0 && axis != 1)) shape_error("mean_axis", va);
  double scale = 1.0 / static_cast<double>(axis == 0 ? va.rows() : va.cols());
  return smul(sum_axis(a, axis), scale);
}

VarId Tape::sum_all(VarId a) {
  const Array& va = value(a);
  double total = 0.0;
  for (double v : va.data()) total += v;
  return push(Array::scalar(total), {a}, [a](Tape& t, VarId self) {
    double g = t.grad_ref(self)[0];
    Array& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
}

namespace {
// shared slice-wise softmax machinery: axis 1 walks rows, axis 0 walks columns
struct SliceView {
  std::size_t count, length, stride_slice, stride_elem;
};

SliceView slices(const Array& a, int axis) {
  if (axis == 1) return {a.rows(), a.cols(), a.cols(), 1};
  return {a.cols(), a.rows(), 1, a.cols()};
}
}  // namespace

VarId Tape::softmax(VarId a, int axis, const Array* mask) {
  const Array& va = value(a);
  if (!is_matrix(va) || (axis != 0 && axis != 1)) shape_error("softmax", va);
  if (mask && !mask->same_shape(va)) shape_error("softmax(mask)", va, *mask);
  Array out(va.shape());
  SliceView sv = slices(va, axis);
  for (std::size_t s = 0; s < sv.count; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < sv.length; ++e) {
      std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
      double v = va[idx] + (mask ? (*mask)[idx] : 0.0);
      mx = std::max(mx, v);
    }
    double denom = 0.0;
    for (std::size_t e = 0; e < sv.length; ++e) {
      std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
      double v = std::exp(va[idx] + (mask ? (*mask)[idx] : 0.0) - mx);
      out[idx] = v;
      denom += v;
    }
    for (std::size_t e = 0; e < sv.length; ++e) {
      std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
      out[idx] /= denom;
    }
  }
  return push(std::move(out), {a}, [a, axis](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& y = t.value(self);
    Array& ga = t.grad_ref(a);
    SliceView sv = slices(y, axis);
    for (std::size_t s = 0; s < sv.count; ++s) {
      double dot = 0.0;
      for (std::size_t e = 0; e < sv.length; ++e) {
        std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
        dot += g[idx] * y[idx];
      }
      for (std::size_t e = 0; e < sv.length; ++e) {
        std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
        ga[idx] += y[idx] * (g[idx] - dot);
      }
    }
  });
}

VarId Tape::log_softmax(VarId a, int axis) {
  const Array& va = value(a);
  if (!is_matrix(va) || (axis != 0 && axis != 1)) shape_error("log_softmax", va);
  Array out(va.shape());
  SliceView sv = slices(va, axis);
  for (std::size_t s = 0; s < sv.count; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < sv.length; ++e)
      mx = std::max(mx, va[s * sv.stride_slice + e * sv.stride_elem]);
    double denom = 0.0;
    for (std::size_t e = 0; e < sv.length; ++e)
      denom += std::exp(va[s * sv.stride_slice + e * sv.stride_elem] - mx);
    double lse = mx + std::log(denom);
    for (std::size_t e = 0; e < sv.length; ++e) {
      std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
      out[idx] = va[idx] - lse;
    }
  }
  return push(std::move(out), {a}, [a, axis](Tape& t, VarId self) {
    const Array& g = t.grad_ref(self);
    const Array& y = t.value(self);  // log-probabilities
    Array& ga = t.grad_ref(a);
    SliceView sv = slices(y, axis);
    for (std::size_t s = 0; s < sv.count; ++s) {
      double gsum = 0.0;
      for (std::size_t e = 0; e < sv.length; ++e)
        gsum += g[s * sv.stride_slice + e * sv.stride_elem];
      for (std::size_t e = 0; e < sv.length; ++e) {
        std::size_t idx = s * sv.stride_slice + e * sv.stride_elem;
        ga[idx] += g[idx] - std::exp(y[idx]) * gsum;
      }
    }
  });
}

void Tape::backward(VarId loss) {
  if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
    throw std::out_of_range("backward: unknown node");
  if (!value(loss).is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_to_string(value(loss).shape()));
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.shape());
  grads_[static_cast<std::size_t>(loss)][0] = 1.0;
  for (VarId id = loss; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.back) n.back(*this, id);
  }
  has_grads_ = true;
}

const Array& Tape::grad(VarId id) const {
  if (!has_grads_) throw std::logic_error("grad: backward() has not run");
  return grads_[static_cast<std::size_t>(id)];
}

VarId graph_norm(Tape& t, VarId x, VarId scale, VarId shift, double eps) {
  VarId mu = t.mean_axis(x, 0);
  VarId centered = t.sub(x, mu);
  VarId var = t.mean_axis(t.mul(centered, centered), 0);
  VarId inv_std = t.exp(t.smul(t.log(t.add_scalar(var, eps)), -0.5));
  VarId normalized = t.mul(centered, inv_std);
  return t.add(t.mul(normalized, scale), shift);
}

VarId linear(Tape& t, VarId x, VarId w, VarId b) { return t.add(t.matmul(x, w), b); }

double FiniteDiffReport::fraction_below(double threshold) const {
  if (rel_errs.empty()) return 1.0;
  std::size_t n = 0;
  for (double e : rel_errs)
    if (e < threshold) ++n;
  return static_cast<double>(n) / static_cast<double>(rel_errs.size());
}

FiniteDiffReport finite_diff_check(
    const std::function<double(const std::vector<Array>&)>& loss_fn,
    const std::function<std::vector<Array>(const std::vector<Array>&)>& grad_fn,
    std::vector<Array> params, double eps) {
  if (eps < 1e-7 || eps > 1e-3)
    throw std::invalid_argument("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  double probe1 = loss_fn(params);
  double probe2 = loss_fn(params);
  if (probe1 != probe2)
    throw std::runtime_error("finite_diff_check: loss function is not deterministic");

  std::vector<Array> analytic = grad_fn(params);
  if (analytic.size() != params.size())
    throw std::invalid_argument("finite_diff_check: gradient count mismatch");

  FiniteDiffReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!analytic[p].same_shape(params[p]))
      throw std::invalid_argument("finite_diff_check: gradient shape mismatch at param " +
                                  std::to_string(p));
    for (std::size_t i = 0; i < params[p].numel(); ++i) {
      double saved = params[p][i];
      params[p][i] = saved + eps;
      double f_plus = loss_fn(params);
      params[p][i] = saved - eps;
      double f_minus = loss_fn(params);
      params[p][i] = saved;
      double numeric = (f_plus - f_minus) / (2.0 * eps);
      double a = analytic[p][i];
      double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
      report.rel_errs.push_back(rel);
      report.max_rel_err = std::max(report.max_rel_err, rel);
    }
  }
  if (!report.rel_errs.empty()) {
    std::vector<double> sorted = report.rel_errs;
    std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
    report.median_rel_err = sorted[mid];
  }
  return report;
}

}  // namespace g2f
