#include <doctest.h>

#include <cmath>
#include <vector>

#include "gata2floor/rng.hpp"
#include "gata2floor/tape.hpp"

using g2f::Array;
using g2f::Tape;
using g2f::VarId;

namespace {

Array random_array(std::vector<std::size_t> shape, g2f::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  for (double& v : a.data()) v = rng.uniform(lo, hi);
  return a;
}

// finite-difference check for a single-input op
template <typename BuildOp>
double fd_unary(const Array& x0, BuildOp build, double eps = 1e-6) {
  auto loss = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    return t.value(t.sum_all(build(t, x))).scalar_value();
  };
  auto grad = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    t.backward(t.sum_all(build(t, x)));
    return std::vector<Array>{t.grad(x)};
  };
  return g2f::finite_diff_check(loss, grad, {x0}, eps).max_rel_err;
}

template <typename BuildOp>
double fd_binary(const Array& a0, const Array& b0, BuildOp build, double eps = 1e-6) {
  auto loss = [&](const std::vector<Array>& p) {
    Tape t;
    VarId a = t.leaf(p[0]);
    VarId b = t.leaf(p[1]);
    return t.value(t.sum_all(build(t, a, b))).scalar_value();
  };
  auto grad = [&](const std::vector<Array>& p) {
    Tape t;
    VarId a = t.leaf(p[0]);
    VarId b = t.leaf(p[1]);
    t.backward(t.sum_all(build(t, a, b)));
    return std::vector<Array>{t.grad(a), t.grad(b)};
  };
  return g2f::finite_diff_check(loss, grad, {a0, b0}, eps).max_rel_err;
}

}  // namespace

TEST_CASE("softmax of a constant row is uniform") {
  Tape t;
  VarId x = t.leaf(Array({1, 3}, {0.0, 0.0, 0.0}));
  const Array& y = t.value(t.softmax(x, 1));
  for (std::size_t j = 0; j < 3; ++j) CHECK(y(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("sigmoid at zero is one half") {
  Tape t;
  VarId x = t.leaf(Array::scalar(0.0));
  CHECK(t.value(t.sigmoid(x)).scalar_value() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("matmul of ones") {
  Tape t;
  VarId a = t.leaf(Array::full({2, 3}, 1.0));
  VarId b = t.leaf(Array::full({3, 1}, 1.0));
  const Array& c = t.value(t.matmul(a, b));
  CHECK(c.shape() == std::vector<std::size_t>{2, 1});
  CHECK(c(0, 0) == 3.0);
  CHECK(c(1, 0) == 3.0);
}

TEST_CASE("matmul rejects mismatched shapes with a diagnostic") {
  Tape t;
  VarId a = t.leaf(Array({2, 3}));
  VarId b = t.leaf(Array({2, 3}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
}

TEST_CASE("gradient of sum of squares") {
  Tape t;
  VarId x = t.leaf(Array({1, 2}, {1.0, 2.0}));
  VarId loss = t.sum_all(t.mul(x, x));
  t.backward(loss);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.grad(x)(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gradient of sigmoid(w.x) at w=0 is x/4") {
  Array xv({2, 1}, {0.7, -1.3});
  Tape t;
  VarId w = t.leaf(Array({1, 2}));  // zeros
  VarId x = t.leaf(xv);
  VarId y = t.sigmoid(t.matmul(w, x));
  t.backward(y);
  CHECK(t.grad(w)(0, 0) == doctest::Approx(0.25 * 0.7).epsilon(1e-12));
  CHECK(t.grad(w)(0, 1) == doctest::Approx(0.25 * -1.3).epsilon(1e-12));
}

TEST_CASE("backward requires a scalar loss") {
  Tape t;
  VarId x = t.leaf(Array({2, 2}));
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("untouched leaves get zero gradient") {
  Tape t;
  VarId x = t.leaf(Array({1, 2}, {1.0, 2.0}));
  VarId unused = t.leaf(Array({3, 3}, std::vector<double>(9, 5.0)));
  t.backward(t.sum_all(x));
  for (double v : t.grad(unused).data()) CHECK(v == 0.0);
}

TEST_CASE("masked softmax equals softmax of logits plus mask and rows sum to 1") {
  g2f::Rng rng = g2f::substream(7, "mask-test");
  Array logits = random_array({4, 5}, rng, -2.0, 2.0);
  Array mask({4, 5});
  for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] = (i % 3 == 0) ? -1e30 : 0.0;
  mask(2, 0) = 0.0;  // keep at least one live entry per row

  Tape t;
  VarId x = t.leaf(logits);
  const Array& masked = t.value(t.softmax(x, 1, &mask));

  Array shifted = logits;
  for (std::size_t i = 0; i < shifted.numel(); ++i) shifted[i] += mask[i];
  Tape t2;
  const Array& direct = t2.value(t2.softmax(t2.leaf(shifted), 1));

  for (std::size_t i = 0; i < masked.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < masked.cols(); ++j) {
      row_sum += masked(i, j);
      CHECK(masked(i, j) == doctest::Approx(direct(i, j)).epsilon(1e-12));
    }
    CHECK(std::fabs(row_sum - 1.0) < 1e-9);
  }
}

TEST_CASE("backward is linear in the loss") {
  g2f::Rng rng = g2f::substream(11, "linearity");
  Array xv = random_array({3, 3}, rng);
  auto grad_of = [&](double a, double b) {
    Tape t;
    VarId x = t.leaf(xv);
    VarId l1 = t.sum_all(t.mul(x, x));
    VarId l2 = t.sum_all(t.sigmoid(x));
    t.backward(t.add(t.smul(l1, a), t.smul(l2, b)));
    return t.grad(x);
  };
  Array g_combined = grad_of(2.5, -1.5);
  Array g1 = grad_of(1.0, 0.0);
  Array g2 = grad_of(0.0, 1.0);
  for (std::size_t i = 0; i < g_combined.numel(); ++i)
    CHECK(std::fabs(g_combined[i] - (2.5 * g1[i] - 1.5 * g2[i])) < 1e-10);
}

TEST_CASE("every registered op passes finite differences on random shapes") {
  g2f::Rng rng = g2f::substream(3, "op-fd");
  Array m34 = random_array({3, 4}, rng);
  Array m34b = random_array({3, 4}, rng);
  Array m45 = random_array({4, 5}, rng);
  Array row = random_array({1, 4}, rng);
  Array col = random_array({3, 1}, rng);
  Array pos = random_array({3, 4}, rng, 0.5, 2.0);

  CHECK(fd_binary(m34, m34b, [](Tape& t, VarId a, VarId b) { return t.add(a, b); }) < 1e-8);
  CHECK(fd_binary(m34, row, [](Tape& t, VarId a, VarId b) { return t.sub(a, b); }) < 1e-8);
  CHECK(fd_binary(m34, col, [](Tape& t, VarId a, VarId b) { return t.mul(a, b); }) < 1e-7);
  CHECK(fd_binary(col, m34, [](Tape& t, VarId a, VarId b) { return t.mul(a, b); }) < 1e-7);
  CHECK(fd_binary(m34, m45, [](Tape& t, VarId a, VarId b) { return t.matmul(a, b); }) < 1e-7);
  CHECK(fd_binary(m34, m34b, [](Tape& t, VarId a, VarId b) { return t.concat({a, b}, 0); }) < 1e-8);
  CHECK(fd_binary(m34, m34b, [](Tape& t, VarId a, VarId b) { return t.concat({a, b}, 1); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.smul(x, -2.5); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.add_scalar(x, 1.25); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.transpose(x); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.reshape(x, {4, 3}); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.leaky_relu(x, 0.2); }) < 1e-6);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.relu(x); }) < 1e-6);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.sigmoid(x); }) < 1e-7);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.softplus(x); }) < 1e-7);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.exp(x); }) < 1e-7);
  CHECK(fd_unary(pos, [](Tape& t, VarId x) { return t.log(x); }) < 1e-7);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.smooth_l1(x, 0.5); }) < 1e-6);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.sum_axis(x, 0); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.sum_axis(x, 1); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) { return t.mean_axis(x, 0); }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) {
          return t.mul(t.softmax(x, 1), t.softmax(x, 0));
        }) < 1e-6);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) {
          return t.mul(t.log_softmax(x, 1), t.log_softmax(x, 1));
        }) < 1e-6);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) {
          return t.gather_rows(x, {2, 0, 0, 1});
        }) < 1e-8);
  CHECK(fd_unary(m34, [](Tape& t, VarId x) {
          return t.scatter_add_rows(x, {1, 0, 1}, 2);
        }) < 1e-8);
  Array mask({3, 4});
  for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] = i % 2 ? 0.0 : 1.0;
  CHECK(fd_unary(m34, [&mask](Tape& t, VarId x) { return t.dropout(x, mask); }) < 1e-8);

  Array scale = random_array({1, 4}, rng, 0.5, 1.5);
  Array shift = random_array({1, 4}, rng);
  auto gn_loss = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    VarId sc = t.leaf(p[1]);
    VarId sh = t.leaf(p[2]);
    return t.value(t.sum_all(t.sigmoid(g2f::graph_norm(t, x, sc, sh)))).scalar_value();
  };
  auto gn_grad = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    VarId sc = t.leaf(p[1]);
    VarId sh = t.leaf(p[2]);
    t.backward(t.sum_all(t.sigmoid(g2f::graph_norm(t, x, sc, sh))));
    return std::vector<Array>{t.grad(x), t.grad(sc), t.grad(sh)};
  };
  CHECK(g2f::finite_diff_check(gn_loss, gn_grad, {m34, scale, shift}, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("scatter_add_rows accumulates rows by index") {
  Tape t;
  VarId x = t.leaf(Array({3, 2}, {1, 2, 3, 4, 5, 6}));
  const Array& y = t.value(t.scatter_add_rows(x, {1, 0, 1}, 2));
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == 4.0);
  CHECK(y(1, 0) == 6.0);
  CHECK(y(1, 1) == 8.0);
}

TEST_CASE("finite differences on a quadratic bowl are exact to roundoff") {
  Array x0({2, 2}, {0.3, -0.4, 1.2, 0.9});
  CHECK(fd_unary(x0, [](Tape& t, VarId x) { return t.mul(x, x); }, 1e-4) < 1e-8);
}

TEST_CASE("finite differences on softmax cross-entropy composite") {
  g2f::Rng rng = g2f::substream(5, "ce-fd");
  Array logits = random_array({4, 6}, rng, -1.5, 1.5);
  Array onehot({4, 6});
  for (std::size_t i = 0; i < 4; ++i) onehot(i, (i * 2) % 6) = 1.0;
  auto build = [&](Tape& t, VarId x) {
    return t.smul(t.sum_all(t.mul(t.log_softmax(x, 1), t.leaf(onehot))), -0.25);
  };
  auto loss = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    return t.value(build(t, x)).scalar_value();
  };
  auto grad = [&](const std::vector<Array>& p) {
    Tape t;
    VarId x = t.leaf(p[0]);
    t.backward(build(t, x));
    return std::vector<Array>{t.grad(x)};
  };
  CHECK(g2f::finite_diff_check(loss, grad, {logits}, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("finite_diff_check validates its inputs") {
  auto loss = [](const std::vector<Array>& p) { return p[0].scalar_value() * p[0].scalar_value(); };
  auto grad = [](const std::vector<Array>& p) {
    return std::vector<Array>{Array::scalar(2.0 * p[0].scalar_value())};
  };
  CHECK_THROWS_AS(g2f::finite_diff_check(loss, grad, {Array::scalar(1.0)}, 1e-2),
                  std::invalid_argument);

  int calls = 0;
  auto unstable = [&calls](const std::vector<Array>&) { return static_cast<double>(calls++); };
  CHECK_THROWS_AS(g2f::finite_diff_check(unstable, grad, {Array::scalar(1.0)}, 1e-5),
                  std::runtime_error);
}

TEST_CASE("graph_norm output has zero per-feature mean at unit scale and zero shift") {
  g2f::Rng rng = g2f::substream(9, "gn-mean");
  Array x = random_array({6, 5}, rng, -3.0, 3.0);
  Tape t;
  VarId out = g2f::graph_norm(t, t.leaf(x), t.leaf(Array::full({1, 5}, 1.0)), t.leaf(Array({1, 5})));
  const Array& y = t.value(out);
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 6; ++i) mean += y(i, j);
    CHECK(std::fabs(mean / 6.0) < 1e-9);
  }
}
