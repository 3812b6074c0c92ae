#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "graphtoken/rng.hpp"
#include "graphtoken/tensor.hpp"

using namespace graphtoken;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = true,
                     double lo = -1.5, double hi = 1.5) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

double eval_loss(const std::function<Tensor(Tape&)>& f) {
  Tape tape;
  tape.set_recording(false);
  return f(tape).item();
}

// Central finite differences (h = 1e-5) against the taped gradient,
// relative error <= 1e-4 per coordinate.
void check_gradients(const std::function<Tensor(Tape&)>& f,
                     const std::vector<Tensor>& params) {
  for (Tensor p : params) {
    p.grad();  // ensure allocated
    p.zero_grad();
  }
  Tape tape;
  Tensor loss = f(tape);
  tape.backward(loss);
  const double h = 1e-5;
  for (Tensor p : params) {
    for (std::size_t i = 0; i < p.values().size(); ++i) {
      double orig = p.values()[i];
      p.values()[i] = orig + h;
      double fp = eval_loss(f);
      p.values()[i] = orig - h;
      double fm = eval_loss(f);
      p.values()[i] = orig;
      double numeric = (fp - fm) / (2.0 * h);
      double analytic = p.grad()[i];
      double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      REQUIRE(std::fabs(numeric - analytic) / denom <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("shape and index validation") {
  Tape tape;
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(add(tape, a, b), std::invalid_argument);
  CHECK_THROWS_AS(matmul(tape, a, a), std::invalid_argument);
  CHECK_THROWS_AS(gather_rows(tape, a, {2}), std::invalid_argument);
  CHECK_THROWS_AS(segment_sum(tape, a, {0, 2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(slice_rows(tape, a, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(layer_norm_rows(tape, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tape.backward(a), std::invalid_argument);  // non-scalar loss
}

TEST_CASE("trivial forward identities") {
  Tape tape;
  Tensor logits = Tensor::from_values({1, 4}, {3.0, -1.0, 0.5, 0.0});
  Tensor sm = softmax_rows(tape, logits);
  double total = 0.0;
  for (double v : sm.values()) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Tensor vals = Tensor::from_values({3, 1}, {1.0, 2.0, 3.0});
  Tensor seg = segment_sum(tape, vals, {0, 0, 1}, 2);
  CHECK(seg.values() == std::vector<double>{3.0, 3.0});

  // empty segment conventions
  Tensor seg3 = segment_sum(tape, vals, {0, 0, 0}, 2);
  CHECK(seg3.values()[1] == 0.0);
  Tensor segm = segment_mean(tape, vals, {2, 2, 2}, 3);
  CHECK(segm.values()[2] == doctest::Approx(2.0));
  CHECK(segm.values()[0] == 0.0);
  Tensor segx = segment_max(tape, vals, {1, 1, 1}, 2);
  CHECK(segx.values()[0] == 0.0);  // sentinel
  CHECK(segx.values()[1] == 3.0);
}

TEST_CASE("backward of sum is all ones; backward of x.x is 2x") {
  Tape tape;
  Tensor x = Tensor::from_values({2, 2}, {1.0, -2.0, 0.5, 3.0}, true);
  Tensor s = sum_all(tape, x);
  tape.backward(s);
  CHECK(x.grad() == std::vector<double>(4, 1.0));

  Tape tape2;
  x.zero_grad();
  Tensor sq = sum_all(tape2, mul(tape2, x, x));
  tape2.backward(sq);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.values()[i]));
  }
}

TEST_CASE("finite differences: every primitive") {
  Rng rng(2024);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 3}, rng);
  Tensor c = random_tensor({3, 4}, rng);
  Tensor row = random_tensor({4}, rng);
  Tensor table = random_tensor({5, 4}, rng);

  check_gradients([&](Tape& t) { return sum_all(t, matmul(t, a, b)); }, {a, b});
  check_gradients([&](Tape& t) { return sum_all(t, transpose(t, a)); }, {a});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, add(t, a, c), sub(t, a, c))); }, {a, c});
  check_gradients(
      [&](Tape& t) { return sum_all(t, add_scalar(t, mul_scalar(t, a, 1.7), 0.3)); }, {a});
  Tensor s = Tensor::scalar(0.8, true);
  check_gradients([&](Tape& t) { return sum_all(t, mul(t, scale(t, a, s), c)); }, {a, s});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, slice_cols(t, a, 1, 2), slice_cols(t, c, 2, 2))); },
      {a, c});
  check_gradients([&](Tape& t) { return sum_all(t, add_row(t, a, row)); }, {a, row});
  check_gradients([&](Tape& t) { return sum_all(t, mul_row(t, a, row)); }, {a, row});
  check_gradients([&](Tape& t) { return sum_all(t, relu(t, a)); }, {a});
  check_gradients([&](Tape& t) { return sum_all(t, gelu(t, a)); }, {a});
  // weight the softmax/layernorm outputs so the gradient is not structurally zero
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, softmax_rows(t, a), c)); }, {a});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, layer_norm_rows(t, a, 1e-5), c)); }, {a});
  check_gradients(
      [&](Tape& t) { return sum_all(t, gather_rows(t, table, {4, 0, 2, 0})); }, {table});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, concat_rows(t, {a, c}), concat_rows(t, {c, a}))); },
      {a, c});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, concat_cols(t, a, c), concat_cols(t, c, a))); },
      {a, c});
  check_gradients(
      [&](Tape& t) { return sum_all(t, mul(t, slice_rows(t, a, 1, 2), slice_rows(t, c, 0, 2))); },
      {a, c});
  check_gradients(
      [&](Tape& t) { return sum_all(t, matmul(t, segment_sum(t, a, {1, 0, 1}, 2), b)); }, {a});
  check_gradients(
      [&](Tape& t) { return sum_all(t, matmul(t, segment_mean(t, a, {1, 0, 1}, 2), b)); }, {a});
  check_gradients(
      [&](Tape& t) { return sum_all(t, matmul(t, segment_max(t, a, {1, 0, 1}, 3), b)); }, {a});
  check_gradients(
      [&](Tape& t) { return cross_entropy_with_logits(t, a, {2, 0, 3}, {1.0, 0.0, 1.0}); },
      {a});
}

TEST_CASE("finite differences: 10 random compositions") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor p = random_tensor({3, 3}, rng);
    Tensor q = random_tensor({3, 3}, rng);
    Tensor r = random_tensor({3}, rng);
    std::vector<int> ops;
    for (int i = 0; i < 6; ++i) ops.push_back(static_cast<int>(rng.uniform_int(0, 7)));
    auto f = [&, ops](Tape& t) {
      Tensor x = matmul(t, p, q);
      for (int op : ops) {
        switch (op) {
          case 0: x = relu(t, x); break;
          case 1: x = gelu(t, x); break;
          case 2: x = layer_norm_rows(t, x, 1e-5); break;
          case 3: x = softmax_rows(t, x); break;
          case 4: x = add(t, x, p); break;
          case 5: x = matmul(t, x, q); break;
          case 6: x = add_row(t, x, r); break;
          case 7: x = transpose(t, x); break;
        }
      }
      return sum_all(t, mul(t, x, q));
    };
    check_gradients(f, {p, q, r});
  }
}

TEST_CASE("determinism: identical inputs give bitwise identical values and gradients") {
  auto run = [](std::vector<double>& values_out, std::vector<double>& grad_out) {
    Rng rng(555);
    Tensor a = random_tensor({4, 4}, rng);
    Tensor b = random_tensor({4, 4}, rng);
    Tape tape;
    Tensor y = softmax_rows(tape, matmul(tape, gelu(tape, a), b));
    Tensor loss = cross_entropy_with_logits(tape, y, {1, 2, 0, 3}, {1, 1, 1, 1});
    tape.backward(loss);
    values_out = y.values();
    grad_out = a.grad();
  };
  std::vector<double> v1, g1, v2, g2;
  run(v1, g1);
  run(v2, g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("gradients never touch frozen tensors") {
  Rng rng(31);
  Tensor frozen = random_tensor({3, 3}, rng, /*requires_grad=*/false);
  Tensor live = random_tensor({3, 3}, rng, /*requires_grad=*/true);
  std::vector<double> frozen_before = frozen.values();

  Tape tape;
  // gradient must flow THROUGH the frozen matmul into `live`
  Tensor loss = sum_all(tape, gelu(tape, matmul(tape, live, frozen)));
  tape.backward(loss);

  CHECK(!frozen.has_grad());
  CHECK(frozen.values() == frozen_before);  // bitwise
  double live_norm = 0.0;
  for (double g : live.grad()) live_norm += std::fabs(g);
  CHECK(live_norm > 0.0);
}

TEST_CASE("non-reachable leaves keep zero gradients") {
  Rng rng(8);
  Tensor used = random_tensor({2, 2}, rng);
  Tensor unused = random_tensor({2, 2}, rng);
  Tape tape;
  Tensor loss = sum_all(tape, used);
  tape.backward(loss);
  CHECK(unused.grad() == std::vector<double>(4, 0.0));
}
