#include <doctest.h>

#include <cmath>

#include "grad_check.hpp"
#include "text2lip/errors.hpp"
#include "text2lip/tensor.hpp"

using namespace t2l;
using t2l_test::max_grad_error;
using t2l_test::random_tensor;

TEST_CASE("matmul against identity returns the operand unchanged") {
  Tensor x = Tensor::from_data({3, 2}, {1.5, -2.0, 0.25, 4.0, -1.0, 3.0});
  Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor y = matmul(eye, x);
  for (std::size_t i = 0; i < x.data().size(); ++i)
    CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("matmul on a hand-computed 2x2 case") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  CHECK(c.data() == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("shape mismatch reports both shapes") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  try {
    matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const ShapeMismatch& e) {
    std::string msg = e.what();
    CHECK(msg.find("(2, 3)") != std::string::npos);
    CHECK(msg.find("(2, 2)") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(mul(a, b), ShapeMismatch);
}

TEST_CASE("softmax of a zero vector is uniform") {
  Tensor z = Tensor::zeros({4});
  Tensor s = softmax(z);
  for (double v : s.data()) CHECK(v == 0.25);
  Tensor s5 = softmax(Tensor::zeros({1, 5}));
  for (double v : s5.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("softmax rows sum to one and axis 0 matches transposed axis 1") {
  Rng rng(11);
  Tensor x = random_tensor({5, 7}, rng, 3.0);
  Tensor s1 = softmax(x, 1);
  for (int i = 0; i < 5; ++i) {
    double row = 0.0;
    for (int j = 0; j < 7; ++j) row += s1.data()[i * 7 + j];
    CHECK(std::abs(row - 1.0) < 1e-9);
  }
  Tensor s0 = softmax(x, 0);
  Tensor s0t = transpose(softmax(transpose(x), 1));
  for (std::size_t i = 0; i < s0.data().size(); ++i)
    CHECK(s0.data()[i] == s0t.data()[i]);
}

TEST_CASE("layer_norm rows have zero mean and unit variance") {
  Rng rng(12);
  // spread well above eps so the variance statement is clean
  Tensor x = random_tensor({4, 16}, rng, 10.0);
  Tensor y = layer_norm(x);
  for (int i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < 16; ++j) mean += y.data()[i * 16 + j];
    mean /= 16;
    for (int j = 0; j < 16; ++j) {
      double d = y.data()[i * 16 + j] - mean;
      var += d * d;
    }
    var /= 16;
    CHECK(std::abs(mean) < 1e-7);
    CHECK(std::abs(var - 1.0) < 1e-5);
  }
}

TEST_CASE("embedding_lookup gathers rows and rejects out-of-vocab ids") {
  Tensor table = Tensor::from_data({3, 2}, {0, 1, 10, 11, 20, 21});
  Tensor out = embedding_lookup(table, {2, 0, 2});
  CHECK(out.data() == std::vector<double>{20, 21, 0, 1, 20, 21});
  CHECK_THROWS_AS(embedding_lookup(table, {3}), IndexOutOfVocab);
  CHECK_THROWS_AS(embedding_lookup(table, {-1}), IndexOutOfVocab);
}

TEST_CASE("concat and slice are inverses") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 3}, {5, 6, 7, 8, 9, 10});
  Tensor c = concat({a, b}, 1);
  CHECK(c.shape() == Shape{2, 5});
  CHECK(c.data() == std::vector<double>{1, 2, 5, 6, 7, 3, 4, 8, 9, 10});
  Tensor back = slice(c, 1, 2, 5);
  CHECK(back.data() == b.data());

  Tensor c0 = concat({a, a}, 0);
  CHECK(c0.shape() == Shape{4, 2});
  CHECK(slice(c0, 0, 2, 4).data() == a.data());
  CHECK_THROWS_AS(slice(c0, 0, 3, 3), ShapeMismatch);
  CHECK_THROWS_AS(slice(c0, 0, 0, 5), ShapeMismatch);
}

// ---- gradient fidelity: every op against central finite differences ----

namespace {
// standard reduction to a scalar: weight the op output by a fixed random
// tensor so incoming gradients are non-uniform
Tensor weighted_sum(const Tensor& y, const Tensor& w) {
  return sum_all(mul(y, w));
}
}  // namespace

TEST_CASE("finite-difference check: matmul") {
  Rng rng(21);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor w = random_tensor({3, 2}, rng);
  auto f = [&] { return weighted_sum(matmul(a, b), w); };
  CHECK(max_grad_error(f, {a, b}) < 1e-4);
}

TEST_CASE("finite-difference check: add sub mul scale") {
  Rng rng(22);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor b = random_tensor({3, 3}, rng);
  Tensor w = random_tensor({3, 3}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(add(a, b), w); }, {a, b}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(sub(a, b), w); }, {a, b}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(mul(a, b), w); }, {a, b}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(scale(a, -1.7), w); }, {a}) < 1e-4);
}

TEST_CASE("finite-difference check: add_rows and scale_rows") {
  Rng rng(23);
  Tensor m = random_tensor({4, 3}, rng);
  Tensor row = random_tensor({3}, rng);
  Tensor v = random_tensor({4}, rng);
  Tensor w = random_tensor({4, 3}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(add_rows(m, row), w); },
                       {m, row}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(scale_rows(m, v), w); },
                       {m, v}) < 1e-4);
}

TEST_CASE("finite-difference check: sigmoid tanh") {
  Rng rng(24);
  Tensor a = random_tensor({2, 5}, rng);
  Tensor w = random_tensor({2, 5}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(sigmoid(a), w); }, {a}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(t2l::tanh(a), w); }, {a}) < 1e-4);
}

TEST_CASE("finite-difference check: softmax both axes") {
  Rng rng(25);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor w = random_tensor({3, 4}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(softmax(a, 1), w); }, {a}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(softmax(a, 0), w); }, {a}) < 1e-4);
}

TEST_CASE("finite-difference check: layer_norm both axes") {
  Rng rng(26);
  Tensor a = random_tensor({3, 6}, rng, 2.0);
  Tensor w = random_tensor({3, 6}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(layer_norm(a, 1), w); }, {a}) < 1e-4);
  CHECK(max_grad_error([&] { return weighted_sum(layer_norm(a, 0), w); }, {a}) < 1e-4);
}

TEST_CASE("finite-difference check: embedding_lookup") {
  Rng rng(27);
  Tensor table = random_tensor({5, 3}, rng);
  Tensor w = random_tensor({4, 3}, rng);
  std::vector<int> ids = {1, 4, 1, 0};  // repeated id exercises accumulation
  auto f = [&] { return weighted_sum(embedding_lookup(table, ids), w); };
  CHECK(max_grad_error(f, {table}) < 1e-4);
}

TEST_CASE("finite-difference check: concat slice transpose") {
  Rng rng(28);
  Tensor a = random_tensor({2, 3}, rng);
  Tensor b = random_tensor({2, 2}, rng);
  Tensor w1 = random_tensor({2, 5}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(concat({a, b}, 1), w1); },
                       {a, b}) < 1e-4);
  Tensor c = random_tensor({1, 3}, rng);
  Tensor w0 = random_tensor({3, 3}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(concat({a, c}, 0), w0); },
                       {a, c}) < 1e-4);
  Tensor ws = random_tensor({2, 2}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(slice(a, 1, 1, 3), ws); },
                       {a}) < 1e-4);
  Tensor wt = random_tensor({3, 2}, rng);
  CHECK(max_grad_error([&] { return weighted_sum(transpose(a), wt); }, {a}) < 1e-4);
}

TEST_CASE("finite-difference check: mean_all sum_all") {
  Rng rng(29);
  Tensor a = random_tensor({3, 4}, rng);
  CHECK(max_grad_error([&] { return mean_all(a); }, {a}) < 1e-4);
  CHECK(max_grad_error([&] { return sum_all(a); }, {a}) < 1e-4);
  // composition with reuse of the same tensor in two branches
  CHECK(max_grad_error([&] { return mean_all(mul(a, a)); }, {a}) < 1e-4);
}

TEST_CASE("backward of a sum of losses equals sum of backwards") {
  Rng rng(30);
  Tensor x = random_tensor({2, 3}, rng);
  x.node->requires_grad = true;

  auto loss_a = [&] { return mean_all(mul(x, x)); };
  auto loss_b = [&] { return sum_all(sigmoid(x)); };

  x.grad().assign(x.data().size(), 0.0);
  backward(add(loss_a(), loss_b()));
  std::vector<double> combined = x.node->grad;

  x.grad().assign(x.data().size(), 0.0);
  backward(loss_a());
  backward(loss_b());
  for (std::size_t i = 0; i < combined.size(); ++i)
    CHECK(std::abs(combined[i] - x.node->grad[i]) < 1e-12);
}

TEST_CASE("finite checks surface NaN as NumericError") {
  set_finite_checks(true);
  Tensor inf = Tensor::from_data({1}, {1e308});
  Tensor big = Tensor::from_data({1}, {10.0});
  CHECK_THROWS_AS(mul(scale(inf, 10.0), big), NumericError);
  set_finite_checks(false);
  CHECK_NOTHROW(mul(scale(inf, 10.0), big));
}

// ---- parameter store and optimizer ----

TEST_CASE("ParamStore rejects duplicates and counts parameters") {
  ParamStore ps;
  ps.add("a", Tensor::zeros({2, 3}, true));
  ps.add("b", Tensor::zeros({4}, true));
  CHECK_THROWS_AS(ps.add("a", Tensor::zeros({1}, true)), DataError);
  CHECK(ps.param_count() == 10);
  CHECK(ps.contains("b"));
  CHECK_FALSE(ps.contains("c"));
  CHECK_THROWS_AS(ps.at("c"), DataError);
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  ParamStore ps;
  ps.add("w", Tensor::from_data({2}, {3.0, 4.0}, true));
  ps.zero_grad();
  ps.at("w").grad() = {3.0, 4.0};  // norm 5
  CHECK(ps.grad_norm() == doctest::Approx(5.0));
  CHECK_FALSE(ps.clip_grad_norm(5.0));
  CHECK(ps.clip_grad_norm(1.0));
  CHECK(ps.grad_norm() == doctest::Approx(1.0));
}

TEST_CASE("Adam: zero gradient leaves parameters unchanged") {
  ParamStore ps;
  ps.add("w", Tensor::from_data({3}, {1.0, -2.0, 0.5}, true));
  ps.zero_grad();
  Adam opt(1e-3);
  opt.step(ps);
  CHECK(ps.at("w").data() == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("Adam: first step from zero state moves by about lr against the gradient") {
  ParamStore ps;
  ps.add("w", Tensor::zeros({2}, true));
  ps.zero_grad();
  ps.at("w").grad() = {0.7, -0.2};
  Adam opt(1e-3);
  opt.step(ps);
  // bias-corrected first step: m_hat = g, v_hat = g^2, delta = -lr*g/(|g|+eps)
  CHECK(ps.at("w").data()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(ps.at("w").data()[1] == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("Adam: identical gradient streams give identical trajectories") {
  auto run = [] {
    ParamStore ps;
    ps.add("w", Tensor::from_data({4}, {0.1, 0.2, 0.3, 0.4}, true));
    Adam opt(1e-2);
    Rng rng(77);
    for (int step = 0; step < 25; ++step) {
      ps.zero_grad();
      for (auto& g : ps.at("w").grad()) g = rng.normal();
      opt.step(ps);
    }
    return ps.at("w").data();
  };
  CHECK(run() == run());
}
