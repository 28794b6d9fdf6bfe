#include <cmath>
#include <vector>

#include "deepgen/errors.hpp"
#include "deepgen/rng.hpp"
#include "deepgen/tensor.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace deepgen;
using testutil::max_grad_err;
using testutil::random_tensor;

TEST_CASE("tensor construction and accessors") {
  Tensor t(Shape{2, 3}, 1.5);
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(1) == 3);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 1.5);

  t.at(1, 2) = -4.0;
  CHECK(t[5] == -4.0);
  CHECK(t.at(1, 2) == -4.0);
  CHECK(t.shape_str() == "(2, 3)");

  const Tensor v = Tensor::vec({1.0, 2.0, 3.0});
  CHECK(v.rank() == 1);
  CHECK(v.size() == 3);
  CHECK(v[1] == 2.0);

  const Tensor m = Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 4.0});
  CHECK(m.at(1, 0) == 3.0);

  Tensor filled(Shape{4});
  filled.fill(7.0);
  CHECK(filled[3] == 7.0);
}

TEST_CASE("tensor shape errors") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), dimension_error);
  CHECK_THROWS_AS(Tensor(Shape{3}, std::vector<double>{1.0, 2.0}), dimension_error);
  CHECK_THROWS_AS(Tensor::matrix(2, 3, {1.0, 2.0}), dimension_error);
}

TEST_CASE("reshaped keeps storage in row-major order") {
  const Tensor m = Tensor::matrix(2, 3, {0, 1, 2, 3, 4, 5});
  const Tensor r = m.reshaped(Shape{3, 2});
  CHECK(r.at(0, 1) == 1.0);
  CHECK(r.at(2, 0) == 4.0);
  CHECK(r.values() == m.values());
  CHECK_THROWS_AS(m.reshaped(Shape{4, 2}), dimension_error);
}

TEST_CASE("shape_product and shape_to_string") {
  CHECK(shape_product(Shape{}) == 1);
  CHECK(shape_product(Shape{3, 4, 5}) == 60);
  CHECK(shape_to_string(Shape{}) == "()");
  CHECK(shape_to_string(Shape{7}) == "(7)");
}

TEST_CASE("check_finite flags NaN and Inf") {
  Tensor t(Shape{3}, 1.0);
  CHECK_NOTHROW(check_finite(t, "here"));
  t[1] = std::nan("");
  CHECK_THROWS_AS(check_finite(t, "here"), numeric_error);
  t[1] = 1.0;
  t[2] = HUGE_VAL;
  CHECK_THROWS_AS(check_finite(t, "here"), numeric_error);
}

TEST_CASE("sigmoid basics and clamping") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  // symmetry
  for (double x : {0.3, 1.7, 9.0, 37.0}) {
    CHECK(sigmoid(-x) == doctest::Approx(1.0 - sigmoid(x)).epsilon(1e-12));
  }
  // extreme inputs saturate without producing NaN or Inf
  CHECK(sigmoid(1e9) == 1.0);
  CHECK(sigmoid(-1e9) == doctest::Approx(0.0));
  CHECK(std::isfinite(sigmoid(-1e9)));
  CHECK(sigmoid(600.0) == sigmoid(500.0));
}

TEST_CASE("dense_forward matches a hand computation") {
  // x: 2x3, w: 3x2, b: 2
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 0, -1, 2});
  const Tensor w = Tensor::matrix(3, 2, {1, 0, 0, 1, 1, 1});
  const Tensor b = Tensor::vec({10, 20});
  const Tensor out = dense_forward(x, w, b);
  REQUIRE(out.shape() == Shape{2, 2});
  CHECK(out.at(0, 0) == 1 * 1 + 2 * 0 + 3 * 1 + 10);
  CHECK(out.at(0, 1) == 1 * 0 + 2 * 1 + 3 * 1 + 20);
  CHECK(out.at(1, 0) == 0 * 1 + (-1) * 0 + 2 * 1 + 10);
  CHECK(out.at(1, 1) == 0 * 0 + (-1) * 1 + 2 * 1 + 20);

  CHECK_THROWS_AS(dense_forward(x, Tensor::matrix(2, 2, {1, 2, 3, 4}), b), dimension_error);
  CHECK_THROWS_AS(dense_forward(x, w, Tensor::vec({1.0})), dimension_error);
}

TEST_CASE("dense_backward agrees with finite differences") {
  Rng rng(11);
  Tensor x = random_tensor(Shape{4, 5}, rng);
  Tensor w = random_tensor(Shape{5, 3}, rng);
  Tensor b = random_tensor(Shape{3}, rng);
  const Tensor proj = random_tensor(Shape{4, 3}, rng);

  const auto loss = [&]() {
    const Tensor out = dense_forward(x, w, b);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
    return s;
  };

  Tensor gw, gb, gx;
  dense_backward(x, w, proj, gw, gb, gx);
  REQUIRE(gw.shape() == w.shape());
  REQUIRE(gb.shape() == b.shape());
  REQUIRE(gx.shape() == x.shape());
  CHECK(max_grad_err(w, gw, loss) < 1e-7);
  CHECK(max_grad_err(b, gb, loss) < 1e-7);
  CHECK(max_grad_err(x, gx, loss) < 1e-7);

  CHECK_THROWS_AS(dense_backward(x, w, Tensor::matrix(4, 2, std::vector<double>(8, 1.0)), gw, gb, gx),
                  dimension_error);
}

TEST_CASE("conv2d_forward with a centered identity kernel") {
  Rng rng(3);
  const Tensor x = random_tensor(Shape{2, 4, 5, 1}, rng);
  Tensor k(Shape{3, 3, 1, 1});
  k[(1 * 3 + 1) * 1 * 1] = 1.0;  // centre tap only
  const Tensor b = Tensor::vec({0.25});
  const Tensor out = conv2d_forward(x, k, b);
  REQUIRE(out.shape() == x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == doctest::Approx(x[i] + 0.25).epsilon(1e-15));
  }
}

TEST_CASE("conv2d_forward shifts and zero-pads at the border") {
  // 1 sample, 3x3 grid, 1 channel, values 1..9
  const Tensor x(Shape{1, 3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  // kernel tap at (dy=2, dx=2) reads input(y+1, x+1)
  Tensor k(Shape{3, 3, 1, 1});
  k[(2 * 3 + 2)] = 1.0;
  const Tensor out = conv2d_forward(x, k, Tensor::vec({0.0}));
  // interior picks the down-right neighbour, borders fall off to zero padding
  CHECK(out[0] == 5.0);  // (0,0) <- (1,1)
  CHECK(out[1] == 6.0);  // (0,1) <- (1,2)
  CHECK(out[2] == 0.0);  // (0,2) <- (1,3) out of range
  CHECK(out[4] == 9.0);  // (1,1) <- (2,2)
  CHECK(out[8] == 0.0);  // (2,2) <- (3,3) out of range
}

TEST_CASE("conv2d_forward 1x1 kernel mixes channels") {
  Rng rng(5);
  const Tensor x = random_tensor(Shape{1, 2, 2, 2}, rng);
  // kernels 1x1x2x1: out = 2*c0 - 3*c1
  const Tensor k(Shape{1, 1, 2, 1}, {2.0, -3.0});
  const Tensor out = conv2d_forward(x, k, Tensor::vec({0.0}));
  REQUIRE(out.shape() == Shape{1, 2, 2, 1});
  for (std::size_t p = 0; p < 4; ++p) {
    CHECK(out[p] == doctest::Approx(2.0 * x[2 * p] - 3.0 * x[2 * p + 1]).epsilon(1e-15));
  }
}

TEST_CASE("conv2d shape validation") {
  Rng rng(2);
  const Tensor x = random_tensor(Shape{1, 3, 3, 2}, rng);
  const Tensor b = Tensor::vec({0.0});
  CHECK_THROWS_AS(conv2d_forward(x, random_tensor(Shape{2, 2, 2, 1}, rng), b), config_error);
  CHECK_THROWS_AS(conv2d_forward(x, random_tensor(Shape{3, 1, 2, 1}, rng), b), config_error);
  CHECK_THROWS_AS(conv2d_forward(x, random_tensor(Shape{3, 3, 3, 1}, rng), b), dimension_error);
  CHECK_THROWS_AS(conv2d_forward(x, random_tensor(Shape{3, 3, 2, 2}, rng), b), dimension_error);
  CHECK_THROWS_AS(conv2d_forward(x.reshaped(Shape{3, 3, 2}), random_tensor(Shape{3, 3, 2, 1}, rng), b),
                  dimension_error);
}

TEST_CASE("conv2d_backward agrees with finite differences") {
  Rng rng(17);
  Tensor x = random_tensor(Shape{2, 3, 4, 2}, rng);
  Tensor k = random_tensor(Shape{3, 3, 2, 3}, rng);
  Tensor b = random_tensor(Shape{3}, rng);
  const Tensor proj = random_tensor(Shape{2, 3, 4, 3}, rng);

  const auto loss = [&]() {
    const Tensor out = conv2d_forward(x, k, b);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
    return s;
  };

  Tensor gk, gb, gx;
  conv2d_backward(x, k, proj, gk, gb, gx);
  REQUIRE(gk.shape() == k.shape());
  REQUIRE(gb.shape() == b.shape());
  REQUIRE(gx.shape() == x.shape());
  CHECK(max_grad_err(k, gk, loss) < 1e-6);
  CHECK(max_grad_err(b, gb, loss) < 1e-6);
  CHECK(max_grad_err(x, gx, loss) < 1e-6);
}

TEST_CASE("upsample2d tiles each cell") {
  const Tensor x(Shape{1, 2, 2, 1}, {1, 2, 3, 4});
  const Tensor up = upsample2d(x, 2, 3);
  REQUIRE(up.shape() == Shape{1, 4, 6, 1});
  // row-major 4x6 grid of tiles
  const std::vector<double> want = {
      1, 1, 1, 2, 2, 2, 1, 1, 1, 2, 2, 2,
      3, 3, 3, 4, 4, 4, 3, 3, 3, 4, 4, 4,
  };
  CHECK(up.values() == want);

  CHECK_THROWS_AS(upsample2d(Tensor::matrix(2, 2, {1, 2, 3, 4}), 2, 2), dimension_error);
  CHECK_THROWS_AS(upsample2d(x, 0, 2), config_error);
}

TEST_CASE("upsample2d_backward sums each tile and is the adjoint") {
  const Tensor u(Shape{1, 2, 2, 1}, {1, 2, 3, 4});
  const Tensor g = upsample2d_backward(u, 2, 2);
  REQUIRE(g.shape() == Shape{1, 1, 1, 1});
  CHECK(g[0] == 10.0);

  // <up(x), u> == <x, up_back(u)> for random tensors
  Rng rng(23);
  const Tensor x = random_tensor(Shape{2, 3, 2, 2}, rng);
  const Tensor up = upsample2d(x, 3, 4);
  const Tensor ups = random_tensor(up.shape(), rng);
  const Tensor down = upsample2d_backward(ups, 3, 4);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < up.size(); ++i) lhs += up[i] * ups[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * down[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  CHECK_THROWS_AS(upsample2d_backward(u, 3, 2), dimension_error);
}

TEST_CASE("activation_forward values") {
  const Tensor x = Tensor::vec({-2.0, -0.5, 0.0, 0.5, 3.0});
  const Tensor r = activation_forward(x, Activation::relu);
  CHECK(r.values() == std::vector<double>{0.0, 0.0, 0.0, 0.5, 3.0});

  const Tensor l = activation_forward(x, Activation::leaky_relu, 0.2);
  CHECK(l[0] == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(l[1] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(l[3] == 0.5);

  const Tensor s = activation_forward(x, Activation::sigmoid);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(s[i] == doctest::Approx(sigmoid(x[i])).epsilon(1e-15));
  }

  CHECK_THROWS_AS(activation_forward(x, Activation::leaky_relu, 0.0), config_error);
  CHECK_THROWS_AS(activation_forward(x, Activation::leaky_relu, 1.0), config_error);
}

TEST_CASE("activation_backward agrees with finite differences") {
  Rng rng(29);
  // keep inputs away from the relu kink so central differences are valid
  Tensor x = random_tensor(Shape{3, 4}, rng);
  for (auto& v : x.values()) {
    if (std::abs(v) < 1e-3) v = 0.1;
  }
  const Tensor proj = random_tensor(Shape{3, 4}, rng);

  for (Activation kind : {Activation::relu, Activation::leaky_relu, Activation::sigmoid}) {
    const auto loss = [&]() {
      const Tensor out = activation_forward(x, kind, 0.2);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
      return s;
    };
    const Tensor g = activation_backward(x, proj, kind, 0.2);
    CHECK(max_grad_err(x, g, loss) < 1e-7);
  }

  CHECK_THROWS_AS(activation_backward(x, Tensor::vec({1.0}), Activation::relu), dimension_error);
}

TEST_CASE("dropout is the identity in infer mode and at rate zero") {
  Rng rng(31);
  const Tensor x = random_tensor(Shape{4, 4}, rng);

  const auto [infer_out, infer_mask] = dropout_forward(x, 0.7, Mode::infer, nullptr);
  CHECK(infer_out.values() == x.values());
  for (double m : infer_mask.values()) CHECK(m == 1.0);

  const auto [zero_out, zero_mask] = dropout_forward(x, 0.0, Mode::train, &rng);
  CHECK(zero_out.values() == x.values());
  for (double m : zero_mask.values()) CHECK(m == 1.0);
}

TEST_CASE("dropout train mode scales survivors and zeroes the rest") {
  Rng rng(37);
  const Tensor x = random_tensor(Shape{50, 40}, rng, 0.5, 1.5);
  const double rate = 0.25;
  Rng drop(101);
  const auto [out, mask] = dropout_forward(x, rate, Mode::train, &drop);

  const double scale = 1.0 / (1.0 - rate);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) {
      CHECK(out[i] == 0.0);
    } else {
      CHECK(mask[i] == doctest::Approx(scale).epsilon(1e-15));
      CHECK(out[i] == doctest::Approx(x[i] * scale).epsilon(1e-15));
      ++kept;
    }
  }
  // survivor fraction should be near 1 - rate (2000 draws)
  const double frac = static_cast<double>(kept) / static_cast<double>(x.size());
  CHECK(frac > 0.70);
  CHECK(frac < 0.80);

  // same seed, same mask; the mask stream is part of the contract
  Rng again(101);
  const auto [out2, mask2] = dropout_forward(x, rate, Mode::train, &again);
  CHECK(out2.values() == out.values());
  CHECK(mask2.values() == mask.values());

  CHECK_THROWS_AS(dropout_forward(x, -0.1, Mode::train, &drop), config_error);
  CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::train, &drop), config_error);
  CHECK_THROWS_AS(dropout_forward(x, 0.5, Mode::train, nullptr), config_error);
}
