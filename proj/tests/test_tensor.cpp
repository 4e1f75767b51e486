// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "binaural/checkpoint.hpp"
#include "binaural/grad_check.hpp"
#include "binaural/ops.hpp"
#include "binaural/optim.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace binaural;
using namespace binaural::ad;
using TD = Tensor<double>;

namespace {

TD randn(const Shape& shape, std::uint64_t seed, double scale = 1.0, bool grad = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = n(rng);
  return TD::from(shape, std::move(v), grad);
}

TD uniform(const Shape& shape, std::uint64_t seed, double lo, double hi, bool grad = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = u(rng);
  return TD::from(shape, std::move(v), grad);
}

// Contracts an arbitrary output with a fixed random probe so every output
// element contributes to the checked scalar.
TD probe(const TD& y, std::uint64_t seed) {
  return mean(mul(y, randn(y.shape(), seed, 1.0, false)));
}

double inner(const TD& a, const TD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("tensor factories and invariants") {
  auto t = TD::zeros({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(t.rank() == 3);
  CHECK(t.dim(-1) == 4);
  CHECK_THROWS_AS(TD::from({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK(TD::scalar(3.5).item() == 3.5);
  CHECK_THROWS(TD::zeros({2}).item());
  CHECK(shape_str({2, 3}) == "[2,3]");
}

TEST_CASE("sigmoid_act at zero") {
  auto x = TD::scalar(0.0, true);
  auto y = sigmoid_act(x);
  CHECK(y.item() == 0.5);
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("cosine_rows of a set with itself is one on the diagonal") {
  auto u = randn({2, 5, 3}, 21);
  auto c = cosine_rows(u, u);
  REQUIRE(c.shape() == Shape{2, 3, 3});
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 3; ++i) CHECK(c.data()[(s * 3 + i) * 3 + i] == doctest::Approx(1.0).epsilon(1e-12));
  // Matches a direct computation.
  auto a = randn({1, 4, 2}, 22), v = randn({1, 4, 3}, 23);
  auto cc = cosine_rows(a, v);
  for (int k = 0; k < 2; ++k)
    for (int q = 0; q < 3; ++q) {
      double dot = 0, na = 0, nv = 0;
      for (int i = 0; i < 4; ++i) {
        const double x = a.data()[i * 2 + k], y = v.data()[i * 3 + q];
        dot += x * y;
        na += x * x;
        nv += y * y;
      }
      CHECK(cc.data()[k * 3 + q] == doctest::Approx(dot / std::sqrt(na * nv)).epsilon(1e-12));
    }
  CHECK_THROWS_AS(cosine_rows(randn({1, 4, 2}, 1), randn({1, 3, 2}, 2)), std::invalid_argument);
}

TEST_CASE("conv2d with a one-hot 1x1 kernel selects a channel") {
  auto x = randn({2, 3, 4, 5}, 31, 1.0, false);
  std::vector<double> w(3, 0.0);
  w[1] = 1.0;
  auto y = conv2d(x, TD::from({1, 3, 1, 1}, w), TD(), 1, 0);
  REQUIRE(y.shape() == Shape{2, 1, 4, 5});
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 20; ++i) CHECK(y.data()[s * 20 + i] == x.data()[(s * 3 + 1) * 20 + i]);
}

TEST_CASE("shape mismatches name the op and the shapes") {
  auto a = TD::zeros({2, 3});
  auto b = TD::zeros({3, 2});
  try {
    add(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[3,2]") != std::string::npos);
  }
  CHECK_THROWS_AS(conv2d(TD::zeros({1, 2, 4, 4}), TD::zeros({3, 4, 3, 3}), TD(), 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(avg_pool2d(TD::zeros({1, 1, 5, 4}), 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(bce_loss(TD::zeros({2}), TD::zeros({3})), std::invalid_argument);
}

TEST_CASE("backward: mean and l2 closed forms") {
  auto x = randn({4, 4}, 41);
  mean(x).backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0 / 16).epsilon(1e-15));

  auto y = randn({4, 4}, 42);
  auto loss = l2_loss(y, TD::zeros({4, 4}));
  double norm = 0;
  for (double v : y.data()) norm += v * v;
  norm = std::sqrt(norm);
  CHECK(loss.item() == doctest::Approx(norm).epsilon(1e-14));
  loss.backward();
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y.grad()[i] == doctest::Approx(y.data()[i] / norm));

  auto z = TD::zeros({3}, true);
  l2_loss(z, TD::zeros({3})).backward();
  for (double g : z.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward accumulates and rejects non-scalar roots") {
  auto x = randn({3}, 43);
  auto loss = mean(mul(x, x));
  loss.backward();
  std::vector<double> first(x.grad().begin(), x.grad().end());
  loss.backward();
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(2 * first[i]));
  x.zero_grad();
  for (double g : x.grad()) CHECK(g == 0.0);
  CHECK_THROWS_AS(mul(x, x).backward(), std::invalid_argument);
}

TEST_CASE("a shared subexpression receives gradient from every use") {
  auto x = TD::scalar(1.5, true);
  auto s = sigmoid_act(x);
  auto loss = mean(add(mul(s, s), s));
  loss.backward();
  const double sv = oracle::sigmoid(1.5);
  CHECK(x.grad()[0] == doctest::Approx((2 * sv + 1) * sv * (1 - sv)).epsilon(1e-12));
}

TEST_CASE("no-grad guard records nothing") {
  auto x = randn({2}, 44);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    auto y = mul(x, x);
    CHECK(y.node()->is_leaf());
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
  CHECK_FALSE(mul(x, x).node()->is_leaf());
  CHECK(x.detach().node()->is_leaf());
}

TEST_CASE("ops reject non-finite results") {
  auto big = TD::full({2}, 1e200);
  CHECK_THROWS(mul(big, big));
}

TEST_CASE("grad check: elementwise primitives") {
  auto a = randn({4, 4}, 51), b = randn({4, 4}, 52);
  CHECK(grad_check([](auto& in) { return probe(add(in[0], in[1]), 1); }, {a, b}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(sub(in[0], in[1]), 2); }, {a, b}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(mul(in[0], in[1]), 3); }, {a, b}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(add_scalar(in[0], 0.7), 4); }, {a}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(mul_scalar(in[0], -1.3), 5); }, {a}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(sigmoid_act(in[0]), 6); }, {a}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(tanh_act(in[0]), 7); }, {a}) < kTol);
  // Keep leaky_relu inputs away from the kink.
  auto off = uniform({4, 4}, 53, 0.1, 1.0);
  for (std::size_t i = 0; i < off.numel(); i += 2) off.data()[i] = -off.data()[i];
  CHECK(grad_check([](auto& in) { return probe(leaky_relu(in[0]), 8); }, {off}) < kTol);
  CHECK(grad_check([](auto& in) { return mean(in[0]); }, {a}) < kTol);
  CHECK(grad_check([](auto& in) { return l2_loss(in[0], in[1]); }, {a, b}) < kTol);
}

TEST_CASE("grad check: convolutions") {
  auto x = randn({2, 3, 4, 4}, 61);
  auto w = randn({5, 3, 4, 4}, 62, 0.3);
  auto bias = randn({5}, 63);
  CHECK(grad_check([](auto& in) { return probe(conv2d(in[0], in[1], in[2], 2, 1), 9); },
                   {x, w, bias}) < kTol);
  auto w3 = randn({2, 3, 3, 3}, 64, 0.3);
  CHECK(grad_check([](auto& in) { return probe(conv2d(in[0], in[1], TD(), 1, 1), 10); }, {x, w3}) <
        kTol);
  auto wt = randn({3, 2, 4, 4}, 65, 0.3);
  auto bt = randn({2}, 66);
  CHECK(grad_check([](auto& in) { return probe(conv_transpose2d(in[0], in[1], in[2], 2, 1), 11); },
                   {x, wt, bt}) < kTol);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  struct Case {
    Shape x, w;
    int stride, pad;
  };
  for (const Case& c : {Case{{2, 3, 8, 6}, {4, 3, 4, 4}, 2, 1}, Case{{1, 2, 5, 5}, {3, 2, 3, 3}, 1, 1},
                        Case{{1, 2, 4, 4}, {3, 2, 1, 1}, 1, 0}}) {
    auto x = randn(c.x, 71, 1.0, false);
    auto w = randn(c.w, 72, 1.0, false);
    auto cx = conv2d(x, w, TD(), c.stride, c.pad);
    auto y = randn(cx.shape(), 73, 1.0, false);
    auto ty = conv_transpose2d(y, w, TD(), c.stride, c.pad);
    REQUIRE(ty.shape() == x.shape());
    const double lhs = inner(cx, y), rhs = inner(x, ty);
    CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("conv_transpose2d doubles the grid") {
  auto y = conv_transpose2d(TD::zeros({1, 2, 16, 4}), TD::zeros({2, 3, 4, 4}), TD(), 2, 1);
  CHECK(y.shape() == Shape{1, 3, 32, 8});
}

TEST_CASE("grad check: normalization and reshaping") {
  auto x = randn({2, 3, 4, 4}, 81);
  auto gamma = uniform({3}, 82, 0.5, 1.5), beta = randn({3}, 83);
  CHECK(grad_check([](auto& in) { return probe(channel_norm(in[0], in[1], in[2]), 12); },
                   {x, gamma, beta}) < kTol);
  auto y = randn({2, 2, 4, 4}, 84);
  CHECK(grad_check([](auto& in) { return probe(concat_channels<double>({in[0], in[1]}), 13); },
                   {x, y}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(slice_channels(in[0], 1, 3), 14); }, {x}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(slice_batch(in[0], 1), 15); }, {x}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(reshape(in[0], {2, 3, 16}), 16); }, {x}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(avg_pool2d(in[0], 2, 4), 17); }, {x}) < kTol);
  auto v = randn({2, 3, 1, 1}, 85);
  CHECK(grad_check([](auto& in) { return probe(broadcast_spatial(in[0], 4, 4), 18); }, {v}) < kTol);
}

TEST_CASE("channel_norm statistics are per sample and channel") {
  auto x = randn({2, 3, 4, 4}, 86, 3.0, false);
  auto y = channel_norm(x, TD::full({3}, 1.0), TD::zeros({3}));
  for (int p = 0; p < 6; ++p) {
    double m = 0, v = 0;
    for (int i = 0; i < 16; ++i) m += y.data()[p * 16 + i];
    m /= 16;
    for (int i = 0; i < 16; ++i) v += std::pow(y.data()[p * 16 + i] - m, 2);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 16 == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("grad check: reduce_max and cosine_rows") {
  auto x = randn({2, 4, 4}, 91);
  CHECK(grad_check([](auto& in) { return probe(reduce_max(in[0], {1, 2}), 19); }, {x}) < kTol);
  CHECK(grad_check([](auto& in) { return probe(reduce_max(in[0], {1}), 20); }, {x}) < kTol);
  auto a = randn({2, 4, 3}, 92), v = randn({2, 4, 5}, 93);
  CHECK(grad_check([](auto& in) { return probe(cosine_rows(in[0], in[1]), 21); }, {a, v}) < kTol);
}

TEST_CASE("reduce_max routes gradient to one argmax") {
  auto x = TD::from({2, 3}, {1.0, 5.0, 2.0, 7.0, 7.0, -1.0}, true);
  auto m = reduce_max(x, {1});
  REQUIRE(m.shape() == Shape{2});
  CHECK(m.data()[0] == 5.0);
  CHECK(m.data()[1] == 7.0);
  mean(m).backward();
  const std::vector<double> expected{0.0, 0.5, 0.0, 0.5, 0.0, 0.0};
  for (std::size_t i = 0; i < 6; ++i) CHECK(x.grad()[i] == expected[i]);

  auto all = TD::from({2, 2}, {0.0, 3.0, 1.0, 2.0}, true);
  auto top = reduce_max(all, {0, 1});
  CHECK(top.rank() == 0);
  top.backward();
  CHECK(std::vector<double>(all.grad().begin(), all.grad().end()) ==
        std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("bce_loss properties") {
  auto entropy = [](double q) { return -(q * std::log(q) + (1 - q) * std::log(1 - q)); };
  for (double q = 0.05; q < 1.0; q += 0.05) {
    const double at_q = bce_loss(TD::scalar(q), TD::scalar(q)).item();
    CHECK(at_q == doctest::Approx(entropy(q)).epsilon(1e-12));
    for (double p = 0.01; p < 1.0; p += 0.01) {
      const double l = bce_loss(TD::scalar(p), TD::scalar(q)).item();
      CHECK(l >= 0.0);
      CHECK(l >= at_q - 1e-12);
    }
  }
  // Gradient vanishes at p = q.
  for (double q : {0.5, 0.2, 0.9}) {
    auto p = TD::scalar(q, true);
    bce_loss(p, TD::scalar(q)).backward();
    CHECK(std::abs(p.grad()[0]) < 1e-12);
  }
  // Analytic derivative away from p = q.
  auto p = TD::from({3}, {0.3, 0.6, 0.95}, true);
  auto q = TD::from({3}, {0.1, 0.5, 1.0});
  bce_loss(p, q).backward();
  for (int i = 0; i < 3; ++i) {
    const double pv = p.data()[i], qv = q.data()[i];
    CHECK(p.grad()[i] == doctest::Approx((-(qv / pv) + (1 - qv) / (1 - pv)) / 3).epsilon(1e-12));
  }
  // Clamp keeps the loss finite at the boundaries.
  CHECK(std::isfinite(bce_loss(TD::scalar(0.0), TD::scalar(1.0)).item()));
  CHECK(bce_loss(TD::scalar(0.0), TD::scalar(1.0)).item() ==
        doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  auto pp = uniform({4, 4}, 94, 0.05, 0.95), qq = uniform({4, 4}, 95, 0.0, 1.0, false);
  CHECK(grad_check([qq](auto& in) { return bce_loss(in[0], qq); }, {pp}) < kTol);
}

TEST_CASE("random three-layer graph matches finite differences") {
  auto x = randn({2, 2, 8, 8}, 101);
  auto w1 = randn({4, 2, 4, 4}, 102, 0.3);
  auto g1 = uniform({4}, 103, 0.5, 1.5), b1 = randn({4}, 104, 0.1);
  auto w2 = randn({4, 3, 4, 4}, 105, 0.3);
  auto w3 = randn({1, 5, 1, 1}, 106, 0.5);
  auto fn = [](auto& in) {
    auto h = leaky_relu(channel_norm(conv2d(in[0], in[1], TD(), 2, 1), in[2], in[3]));
    auto u = tanh_act(conv_transpose2d(h, in[4], TD(), 2, 1));
    auto z = conv2d(concat_channels<double>({u, in[0]}), in[5], TD(), 1, 0);
    return mean(sigmoid_act(z));
  };
  CHECK(grad_check(fn, {x, w1, g1, b1, w2, w3}) < kTol);
}

TEST_CASE("forward values are deterministic") {
  auto run = [] {
    auto x = randn({2, 3, 8, 8}, 111, 1.0, false);
    auto w = randn({4, 3, 4, 4}, 112, 1.0, false);
    auto y = conv2d(x, w, TD(), 2, 1);
    return std::vector<double>(y.data().begin(), y.data().end());
  };
  CHECK(run() == run());
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = randn({5}, 121);
  const std::vector<double> before(p.data().begin(), p.data().end());
  Adam<double> opt({p}, {});
  for (int i = 0; i < 10; ++i) {
    opt.zero_grad();
    opt.step();
  }
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) == before);
  CHECK(opt.steps() == 10);
}

TEST_CASE("adam: constant gradient steps approach lr times sign") {
  auto p = TD::from({2}, {0.0, 0.0}, true);
  AdamOptions o;
  o.lr = 1e-3;
  Adam<double> opt({p}, o);
  double prev0 = 0, prev1 = 0;
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    p.mutable_grad()[0] = 0.37;
    p.mutable_grad()[1] = -4.0;
    prev0 = p.data()[0];
    prev1 = p.data()[1];
    opt.step();
  }
  CHECK(p.data()[0] - prev0 == doctest::Approx(-o.lr).epsilon(1e-4));
  CHECK(p.data()[1] - prev1 == doctest::Approx(o.lr).epsilon(1e-4));
}

TEST_CASE("adam: quadratic bowl converges") {
  auto x = TD::full({3}, 1.0, true);
  AdamOptions o;
  o.lr = 0.1;
  Adam<double> opt({x}, o);
  double norm = 1;
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    mean(mul_scalar(mul(x, x), 1.5)).backward();  // 0.5 * ||x||^2
    opt.step();
    norm = 0;
    for (double v : x.data()) norm += v * v;
    norm = std::sqrt(norm);
  }
  CHECK(norm < 1e-2);
}

TEST_CASE("adam: non-finite gradient reports divergence without updating") {
  auto x = TD::full({2}, 1.0, true);
  Adam<double> opt({x}, {});
  opt.zero_grad();
  x.mutable_grad()[1] = std::nan("");
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("diverged"), std::runtime_error);
  CHECK(x.data()[0] == 1.0);
  CHECK(x.data()[1] == 1.0);
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "binaural_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "a.bnck").string();
  Checkpoint c;
  c.header = "channels=8,16\nd=32\n";
  c.tensors.push_back({"enc.0.w", {2, 1, 2, 2}, {1, -2, 3.5f, 4, 5, 6, 7, 8}});
  c.tensors.push_back({"scalar", {}, {0.25f}});
  save_checkpoint(path, c);
  const auto r = load_checkpoint(path);
  CHECK(r.header == c.header);
  REQUIRE(r.tensors.size() == 2);
  CHECK(r.tensors[0].name == "enc.0.w");
  CHECK(r.tensors[0].shape == c.tensors[0].shape);
  CHECK(r.tensors[0].values == c.tensors[0].values);
  CHECK(r.find("scalar")->values[0] == 0.25f);
  CHECK(r.find("missing") == nullptr);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  CHECK(bytes.substr(0, 4) == "BNCK");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);

  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary);
    out << b;
  };
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write(bytes + "z");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint((dir / "nope.bnck").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}
