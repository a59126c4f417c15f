// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "adcrnn/layers.hpp"
#include "support/gradcheck.hpp"

using namespace adcrnn;
using adcrnn::ad::Tape;
using adcrnn::ad::Var;
using gradcheck::random_tensor;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("attention: single position returns its input") {
  Tape t;
  Var x = t.constant(Tensor({1, 4}, {0.3, -2.0, 5.0, 1.0}));
  Var y = ad::sdp_self_attention(x);
  CHECK(y.value() == x.value());
}

TEST_CASE("attention: identical rows are a fixed point") {
  Tape t;
  Tensor X({3, 2}, {1.5, -0.5, 1.5, -0.5, 1.5, -0.5});
  Var y = ad::sdp_self_attention(t.constant(X));
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(y.value()[i] == doctest::Approx(X[i]).epsilon(1e-14));
}

TEST_CASE("attention: two scalar positions") {
  Tape t;
  Var y = ad::sdp_self_attention(t.constant(Tensor({2, 1}, {0.0, 1.0})));
  CHECK(y.value()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(y.value()[1] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
}

TEST_CASE("attention weights are row-stochastic") {
  Rng rng(8);
  Tape t;
  Var w = ad::self_attention_weights(t.constant(random_tensor({16, 1}, rng, 3.0)));
  for (std::size_t i = 0; i < 16; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(w.value().at(i, j) >= 0.0);
      s += w.value().at(i, j);
    }
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("attention gradient") {
  Rng rng(9);
  for (Shape s : {Shape{12, 1}, Shape{5, 3}}) {
    auto r = gradcheck::check_inputs(
        [](Tape&, const std::vector<Var>& v) { return gradcheck::project(ad::sdp_self_attention(v[0]), 21); },
        {random_tensor(s, rng)}, 100, 21);
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("lstm: zero weights give zero output") {
  Rng rng(1);
  Tape t;
  const std::size_t H = 3;
  ad::LstmWeights w{t.constant(Tensor({4, 4 * H})), t.constant(Tensor({H, 4 * H})), t.constant(Tensor({4 * H}))};
  Var y = ad::lstm_layer(t.constant(random_tensor({6, 4}, rng)), w, &w);
  REQUIRE(y.shape() == Shape{6, 2 * H});
  for (double v : y.value().data()) CHECK(v == 0.0);
}

TEST_CASE("lstm: one step closed form") {
  // With T = 1 the recurrent weights play no role:
  // h = sigmoid(a_o) * tanh(sigmoid(a_i) * tanh(a_g)), a = x·W_ih + b.
  Rng rng(2);
  const std::size_t H = 2, D = 3;
  const Tensor x = random_tensor({1, D}, rng);
  const Tensor wih = random_tensor({D, 4 * H}, rng);
  const Tensor whh = random_tensor({H, 4 * H}, rng);
  const Tensor b = random_tensor({4 * H}, rng);
  Tape t;
  ad::LstmWeights w{t.constant(wih), t.constant(whh), t.constant(b)};
  for (bool reverse : {false, true}) {
    Var y = ad::lstm_direction(t.constant(x), w, reverse);
    for (std::size_t j = 0; j < H; ++j) {
      auto a = [&](std::size_t gate) {
        double s = b[gate * H + j];
        for (std::size_t k = 0; k < D; ++k) s += x[k] * wih.at(k, gate * H + j);
        return s;
      };
      const double h = sigm(a(3)) * std::tanh(sigm(a(0)) * std::tanh(a(2)));
      CHECK(y.value()[j] == doctest::Approx(h).epsilon(1e-14));
    }
  }
}

TEST_CASE("lstm: reverse direction reads the sequence backwards") {
  Rng rng(3);
  const Tensor x = random_tensor({5, 2}, rng);
  Tensor xr({5, 2});
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t k = 0; k < 2; ++k) xr.at(s, k) = x.at(4 - s, k);
  Tape t;
  ad::LstmWeights w{t.constant(random_tensor({2, 12}, rng)), t.constant(random_tensor({3, 12}, rng)),
                    t.constant(random_tensor({12}, rng))};
  Var back = ad::lstm_direction(t.constant(x), w, true);
  Var fwd = ad::lstm_direction(t.constant(xr), w, false);
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.value().at(s, j) == doctest::Approx(fwd.value().at(4 - s, j)));
}

TEST_CASE("lstm gradient, bidirectional, three layers") {
  Rng rng(4);
  const std::size_t D = 3, H = 2;
  std::vector<Tensor> in{random_tensor({6, D}, rng)};
  for (int layer = 0; layer < 3; ++layer) {
    const std::size_t d_in = layer == 0 ? D : 2 * H;
    for (int dir = 0; dir < 2; ++dir) {
      in.push_back(random_tensor({d_in, 4 * H}, rng, 0.7));
      in.push_back(random_tensor({H, 4 * H}, rng, 0.7));
      in.push_back(random_tensor({4 * H}, rng, 0.7));
    }
  }
  auto r = gradcheck::check_inputs(
      [](Tape&, const std::vector<Var>& v) {
        Var h = v[0];
        for (std::size_t layer = 0; layer < 3; ++layer) {
          const std::size_t o = 1 + layer * 6;
          ad::LstmWeights f{v[o], v[o + 1], v[o + 2]};
          ad::LstmWeights b{v[o + 3], v[o + 4], v[o + 5]};
          h = ad::lstm_layer(h, f, &b);
        }
        return gradcheck::project(ad::max(h, 0), 31);
      },
      in, 100, 31);
  INFO(r.worst);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("se bottleneck width") {
  CHECK(ad::se_bottleneck(32, 16) == 2);
  CHECK(ad::se_bottleneck(1024, 16) == 64);
  CHECK(ad::se_bottleneck(8, 16) == 1);
  CHECK(ad::se_bottleneck(4, 16) == 1);
}

TEST_CASE("se: zero excitation weights halve the input") {
  Rng rng(5);
  const std::size_t C = 8, B = 1;
  Tape t;
  const Tensor u = random_tensor({C, 4}, rng);
  ad::SeWeights w{t.constant(random_tensor({C, B}, rng)), t.constant(random_tensor({B}, rng)),
                  t.constant(Tensor({B, C})), t.constant(Tensor({C}))};
  Var y = ad::se_block_gate(t.constant(u), w);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(y.value()[i] == doctest::Approx(0.5 * u[i]).epsilon(1e-14));
}

TEST_CASE("se gates lie in (0, 1)") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    ad::SeWeights w{t.constant(random_tensor({16, 1}, rng)), t.constant(random_tensor({1}, rng)),
                    t.constant(random_tensor({1, 16}, rng)), t.constant(random_tensor({16}, rng))};
    Var g = ad::se_gates(t.constant(random_tensor({16, 5}, rng)), w);
    REQUIRE(g.shape() == Shape{16});
    for (double v : g.value().data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("se gradient at C=8, L=4") {
  Rng rng(7);
  auto r = gradcheck::check_inputs(
      [](Tape&, const std::vector<Var>& v) {
        ad::SeWeights w{v[1], v[2], v[3], v[4]};
        return gradcheck::project(ad::se_block_gate(v[0], w), 41);
      },
      {random_tensor({8, 4}, rng), random_tensor({8, 2}, rng), random_tensor({2}, rng), random_tensor({2, 8}, rng),
       random_tensor({8}, rng)},
      100, 41);
  INFO(r.worst);
  CHECK(r.max_rel_err < 1e-4);
}
