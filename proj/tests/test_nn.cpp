#include <doctest.h>

#include <cmath>

#include "crossrec/gradcheck.hpp"
#include "crossrec/nn.hpp"

using namespace crossrec;

TEST_CASE("elu values") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(-std::log(2.0)) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(elu(-30.0) > -1.0);
}

TEST_CASE("dropout identity cases") {
  Rng rng(3);
  Vector x(4);
  x << 1.0, -2.0, 0.5, 3.0;
  auto [y0, m0] = dropout_apply(x, 0.0, true, rng);
  CHECK(y0 == x);
  auto [y1, m1] = dropout_apply(x, 0.5, false, rng);
  CHECK(y1 == x);
  CHECK(m1 == Vector::Ones(4));
  CHECK_THROWS(dropout_apply(x, 1.0, true, rng));
}

TEST_CASE("dropout deterministic mask and unbiased expectation") {
  Rng a(42), b(42);
  Vector x = Vector::Ones(16);
  auto [ya, ma] = dropout_apply(x, 0.5, true, a);
  auto [yb, mb] = dropout_apply(x, 0.5, true, b);
  CHECK(ya == yb);

  // E[output] = x: empirical mean over 1e5 masks within 2%.
  Rng rng(7);
  const int trials = 100000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto [y, m] = dropout_apply(Vector::Ones(1), 0.5, true, rng);
    sum += y[0];
  }
  CHECK(sum / trials == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("grl backward negates") {
  Vector g(2);
  g << 0.5, -1.0;
  Vector n = grl_backward(g);
  CHECK(n[0] == -0.5);
  CHECK(n[1] == 1.0);
  Vector zero = Vector::Zero(3);
  CHECK(grl_backward(zero) == zero);
}

TEST_CASE("he init variance and determinism") {
  Rng rng(11);
  Matrix w = he_init(200, 500, 200, rng);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  CHECK(var == doctest::Approx(0.01).epsilon(0.05));

  Rng a(5), b(5);
  CHECK(he_init(10, 8, 10, a) == he_init(10, 8, 10, b));

  Rng c(5);
  Mlp net(4, {{3, Activation::kElu, 0.0}}, c);
  CHECK(net.layers()[0].bias.value == Matrix::Zero(3, 1));
}

TEST_CASE("adam fixed point and first step") {
  Param p(1, 1);
  p.value(0, 0) = 2.0;
  adam_step(p, 1);
  CHECK(p.value(0, 0) == 2.0);  // zero gradient is a fixed point

  Param q(1, 1);
  q.value(0, 0) = 1.0;
  q.grad(0, 0) = 1.0;
  adam_step(q, 1);
  CHECK(std::fabs((q.value(0, 0) - 1.0) + 1e-3) < 1e-8);

  Param r(1, 1);
  r.value(0, 0) = 5.0;
  double prev = 5.0;
  for (long t = 1; t <= 3; ++t) {
    r.grad(0, 0) = 0.7;
    adam_step(r, t);
    CHECK(r.value(0, 0) < prev);
    prev = r.value(0, 0);
  }
}

TEST_CASE("softmax cross-entropy") {
  Vector uniform = Vector::Zero(4);
  auto [l, g] = softmax_ce(uniform, 2);
  CHECK(l == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Vector sat(3);
  sat << 100.0, 0.0, 0.0;
  CHECK(softmax_ce(sat, 0).first < 1e-40);

  CHECK_THROWS(softmax_ce(uniform, 4));
  CHECK_THROWS(softmax_ce(uniform, -1));

  // probabilities positive, sum to one, argmax preserved
  Rng rng(9);
  Vector logits(10);
  for (int i = 0; i < 10; ++i) logits[i] = rng.normal(0.0, 3.0);
  Matrix p = softmax_rows(logits.transpose());
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  int amax_l, amax_p;
  logits.maxCoeff(&amax_l);
  p.row(0).maxCoeff(&amax_p);
  CHECK(amax_l == amax_p);
}

TEST_CASE("softmax gradient matches central differences") {
  Rng rng(13);
  Vector logits(10);
  for (int i = 0; i < 10; ++i) logits[i] = rng.normal(0.0, 2.0);
  const int label = 3;
  auto [loss, grad] = softmax_ce(logits, label);
  const double eps = 1e-6;
  for (int i = 0; i < 10; ++i) {
    Vector up = logits, dn = logits;
    up[i] += eps;
    dn[i] -= eps;
    const double numeric = (softmax_ce(up, label).first - softmax_ce(dn, label).first) / (2 * eps);
    CHECK(std::fabs(numeric - grad[i]) / std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-3}) < 1e-6);
  }
}

TEST_CASE("mlp gradient check with frozen dropout") {
  Rng rng(21);
  Mlp net(5, {{7, Activation::kElu, 0.4}, {3, Activation::kLinear, 0.4}}, rng);
  Matrix x = he_init(5, 4, 5, rng);
  Matrix t = he_init(3, 4, 3, rng);
  Rng fwd(55);
  auto run = [&](bool backward) {
    fwd.reset();
    MlpCache cache;
    Matrix y = net.forward(x, true, fwd, &cache);
    if (backward) net.backward(cache, 2.0 * (y - t));
    return (y - t).squaredNorm();
  };
  for (Param* p : net.params()) p->zero_grad();
  run(true);
  CHECK(grad_check(net.params(), [&]() { return run(false); }) < 1e-6);
}

TEST_CASE("gradcheck verification suite passes") {
  CHECK(run_gradcheck_suite(false));
}
