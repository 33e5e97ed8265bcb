#include <doctest.h>

#include <cmath>
#include <random>

#include "cmr/nn/ops.hpp"
#include "oracles/oracles.hpp"

using namespace cmr::nn;

namespace {

Tensor random_param(Shape shape, Rng& rng, Real scale = 1) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  std::normal_distribution<double> n(0, scale);
  for (auto& v : t.values()) v = Real(n(rng));
  return t;
}

// Analytic gradients of f() for every tensor in `params` against central
// differences.
double worst_gradient_error(const std::vector<Tensor>& params, const std::function<Tensor()>& f) {
  for (auto p : params) p.zero_grad();
  backward(f());
  double worst = 0;
  for (auto p : params) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto numeric = oracle::numeric_gradient(p, [&] {
      NoGradGuard g;
      return double(f().item());
    });
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("tensor shape and value counts agree") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.numel() == 6);
  CHECK(shape_numel(t.shape()) == t.numel());
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), std::invalid_argument);
  Tensor g = Tensor::zeros({4, 5}, true);
  CHECK(g.grad().size() == 20);
}

TEST_CASE("softmax") {
  SUBCASE("uniform") {
    for (Real p : softmax(std::vector<Real>{0, 0, 0, 0})) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("large equal inputs stay finite") {
    auto p = softmax(std::vector<Real>{1000, 1000});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("matches the direct formula") {
    auto p = softmax(std::vector<Real>{1, 2, 3});
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(std::abs(p[0] - std::exp(1.0) / z) < 1e-12);
    CHECK(std::abs(p[1] - std::exp(2.0) / z) < 1e-12);
    CHECK(std::abs(p[2] - std::exp(3.0) / z) < 1e-12);
  }
  SUBCASE("rows sum to one") {
    Rng rng(3);
    std::normal_distribution<double> n(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Real> v(1 + trial % 9);
      for (auto& x : v) x = Real(n(rng));
      double s = 0;
      for (Real p : softmax(v)) {
        CHECK(p >= 0);
        s += p;
      }
      CHECK(std::abs(s - 1) < 1e-9);
    }
  }
  CHECK_THROWS_AS(softmax(std::vector<Real>{1, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(softmax(std::vector<Real>{INFINITY}), std::invalid_argument);
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(std::vector<Real>{0, 0}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(cross_entropy(std::vector<Real>{60, 0}, 0) < 1e-20);
  CHECK(cross_entropy(std::vector<Real>{0, 0}, 0) > cross_entropy(std::vector<Real>{5, 0}, 0));
  Rng rng(11);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Real> v(4);
    std::vector<double> d(4);
    for (int i = 0; i < 4; ++i) d[i] = v[i] = Real(n(rng));
    const std::size_t t = std::size_t(trial % 4);
    CHECK(std::abs(cross_entropy(v, t) - oracle::cross_entropy(d, t)) < 1e-12);
    CHECK(cross_entropy(v, t) >= 0);
  }
  CHECK_THROWS_AS(cross_entropy(std::vector<Real>{0, 0}, 2), std::out_of_range);
}

TEST_CASE("cross_entropy_rows sums per-row losses") {
  Tensor logits = Tensor::from({2, 3}, {0.5, -1, 2, 0, 0, 0});
  const std::vector<std::size_t> t = {2, 1};
  const double want = oracle::cross_entropy({0.5, -1, 2}, 2) + std::log(3.0);
  CHECK(std::abs(cross_entropy_rows(logits, t).item() - want) < 1e-12);
  const std::vector<std::size_t> bad = {0, 3};
  CHECK_THROWS_AS(cross_entropy_rows(logits, bad), std::out_of_range);
}

TEST_CASE("backward basics") {
  SUBCASE("gradient of a sum is all ones") {
    Tensor p = Tensor::from({5}, {1, -2, 3, 0.5, 7}, true);
    backward(sum(p));
    for (Real g : p.grad()) CHECK(g == 1);
  }
  SUBCASE("gradient of half squared norm is the parameter") {
    Tensor p = Tensor::from({4}, {1, -2, 3, 0.25}, true);
    backward(scale(sum(mul(p, p)), Real(0.5)));
    for (std::size_t i = 0; i < 4; ++i) CHECK(p.grad()[i] == doctest::Approx(p.values()[i]));
  }
  SUBCASE("unreachable parameters keep a zero gradient") {
    Tensor used = Tensor::from({2}, {1, 2}, true);
    Tensor unused = Tensor::from({2}, {3, 4}, true);
    backward(sum(used));
    for (Real g : unused.grad()) CHECK(g == 0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Tensor p = Tensor::from({2}, {1, 2}, true);
    CHECK_THROWS_AS(backward(p), std::invalid_argument);
  }
  SUBCASE("no recording under NoGradGuard") {
    Tensor p = Tensor::from({2}, {1, 2}, true);
    NoGradGuard g;
    CHECK_FALSE(grad_enabled());
    Tensor y = sum(p);
    CHECK(y.node().inputs.empty());
  }
}

TEST_CASE("op gradients match central differences") {
  Rng rng(5);
  Tensor a = random_param({3, 4}, rng), b = random_param({4, 2}, rng), c = random_param({3, 4}, rng);
  Tensor bias = random_param({2}, rng), gamma = random_param({4}, rng), beta = random_param({4}, rng);
  Tensor table = random_param({6, 4}, rng);
  const std::vector<std::int64_t> ids = {1, 5, 1, 0};
  const std::vector<std::size_t> rows = {2, 0, 2};
  Tensor w = random_param({4, 3}, rng);

  CHECK(worst_gradient_error({a, b}, [&] { return sum(mul(matmul(a, b), matmul(a, b))); }) < 1e-6);
  CHECK(worst_gradient_error({a, b, bias}, [&] { return sum(gelu(linear(a, b, bias))); }) < 1e-6);
  CHECK(worst_gradient_error({a, c}, [&] { return sum(mul(add(a, c), transpose(transpose(c)))); }) < 1e-6);
  CHECK(worst_gradient_error({a, gamma, beta}, [&] {
          return sum(mul(layer_norm(a, gamma, beta), c));
        }) < 1e-6);
  CHECK(worst_gradient_error({table}, [&] { return sum(mul(embedding(table, ids), embedding(table, ids))); }) < 1e-6);
  CHECK(worst_gradient_error({a}, [&] { return sum(mul(gather_rows(a, rows), gather_rows(a, rows))); }) < 1e-6);
  CHECK(worst_gradient_error({a, c}, [&] {
          return sum(mul(concat_rows({slice_rows(a, 1, 3), c}), concat_rows({slice_rows(a, 1, 3), c})));
        }) < 1e-6);
  CHECK(worst_gradient_error({a, c}, [&] { return sum(mul(concat_cols(a, c), concat_cols(c, a))); }) < 1e-6);
  CHECK(worst_gradient_error({a, w}, [&] { return sum(mul(softmax_rows(matmul(a, w)), matmul(a, w))); }) < 1e-6);
  const std::vector<std::size_t> targets = {2, 0, 1};
  CHECK(worst_gradient_error({a, w}, [&] { return cross_entropy_rows(matmul(a, w), targets); }) < 1e-6);
  Tensor s1 = random_param({1}, rng), s2 = random_param({1}, rng);
  CHECK(worst_gradient_error({s1, s2}, [&] {
          return weighted_sum({mul(s1, s1), mul(s1, s2)}, {Real(3), Real(-0.5)});
        }) < 1e-6);
}

TEST_CASE("attention gradients match central differences") {
  Rng rng(9);
  Tensor q = random_param({5, 4}, rng), k = random_param({5, 4}, rng), v = random_param({5, 4}, rng);
  const std::vector<bool> mask = {true, false, true, true, false};
  Tensor probe = random_param({5, 4}, rng);
  probe.node().requires_grad = false;
  for (std::size_t heads : {1u, 2u}) {
    CHECK(worst_gradient_error({q, k, v}, [&] { return sum(mul(attention(q, k, v, heads, mask), probe)); }) < 1e-6);
  }
}

TEST_CASE("dropout") {
  Rng rng(1);
  Tensor x = Tensor::from({1, 4}, {1, 2, 3, 4});
  SUBCASE("identity outside training") {
    Tensor y = dropout(x, Real(0.5), false, rng);
    for (std::size_t i = 0; i < 4; ++i) CHECK(y.values()[i] == x.values()[i]);
  }
  SUBCASE("kept activations are scaled and the mean is preserved") {
    const std::size_t n = 200000;
    Tensor big = Tensor::zeros({1, n});
    for (auto& v : big.values()) v = 2;
    Tensor y = dropout(big, Real(0.3), true, rng);
    double mean = 0;
    for (Real v : y.values()) {
      CHECK((v == 0 || std::abs(v - 2 / 0.7) < 1e-12));
      mean += v;
    }
    mean /= double(n);
    CHECK(std::abs(mean - 2) / 2 < 0.01);
  }
  CHECK_THROWS_AS(dropout(x, Real(1), true, rng), std::invalid_argument);
}

TEST_CASE("shape errors") {
  Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add(a, Tensor::zeros({3, 2})), std::invalid_argument);
  const std::vector<std::int64_t> ids = {7};
  CHECK_THROWS_AS(embedding(a, ids), std::out_of_range);
}
