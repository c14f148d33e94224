#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "tlmdp/core/adamw.hpp"
#include "tlmdp/core/errors.hpp"
#include "tlmdp/core/gradcheck.hpp"
#include "tlmdp/core/mlp.hpp"
#include "tlmdp/core/rng.hpp"

using namespace tlmdp;
using testing::layer;

TEST_CASE("mlp_forward: identity layer returns its input") {
  const MlpParams p({layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::kIdentity)});
  const auto y = mlp_forward(p, std::vector<double>{1.0, 2.0});
  CHECK(y == std::vector<double>{1.0, 2.0});
}

TEST_CASE("mlp_forward: zero weights return the bias") {
  const MlpParams p({layer(3, 2, {0, 0, 0, 0, 0, 0}, {0.5, -1.0, 2.0}, Activation::kIdentity)});
  CHECK(mlp_forward(p, std::vector<double>{7.0, -3.0}) == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("mlp_forward: two-layer Mish net matches a hand computation") {
  const MlpParams p({layer(2, 2, {0.5, -1.0, 2.0, 0.25}, {0.1, -0.2}, Activation::kMish),
                     layer(1, 2, {1.5, -0.5}, {0.3}, Activation::kIdentity)});
  const double x0 = 0.4, x1 = -0.7;
  const double h0 = testing::ref_mish(0.5 * x0 - 1.0 * x1 + 0.1);
  const double h1 = testing::ref_mish(2.0 * x0 + 0.25 * x1 - 0.2);
  const double expected = 1.5 * h0 - 0.5 * h1 + 0.3;
  const auto y = mlp_forward(p, std::vector<double>{x0, x1});
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mlp_forward: random nets agree with the nested-loop oracle") {
  SeededRng rng(11);
  for (Activation act : {Activation::kIdentity, Activation::kMish, Activation::kGelu}) {
    const MlpParams p = MlpParams::create({5, 7, 6, 3}, act, Activation::kIdentity, rng, 0.5);
    std::vector<double> x(5);
    rng.fill_normal(x);
    const auto y = mlp_forward(p, x);
    const auto ref = testing::ref_forward(p, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("mlp_forward: input width mismatch is a configuration error") {
  const MlpParams p({layer(1, 2, {1, 1}, {0}, Activation::kIdentity)});
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("mlp_backward: linear layer has the closed-form gradients") {
  const std::vector<double> w{1, 2, 3, 4, 5, 6};  // 2x3
  const MlpParams p({layer(2, 3, w, {0, 0}, Activation::kIdentity)});
  const std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> g{3.0, -2.0};
  const MlpBackward b = mlp_backward(p, x, g);
  const DenseLayer& gl = b.param_grads.layers()[0];
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(gl.bias[r] == g[r]);
    for (std::size_t c = 0; c < 3; ++c) CHECK(gl.weight.at(r, c) == g[r] * x[c]);
  }
  for (std::size_t c = 0; c < 3; ++c) CHECK(b.input_grad[c] == w[c] * g[0] + w[3 + c] * g[1]);
}

TEST_CASE("mlp_backward: zero upstream gives zero gradients") {
  SeededRng rng(3);
  const MlpParams p = MlpParams::create({4, 8, 2}, Activation::kMish, Activation::kIdentity, rng, 0.5);
  const MlpBackward b = mlp_backward(p, std::vector<double>{1, 2, 3, 4}, std::vector<double>{0, 0});
  for (double v : b.param_grads.flatten()) CHECK(v == 0.0);
  for (double v : b.input_grad) CHECK(v == 0.0);
}

TEST_CASE("mlp_backward: three-layer Mish net agrees with finite differences") {
  SeededRng rng(5);
  const MlpParams p =
      MlpParams::create({3, 6, 5, 2}, Activation::kMish, Activation::kIdentity, rng, 0.6);
  const std::vector<double> x{0.3, -0.8, 1.1};
  const std::vector<double> up{0.7, -1.3};
  const MlpBackward b = mlp_backward(p, x, up);
  MlpParams probe = p;
  const ScalarFunction f = [&](std::span<const double> flat) {
    probe.assign(flat);
    return dot(up, mlp_forward(probe, x));
  };
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.tolerance = 1e-5;
  const GradCheckReport r = gradient_check(f, p.flatten(), b.param_grads.flatten(), opt);
  CHECK(r.passed);
  CHECK(r.coordinates_checked == p.parameter_count());

  // Input gradient against differences on x.
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    const double fd = (dot(up, mlp_forward(p, xp)) - dot(up, mlp_forward(p, xm))) / 2e-6;
    CHECK(b.input_grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("mlp_backward_accumulate adds into an existing buffer") {
  SeededRng rng(8);
  const MlpParams p = MlpParams::create({2, 3, 1}, Activation::kGelu, Activation::kIdentity, rng, 0.5);
  const std::vector<double> x{0.2, 0.9};
  const std::vector<double> up{1.0};
  MlpParams acc = MlpParams::zeros_like(p);
  mlp_backward_accumulate(p, x, up, acc);
  mlp_backward_accumulate(p, x, up, acc);
  const auto once = mlp_backward(p, x, up).param_grads.flatten();
  const auto twice = acc.flatten();
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * once[i]));
}

TEST_CASE("MlpParams flatten/assign round-trip") {
  SeededRng rng(1);
  MlpParams p = MlpParams::create({3, 4, 2}, Activation::kMish, Activation::kIdentity, rng, 1.0);
  const auto flat = p.flatten();
  CHECK(flat.size() == p.parameter_count());
  CHECK(p.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
  MlpParams q = MlpParams::zeros_like(p);
  q.assign(flat);
  CHECK(q == p);
  CHECK_THROWS_AS(q.assign(std::vector<double>(flat.size() - 1)), ConfigError);
}

TEST_CASE("AdamW: first step with unit gradient moves by the learning rate") {
  MlpParams p({layer(1, 1, {0.0}, {0.0}, Activation::kIdentity)});
  MlpParams g({layer(1, 1, {1.0}, {1.0}, Activation::kIdentity)});
  AdamWState s = AdamWState::for_params(p, {3e-4, 0.9, 0.999, 0.0, 1e-8});
  REQUIRE(optimizer_step(p, g, s).applied);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  CHECK(p.layers()[0].weight[0] == doctest::Approx(-3e-4 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(p.layers()[0].bias[0] == doctest::Approx(-3e-4).epsilon(1e-7));
  CHECK(s.step == 1);
}

TEST_CASE("AdamW: zero gradient without decay leaves parameters unchanged") {
  MlpParams p({layer(1, 2, {0.5, -2.0}, {3.0}, Activation::kIdentity)});
  const MlpParams before = p;
  AdamWState s = AdamWState::for_params(p, {1e-2, 0.9, 0.999, 0.0, 1e-8});
  optimizer_step(p, MlpParams::zeros_like(p), s);
  CHECK(p == before);
}

TEST_CASE("AdamW: decay alone scales parameters by 1 - lr * wd") {
  MlpParams p({layer(1, 2, {0.5, -2.0}, {3.0}, Activation::kIdentity)});
  const double lr = 1e-2, wd = 0.1;
  AdamWState s = AdamWState::for_params(p, {lr, 0.9, 0.999, wd, 1e-8});
  optimizer_step(p, MlpParams::zeros_like(p), s);
  CHECK(p.layers()[0].weight[0] == doctest::Approx(0.5 * (1 - lr * wd)).epsilon(1e-15));
  CHECK(p.layers()[0].weight[1] == doctest::Approx(-2.0 * (1 - lr * wd)).epsilon(1e-15));
  CHECK(p.layers()[0].bias[0] == doctest::Approx(3.0 * (1 - lr * wd)).epsilon(1e-15));
}

TEST_CASE("AdamW: multi-step trajectory matches a scalar reimplementation") {
  MlpParams p({layer(1, 1, {0.7}, {-0.2}, Activation::kIdentity)});
  const AdamWConfig cfg{5e-2, 0.8, 0.95, 0.01, 1e-8};
  AdamWState s = AdamWState::for_params(p, cfg);
  double w = 0.7, m = 0.0, v = 0.0;
  const double grads[] = {0.3, -1.2, 0.05, 2.0, -0.4};
  for (int k = 0; k < 5; ++k) {
    MlpParams g({layer(1, 1, {grads[k]}, {0.0}, Activation::kIdentity)});
    optimizer_step(p, g, s);
    m = cfg.beta1 * m + (1 - cfg.beta1) * grads[k];
    v = cfg.beta2 * v + (1 - cfg.beta2) * grads[k] * grads[k];
    const double mh = m / (1 - std::pow(cfg.beta1, k + 1));
    const double vh = v / (1 - std::pow(cfg.beta2, k + 1));
    w = w - cfg.learning_rate * cfg.weight_decay * w - cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    CHECK(p.layers()[0].weight[0] == doctest::Approx(w).epsilon(1e-13));
  }
}

TEST_CASE("AdamW: non-finite gradient is refused and nothing changes") {
  MlpParams p({layer(1, 1, {1.0}, {1.0}, Activation::kIdentity)});
  const MlpParams before = p;
  AdamWState s = AdamWState::for_params(p, {});
  const AdamWState s_before = s;
  MlpParams g({layer(1, 1, {NAN}, {0.0}, Activation::kIdentity)});
  const StepReport r = optimizer_step(p, g, s);
  CHECK_FALSE(r.applied);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK(p == before);
  CHECK(s == s_before);
}

TEST_CASE("AdamW config validation names the offending key") {
  AdamWConfig c;
  c.learning_rate = 0.0;
  CHECK_THROWS_WITH_AS(c.validate("policy_opt"), doctest::Contains("policy_opt.lr"), ConfigError);
  c = {};
  c.beta2 = 1.0;
  CHECK_THROWS_WITH_AS(c.validate("critic_opt"), doctest::Contains("critic_opt.beta2"), ConfigError);
}

TEST_CASE("gradient_check accepts the exact gradient of a quadratic") {
  const ScalarFunction f = [](std::span<const double> p) { return 0.5 * dot(p, p); };
  const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
  const GradCheckReport r = gradient_check(f, x, x);
  CHECK(r.passed);
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("gradient_check rejects a wrong gradient") {
  const ScalarFunction f = [](std::span<const double> p) { return 0.5 * dot(p, p); };
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> wrong{1.0, -2.0, 0.6};
  const GradCheckReport r = gradient_check(f, x, wrong);
  CHECK_FALSE(r.passed);
  CHECK(r.worst_index == 2);
}

TEST_CASE("gradient_check with Ridders extrapolation handles short-scale curvature") {
  // sin(50 x) at h = 1e-3: plain central differences are off by ~0.04%.
  const ScalarFunction f = [](std::span<const double> p) { return std::sin(50.0 * p[0]); };
  const std::vector<double> x{0.3};
  const std::vector<double> exact{50.0 * std::cos(15.0)};
  GradCheckOptions opt;
  opt.step = 1e-2;
  opt.tolerance = 1e-9;
  CHECK_FALSE(gradient_check(f, x, exact, opt).passed);
  opt.method = FiniteDifference::kRidders;
  CHECK(gradient_check(f, x, exact, opt).passed);
}

TEST_CASE("gradient_check validates lengths") {
  const ScalarFunction f = [](std::span<const double>) { return 0.0; };
  CHECK_THROWS_AS(gradient_check(f, std::vector<double>{1, 2}, std::vector<double>{1}), ConfigError);
  GradCheckOptions opt;
  opt.coordinate_steps = {1e-3};
  CHECK_THROWS_AS(gradient_check(f, std::vector<double>{1, 2}, std::vector<double>{0, 0}, opt),
                  ConfigError);
}

TEST_CASE("SeededRng: distinct split labels give distinct streams") {
  const SeededRng root(2024);
  SeededRng a = root.split("alpha");
  SeededRng b = root.split("beta");
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  CHECK(equal == 0);
  SeededRng c = root.split("alpha", 0);
  SeededRng d = root.split("alpha", 1);
  equal = 0;
  for (int i = 0; i < 64; ++i) equal += c.next_u64() == d.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("SeededRng: same seed, same stream; splits do not advance the parent") {
  SeededRng a(99), b(99);
  (void)a.split("x");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SeededRng c = SeededRng::from_state(a.key(), a.position());
  CHECK(c.next_u64() == a.next_u64());
}

TEST_CASE("SeededRng: uniform and normal moments") {
  SeededRng rng(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("random_permutation is a permutation") {
  SeededRng rng(4);
  const auto p = random_permutation(50, rng);
  const std::set<std::size_t> s(p.begin(), p.end());
  CHECK(s.size() == 50);
  CHECK(*s.rbegin() == 49);
}
