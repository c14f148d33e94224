#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "tlmdp/core/errors.hpp"
#include "tlmdp/core/gradcheck.hpp"
#include "tlmdp/diffusion/policy.hpp"

using namespace tlmdp;
using namespace tlmdp::diffusion;
using testing::layer;

TEST_CASE("build_schedule: single step") {
  const NoiseSchedule s = build_schedule(1, 0.5, 0.5);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("build_schedule: two steps multiply the alphas") {
  const NoiseSchedule s = build_schedule(2, 0.1, 0.3);
  CHECK(s.beta(1) == doctest::Approx(0.1));
  CHECK(s.beta(2) == doctest::Approx(0.3));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.9 * 0.7).epsilon(1e-15));
}

TEST_CASE("build_schedule: alpha_bar strictly decreasing and betas linear") {
  for (int T : {1, 3, 10, 50, 1000}) {
    const auto [lo, hi] = default_beta_range(T);
    const NoiseSchedule s = build_schedule(T, lo, hi);
    for (int t = 1; t <= T; ++t) {
      CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
      CHECK(s.alpha_bar(t) > 0.0);
    }
    if (T > 2) {
      const double gap = s.beta(2) - s.beta(1);
      CHECK(s.beta(T) - s.beta(T - 1) == doctest::Approx(gap).epsilon(1e-9));
    }
  }
}

TEST_CASE("build_schedule rejects bad ranges") {
  CHECK_THROWS_AS(build_schedule(0, 0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(build_schedule(5, 0.3, 0.2), ConfigError);
  CHECK_THROWS_AS(build_schedule(5, 0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(build_schedule(5, 0.0, 0.2), ConfigError);
}

TEST_CASE("default_beta_range rescales the 1000-step range") {
  const auto [lo, hi] = default_beta_range(1000);
  CHECK(lo == doctest::Approx(1e-4));
  CHECK(hi == doctest::Approx(0.02));
  const auto [lo50, hi50] = default_beta_range(50);
  CHECK(lo50 == doctest::Approx(2e-3));
  CHECK(hi50 == doctest::Approx(0.4));
  CHECK(default_beta_range(10).second == kMaxDefaultBeta);
}

// d=1, prompt_dim=1 linear denoiser: eps = w_p * prompt + b, independent of x_t and t.
DenoiserNet constant_denoiser(double cond, double uncond) {
  DenoiserNet net;
  net.latent_dim = 1;
  net.prompt_dim = 1;
  net.net = MlpParams({layer(1, 1 + kTimeFeatures + 1, {0, 0, 0, 0, cond - uncond}, {uncond},
                             Activation::kIdentity)});
  return net;
}

TEST_CASE("predict_eps: guidance interpolates and extrapolates") {
  const DenoiserNet net = constant_denoiser(0.4, 0.2);
  const std::vector<double> x{0.3}, c{1.0};
  const EpsPrediction g0 = predict_eps(net, x, 1, 5, c, 0.0);
  CHECK(g0.conditional[0] == doctest::Approx(0.4));
  CHECK(g0.unconditional[0] == doctest::Approx(0.2));
  CHECK(g0.guided[0] == doctest::Approx(0.2));
  CHECK(predict_eps(net, x, 1, 5, c, 1.0).guided[0] == doctest::Approx(0.4));
  CHECK(predict_eps(net, x, 1, 5, c, 5.0).guided[0] == doctest::Approx(1.2));
}

TEST_CASE("predict_eps: the unconditional branch sees the null prompt") {
  SeededRng rng(21);
  const DenoiserNet net = DenoiserNet::create(3, 4, {8}, rng, 0.5);
  const std::vector<double> x{0.1, -0.2, 0.3};
  const std::vector<double> c{0.5, 0.5, 0.5, 0.5};
  const EpsPrediction e = predict_eps(net, x, 2, 4, c, 3.0);
  const auto ref_u = testing::ref_forward(net.net, net.make_input(x, 2, 4, net.null_embedding()));
  const auto ref_c = testing::ref_forward(net.net, net.make_input(x, 2, 4, c));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(e.unconditional[i] == doctest::Approx(ref_u[i]).epsilon(1e-12));
    CHECK(e.guided[i] == doctest::Approx(ref_u[i] + 3.0 * (ref_c[i] - ref_u[i])).epsilon(1e-12));
  }
}

TEST_CASE("encode_timestep") {
  const auto e = encode_timestep(5, 20);
  CHECK(e[0] == doctest::Approx(0.25));
  CHECK(e[1] == doctest::Approx(1.0));
  CHECK(e[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(encode_timestep(0, 20), InputError);
  CHECK_THROWS_AS(encode_timestep(21, 20), InputError);
}

TEST_CASE("ddim_params: worked scalar step") {
  const std::vector<double> x{1.0}, eps{0.5};
  const DdimStep s = ddim_params_from_alphas(0.25, 0.64, x, eps, 1.0, 1e-4);
  // sigma^2 = (1 - 0.64)/(1 - 0.25) * (1 - 0.25/0.64)
  CHECK(s.policy.variance == doctest::Approx(0.2925).epsilon(1e-12));
  const double x0 = (1.0 - std::sqrt(0.75) * 0.5) / 0.5;
  CHECK(s.x0_pred[0] == doctest::Approx(x0).epsilon(1e-14));
  CHECK(s.x0_pred[0] == doctest::Approx(1.1340).epsilon(1e-4));
  const double mu = 0.8 * x0 + std::sqrt(1.0 - 0.64 - 0.2925) * 0.5;
  CHECK(s.policy.mean[0] == doctest::Approx(mu).epsilon(1e-14));
  CHECK(s.policy.mean[0] == doctest::Approx(1.0371).epsilon(1e-4));
  CHECK(s.eps_coefficient ==
        doctest::Approx(std::sqrt(0.0675) - 0.8 * std::sqrt(0.75) / 0.5).epsilon(1e-12));
}

TEST_CASE("ddim_params: eta = 0 falls back to the variance floor") {
  const std::vector<double> x{0.2, -0.4}, eps{0.1, 0.3};
  const DdimStep s = ddim_params_from_alphas(0.25, 0.64, x, eps, 0.0, 1e-3);
  CHECK(s.policy.variance == doctest::Approx(1e-6).epsilon(1e-12));
  // Deterministic DDIM mean: sqrt(ab_prev) x0 + sqrt(1 - ab_prev) eps.
  for (std::size_t i = 0; i < 2; ++i) {
    const double x0 = (x[i] - std::sqrt(0.75) * eps[i]) / 0.5;
    CHECK(s.policy.mean[i] == doctest::Approx(0.8 * x0 + 0.6 * eps[i]).epsilon(1e-14));
  }
}

TEST_CASE("ddim_params: last step returns the clean prediction") {
  const NoiseSchedule sched = build_schedule(4, 0.05, 0.3);
  const std::vector<double> x{0.7, -1.1, 0.2}, eps{0.3, 0.2, -0.9};
  const DdimStep s = ddim_params(sched, x, 1, eps, 1.0, 1e-4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.policy.mean[i] == doctest::Approx(s.x0_pred[i]).epsilon(1e-14));
  CHECK(s.policy.variance == doctest::Approx(1e-8));
  CHECK_THROWS_AS(ddim_params(sched, x, 0, eps, 1.0, 1e-4), InputError);
  CHECK_THROWS_AS(ddim_params(sched, x, 5, eps, 1.0, 1e-4), InputError);
}

TEST_CASE("ddim_params: mean is affine in eps with the reported slope") {
  const std::vector<double> x{0.4};
  const DdimStep a = ddim_params_from_alphas(0.4, 0.7, x, std::vector<double>{0.0}, 0.8, 1e-4);
  const DdimStep b = ddim_params_from_alphas(0.4, 0.7, x, std::vector<double>{1.0}, 0.8, 1e-4);
  CHECK(b.policy.mean[0] - a.policy.mean[0] == doctest::Approx(a.eps_coefficient).epsilon(1e-12));
}

TEST_CASE("policy_logpdf: closed-form densities") {
  CHECK(policy_logpdf({{0.0}, 1.0}, std::vector<double>{0.0}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(policy_logpdf({{0.0}, 1.0}, std::vector<double>{0.0}) == doctest::Approx(-0.9189).epsilon(1e-4));
  const double lp = policy_logpdf({{0.0, 0.0}, 0.25}, std::vector<double>{0.5, 0.0});
  CHECK(lp == doctest::Approx(-std::log(2.0 * std::numbers::pi * 0.25) - 0.5).epsilon(1e-14));
  CHECK(lp == doctest::Approx(-0.9516).epsilon(1e-4));
}

TEST_CASE("policy_logpdf_mean_grad matches finite differences") {
  const GaussianStep s{{0.3, -0.1}, 0.2};
  const std::vector<double> a{0.5, 0.4};
  const auto g = policy_logpdf_mean_grad(s, a);
  for (std::size_t i = 0; i < 2; ++i) {
    GaussianStep p = s, m = s;
    p.mean[i] += 1e-6;
    m.mean[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((policy_logpdf(p, a) - policy_logpdf(m, a)) / 2e-6).epsilon(1e-7));
  }
}

TEST_CASE("policy_sample: Monte-Carlo mean and variance") {
  const GaussianStep s{{1.5, -0.5}, 0.09};
  SeededRng rng(13);
  const int n = 100000;
  double m0 = 0, m1 = 0, v0 = 0;
  for (int k = 0; k < n; ++k) {
    const auto a = policy_sample(s, rng);
    m0 += a[0] / n;
    m1 += a[1] / n;
    v0 += (a[0] - 1.5) * (a[0] - 1.5) / n;
  }
  const double sigma = 0.3;
  CHECK(std::abs(m0 - 1.5) < 4.0 * sigma / std::sqrt(n));
  CHECK(std::abs(m1 + 0.5) < 4.0 * sigma / std::sqrt(n));
  CHECK(std::abs(v0 - 0.09) < 4.0 * 0.09 * std::sqrt(2.0 / n));
}

TEST_CASE("rollout: one step produces one record") {
  SeededRng init(1), rng(2);
  DiffusionConfig cfg;
  cfg.steps = 1;
  const DenoiserNet net = DenoiserNet::create(2, 2, {4}, init);
  const Trajectory tr = rollout(net, std::vector<double>{0.6, 0.8}, cfg.make_schedule(), cfg, rng);
  REQUIRE(tr.records.size() == 1);
  CHECK(tr.records[0].t == 1);
  CHECK(tr.final_sample == tr.records[0].action);
}

TEST_CASE("rollout: records chain and carry their own log-likelihoods") {
  SeededRng init(3), rng(4);
  DiffusionConfig cfg;
  cfg.steps = 7;
  const NoiseSchedule sched = cfg.make_schedule();
  const DenoiserNet net = DenoiserNet::create(3, 3, {16, 16}, init, 0.3);
  const std::vector<double> c{1.0, 0.0, 0.0};
  const Trajectory tr = rollout(net, c, sched, cfg, rng);
  REQUIRE(tr.records.size() == 7);
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    const StepRecord& r = tr.records[k];
    CHECK(r.t == 7 - static_cast<int>(k));
    if (k + 1 < tr.records.size()) CHECK(tr.records[k + 1].x_t == r.action);
    CHECK(r.log_prob == policy_logpdf({r.mean, r.variance}, r.action));
    const StepEvaluation ev = evaluate_step(net, c, sched, cfg, r.t, r.x_t, r.action);
    CHECK(ev.log_prob == r.log_prob);
    CHECK(ev.step.policy.variance == r.variance);
  }
  CHECK(tr.final_sample == tr.records.back().action);

  SeededRng again(4);
  CHECK(rollout(net, c, sched, cfg, again) == tr);
}

TEST_CASE("rollout: zero denoiser composes to the schedule-implied Gaussian") {
  DiffusionConfig cfg;
  cfg.steps = 5;
  cfg.eta = 1.0;
  const NoiseSchedule s = cfg.make_schedule();
  SeededRng init(0);
  const DenoiserNet net = DenoiserNet::create(2, 2, {8}, init, 0.0);
  // With eps = 0 each step is x_{t-1} = sqrt(ab_{t-1}/ab_t) x_t + sigma_t z.
  double var = 1.0;
  for (int t = cfg.steps; t >= 1; --t) {
    const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1);
    const double ddim = (1 - abp) / (1 - ab) * (1 - ab / abp);
    var = abp / ab * var + std::max(ddim, cfg.sigma_min * cfg.sigma_min);
  }
  SeededRng rng(77);
  const int n = 10000;
  double sq = 0.0;
  const std::vector<double> c{0.0, 1.0};
  for (int k = 0; k < n; ++k) {
    const Trajectory tr = rollout(net, c, s, cfg, rng);
    sq += tr.final_sample[0] * tr.final_sample[0] + tr.final_sample[1] * tr.final_sample[1];
  }
  const double empirical = sq / (2.0 * n);
  CHECK(std::abs(empirical / var - 1.0) < 0.05);
}

TEST_CASE("backward_step: log-likelihood gradient agrees with finite differences") {
  SeededRng init(31), rng(32);
  DiffusionConfig cfg;
  cfg.steps = 4;
  cfg.beta_min = 0.05;
  cfg.beta_max = 0.3;
  const NoiseSchedule sched = cfg.make_schedule();
  const DenoiserNet net = DenoiserNet::create(2, 2, {6, 6}, init, 0.4);
  const std::vector<double> c{0.6, -0.8};
  const Trajectory tr = rollout(net, c, sched, cfg, rng);
  for (const StepRecord& r : tr.records) {
    MlpParams g = MlpParams::zeros_like(net.net);
    evaluate_step_backward(net, c, sched, cfg, r.t, r.x_t, r.action, 1.0, g);
    DenoiserNet probe = net;
    const ScalarFunction f = [&](std::span<const double> flat) {
      probe.net.assign(flat);
      return evaluate_step(probe, c, sched, cfg, r.t, r.x_t, r.action).log_prob;
    };
    GradCheckOptions opt;
    opt.method = FiniteDifference::kRidders;
    opt.step = 1e-4;
    const GradCheckReport rep = gradient_check(f, net.net.flatten(), g.flatten(), opt);
    CHECK_MESSAGE(rep.passed, "t=", r.t, " rel=", rep.max_relative_error);
  }
}

TEST_CASE("DiffusionConfig validation") {
  DiffusionConfig c;
  c.steps = -1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("T"), ConfigError);
  c = {};
  c.eta = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sigma_min = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
