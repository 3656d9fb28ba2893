#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "adadecay/model.hpp"
#include "adadecay/optim.hpp"
#include "doctest.h"

using namespace adadecay;

namespace {

// Free-standing parameters: three tensors across two normalization groups.
struct ParamBank {
  std::vector<Param> storage;

  void add(std::size_t n, int group) {
    Param p;
    p.value = Tensor(Shape{n});
    p.grad = Tensor(Shape{n});
    p.group_id = group;
    storage.push_back(std::move(p));
  }

  std::vector<Param*> view() {
    std::vector<Param*> v;
    for (Param& p : storage) v.push_back(&p);
    return v;
  }

  std::vector<double> flat_values() const {
    std::vector<double> out;
    for (const Param& p : storage) {
      const auto& vals = p.value.values();
      out.insert(out.end(), vals.begin(), vals.end());
    }
    return out;
  }
};

ParamBank standard_bank(std::uint64_t init_seed) {
  ParamBank bank;
  bank.add(5, 0);
  bank.add(3, 0);
  bank.add(4, 1);
  RngState init(init_seed);
  for (Param& p : bank.storage) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = 2.0 * init.next_uniform() - 1.0;
  }
  return bank;
}

std::vector<std::vector<double>> grad_sequence(std::uint64_t seed, std::size_t steps,
                                               std::size_t n) {
  RngState rng(seed);
  std::vector<std::vector<double>> out(steps, std::vector<double>(n));
  for (auto& step : out) {
    for (double& g : step) g = rng.next_normal();
  }
  return out;
}

void load_grads(std::vector<Param*>& params, const std::vector<double>& flat) {
  std::size_t k = 0;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] = flat[k++];
  }
}

std::vector<double> run_sgd_trajectory(const DecayPolicy& policy, double lambda,
                                       std::size_t steps, double eta, double momentum) {
  ParamBank bank = standard_bank(7);
  auto params = bank.view();
  const auto grads = grad_sequence(99, steps, 12);
  RngState decay(3);
  for (std::size_t s = 0; s < steps; ++s) {
    load_grads(params, grads[s]);
    sgd_step(params, eta, lambda, policy, momentum, false, &decay);
  }
  return bank.flat_values();
}

}  // namespace

TEST_CASE("group stats: exact two-element case") {
  ParamBank bank;
  bank.add(2, 0);
  auto params = bank.view();
  params[0]->grad[0] = 3.0;
  params[0]->grad[1] = -4.0;
  const auto stats = compute_group_stats(params);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].group_id == 0);
  CHECK(stats[0].mu == 3.5);
  CHECK(stats[0].sigma == 0.5);
  CHECK(stats[0].count == 2);
}

TEST_CASE("group stats: equal magnitudes give zero sigma") {
  ParamBank bank;
  bank.add(4, 0);
  auto params = bank.view();
  for (std::size_t i = 0; i < 4; ++i) params[0]->grad[i] = (i % 2 == 0) ? 2.5 : -2.5;
  const auto stats = compute_group_stats(params);
  CHECK(stats[0].mu == 2.5);
  CHECK(stats[0].sigma == 0.0);
}

TEST_CASE("group stats: groups come back in ascending id order") {
  ParamBank bank;
  bank.add(3, 2);
  bank.add(2, 0);
  bank.add(4, 1);
  auto params = bank.view();
  RngState rng(5);
  for (Param* p : params)
    for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] = rng.next_normal();
  const auto stats = compute_group_stats(params);
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].group_id == 0);
  CHECK(stats[1].group_id == 1);
  CHECK(stats[2].group_id == 2);
  CHECK(stats[0].count == 2);
  CHECK(stats[1].count == 4);
  CHECK(stats[2].count == 3);
}

TEST_CASE("group stats: matches a two-pass reference on 1000 elements") {
  ParamBank bank;
  bank.add(600, 0);
  bank.add(400, 0);
  auto params = bank.view();
  RngState rng(8);
  std::vector<double> all;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      p->grad[i] = 3.0 * rng.next_normal() + 0.5;
      all.push_back(p->grad[i]);
    }
  }
  double mu = 0.0;
  for (double g : all) mu += std::abs(g);
  mu /= static_cast<double>(all.size());
  double sig = 0.0;
  for (double g : all) {
    const double d = std::abs(g) - mu;
    sig += d * d;
  }
  sig = std::sqrt(sig / static_cast<double>(all.size()));

  const auto stats = compute_group_stats(params);
  CHECK(stats[0].mu == mu);
  CHECK(stats[0].sigma == sig);
  CHECK(stats[0].count == 1000);
}

TEST_CASE("normalized gradient norm") {
  GroupStats s;
  s.mu = 3.5;
  s.sigma = 0.5;
  CHECK(normalized_grad_norm(-4.0, s) == 1.0);
  CHECK(normalized_grad_norm(3.0, s) == -1.0);
  CHECK(normalized_grad_norm(3.5, s) == 0.0);
  s.sigma = 1e-13;  // below the floor: degenerate group
  CHECK(normalized_grad_norm(100.0, s) == 0.0);
}

TEST_CASE("theta: fixed points and a frozen value") {
  CHECK(theta_adaptive(0.0, 4.0) == 1.0);
  CHECK(theta_adaptive(0.0, -7.5) == 1.0);
  CHECK(theta_adaptive(3.2, 0.0) == 1.0);
  CHECK(theta_adaptive(-123.0, 0.0) == 1.0);
  // 2 / (1 + e^-4)
  CHECK(theta_adaptive(1.0, 4.0) == doctest::Approx(1.964027580075817).epsilon(1e-12));
}

TEST_CASE("theta: antisymmetry about 1") {
  RngState rng(21);
  for (int i = 0; i < 1000; ++i) {
    const double x = 10.0 * (2.0 * rng.next_uniform() - 1.0);
    const double alpha = 8.0 * (2.0 * rng.next_uniform() - 1.0);
    CHECK(theta_adaptive(x, alpha) + theta_adaptive(-x, alpha) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("theta: stays in the open interval even at extremes") {
  for (double x : {-1e6, -745.0, -40.0, 40.0, 745.0, 1e6}) {
    const double t = theta_adaptive(x, 8.0);
    CHECK(t > 0.0);
    CHECK(t < 2.0);
  }
}

TEST_CASE("theta: monotone in the sign of alpha") {
  const std::vector<double> xs = {-3.0, -1.0, -0.25, 0.0, 0.25, 1.0, 3.0};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    CHECK(theta_adaptive(xs[i], 4.0) > theta_adaptive(xs[i - 1], 4.0));
    CHECK(theta_adaptive(xs[i], -4.0) < theta_adaptive(xs[i - 1], -4.0));
  }
}

TEST_CASE("theta randomized: alpha 0 collapses to 1, otherwise mean 1") {
  RngState rng(31);
  for (int i = 0; i < 100; ++i) CHECK(theta_randomized(rng, 0.0) == 1.0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double t = theta_randomized(rng, 4.0);
    CHECK(t > 0.0);
    CHECK(t < 2.0);
    sum += t;
  }
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("sgd: one hand-computed constant-decay step") {
  ParamBank bank;
  bank.add(1, 0);
  auto params = bank.view();
  params[0]->value[0] = 1.0;
  params[0]->grad[0] = 0.0;
  sgd_step(params, 0.1, 0.5, DecayPolicy::constant(), 0.0);
  CHECK(params[0]->value[0] == 0.95);
}

TEST_CASE("sgd: none policy equals constant with lambda zero") {
  CHECK(run_sgd_trajectory(DecayPolicy::none(), 0.5, 100, 0.05, 0.9) ==
        run_sgd_trajectory(DecayPolicy::constant(), 0.0, 100, 0.05, 0.9));
}

TEST_CASE("sgd: adadecay at alpha 0 equals constant") {
  CHECK(run_sgd_trajectory(DecayPolicy::adadecay(0.0), 5e-4, 100, 0.05, 0.9) ==
        run_sgd_trajectory(DecayPolicy::constant(), 5e-4, 100, 0.05, 0.9));
}

TEST_CASE("sgd: randomized at alpha 0 equals constant") {
  CHECK(run_sgd_trajectory(DecayPolicy::randomized(0.0), 5e-4, 100, 0.05, 0.9) ==
        run_sgd_trajectory(DecayPolicy::constant(), 5e-4, 100, 0.05, 0.9));
}

TEST_CASE("sgd: ineligible parameters are never decayed") {
  ParamBank bank;
  bank.add(1, 0);
  bank.add(1, 0);
  auto params = bank.view();
  params[0]->value[0] = params[1]->value[0] = 1.0;
  params[0]->grad[0] = params[1]->grad[0] = 0.0;
  params[1]->decay_eligible = false;
  sgd_step(params, 0.1, 0.5, DecayPolicy::constant(), 0.0);
  CHECK(params[0]->value[0] == 0.95);
  CHECK(params[1]->value[0] == 1.0);
}

TEST_CASE("sgd: rejects updates that would flip signs") {
  ParamBank bank;
  bank.add(1, 0);
  auto params = bank.view();
  CHECK_THROWS_AS(sgd_step(params, 2.0, 0.5, DecayPolicy::constant(), 0.9),
                  std::invalid_argument);
  // theta can reach 2 under adadecay, so the bound halves.
  CHECK_THROWS_AS(sgd_step(params, 1.2, 0.45, DecayPolicy::adadecay(4.0), 0.9),
                  std::invalid_argument);
  CHECK_NOTHROW(sgd_step(params, 1.2, 0.45, DecayPolicy::constant(), 0.9));
  CHECK_THROWS_AS(sgd_step(params, 0.1, 5e-4, DecayPolicy::randomized(4.0), 0.9),
                  std::invalid_argument);  // missing rng
}

TEST_CASE("sgd: coupled and decoupled forms, two steps by hand") {
  auto run = [](bool coupled) {
    ParamBank bank;
    bank.add(1, 0);
    auto params = bank.view();
    params[0]->value[0] = 1.0;
    for (int s = 0; s < 2; ++s) {
      params[0]->grad[0] = 0.5;
      sgd_step(params, 0.1, 0.2, DecayPolicy::constant(), 0.5, coupled);
    }
    return params[0]->value[0];
  };

  const double eta = 0.1, lambda = 0.2, m = 0.5, g = 0.5;
  double wd = 1.0, vd = 0.0;
  double wc = 1.0, vc = 0.0;
  for (int s = 0; s < 2; ++s) {
    vd = m * vd + g;
    wd = (1.0 - eta * (lambda * 1.0)) * wd - eta * vd;
    vc = m * vc + (g + (lambda * 1.0) * wc);
    wc = wc - eta * vc;
  }
  CHECK(run(false) == wd);
  CHECK(run(true) == wc);
  CHECK(wd != wc);  // momentum carries the coupled decay term forward
}

TEST_CASE("sgd: adadecay matches a literal scalar transcription for 50 steps") {
  const double eta = 0.05, lambda = 0.01, momentum = 0.9, alpha = 4.0;
  const std::size_t steps = 50;

  ParamBank bank = standard_bank(7);
  auto params = bank.view();
  const auto grads = grad_sequence(99, steps, 12);

  // Scalar reference: flat arrays, groups handled in ascending id order.
  std::vector<double> w = bank.flat_values();
  std::vector<double> v(12, 0.0);
  const std::vector<int> group = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1};

  double max_diff = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    load_grads(params, grads[s]);
    sgd_step(params, eta, lambda, DecayPolicy::adadecay(alpha), momentum);

    double mu[2] = {0.0, 0.0}, sig[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < 12; ++i) {
      mu[group[i]] += std::abs(grads[s][i]);
      ++count[group[i]];
    }
    for (int gid : {0, 1}) mu[gid] /= static_cast<double>(count[gid]);
    for (std::size_t i = 0; i < 12; ++i) {
      const double d = std::abs(grads[s][i]) - mu[group[i]];
      sig[group[i]] += d * d;
    }
    for (int gid : {0, 1}) sig[gid] = std::sqrt(sig[gid] / static_cast<double>(count[gid]));

    for (std::size_t i = 0; i < 12; ++i) {
      const double g = grads[s][i];
      const double gt = sig[group[i]] < 1e-12 ? 0.0 : (std::abs(g) - mu[group[i]]) / sig[group[i]];
      const double theta = 2.0 / (1.0 + std::exp(-alpha * gt));
      v[i] = momentum * v[i] + g;
      w[i] = (1.0 - eta * (lambda * theta)) * w[i] - eta * v[i];
    }

    const auto impl = bank.flat_values();
    for (std::size_t i = 0; i < 12; ++i) max_diff = std::max(max_diff, std::abs(impl[i] - w[i]));
  }
  CHECK(max_diff <= 1e-15);
}

TEST_CASE("rmsprop matches a scalar transcription for 50 steps") {
  const double eta = 0.01, lambda = 0.01, rho = 0.95, eps = 1e-8;
  ParamBank bank = standard_bank(4);
  auto params = bank.view();
  const auto grads = grad_sequence(55, 50, 12);

  std::vector<double> w = bank.flat_values();
  std::vector<double> sq(12, 0.0);
  for (std::size_t s = 0; s < 50; ++s) {
    load_grads(params, grads[s]);
    rmsprop_step(params, eta, lambda, rho, eps);
    for (std::size_t i = 0; i < 12; ++i) {
      const double g = grads[s][i] + lambda * w[i];
      sq[i] = rho * sq[i] + (1.0 - rho) * g * g;
      w[i] -= eta * g / (std::sqrt(sq[i]) + eps);
    }
  }
  CHECK(bank.flat_values() == w);
}

TEST_CASE("adam: zero gradient with zero lambda leaves weights alone") {
  ParamBank bank = standard_bank(4);
  auto params = bank.view();
  const auto before = bank.flat_values();
  for (Param* p : params) p->grad.fill(0.0);
  for (std::size_t t = 1; t <= 5; ++t) adam_step(params, 0.001, 0.0, 0.9, 0.999, 1e-8, t);
  CHECK(bank.flat_values() == before);
}

TEST_CASE("adam: first step moves by eta regardless of gradient scale") {
  for (double g : {1.0, 100.0, 0.01}) {
    ParamBank bank;
    bank.add(1, 0);
    auto params = bank.view();
    params[0]->value[0] = 1.0;
    params[0]->grad[0] = g;
    adam_step(params, 0.001, 0.0, 0.9, 0.999, 1e-8, 1);
    // bias correction makes m_hat = g, v_hat = g^2, so the move is ~eta.
    CHECK(params[0]->value[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-6));
  }
}

TEST_CASE("adam: matches a scalar transcription for 20 steps") {
  const double eta = 0.002, lambda = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ParamBank bank = standard_bank(4);
  auto params = bank.view();
  const auto grads = grad_sequence(66, 20, 12);

  std::vector<double> w = bank.flat_values();
  std::vector<double> m(12, 0.0), v(12, 0.0);
  for (std::size_t t = 1; t <= 20; ++t) {
    load_grads(params, grads[t - 1]);
    adam_step(params, eta, lambda, b1, b2, eps, t);
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < 12; ++i) {
      const double g = grads[t - 1][i] + lambda * w[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      w[i] -= eta * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
  CHECK(bank.flat_values() == w);
}

TEST_CASE("adam: rejects a step count below 1") {
  ParamBank bank;
  bank.add(1, 0);
  auto params = bank.view();
  CHECK_THROWS_AS(adam_step(params, 0.001, 0.0, 0.9, 0.999, 1e-8, 0), std::invalid_argument);
}

TEST_CASE("optimizer dispatch equals the free step functions") {
  const auto grads = grad_sequence(77, 10, 12);

  ParamBank via_class = standard_bank(9);
  auto pc = via_class.view();
  Optimizer opt(OptimizerKind::sgd(0.9), DecayPolicy::constant(), 5e-4, false, RngState(1));
  for (std::size_t s = 0; s < 10; ++s) {
    load_grads(pc, grads[s]);
    opt.step(pc, 0.05);
  }
  CHECK(opt.steps_taken() == 10);

  ParamBank direct = standard_bank(9);
  auto pd = direct.view();
  for (std::size_t s = 0; s < 10; ++s) {
    load_grads(pd, grads[s]);
    sgd_step(pd, 0.05, 5e-4, DecayPolicy::constant(), 0.9);
  }
  CHECK(via_class.flat_values() == direct.flat_values());

  ParamBank adam_class = standard_bank(9);
  auto pa = adam_class.view();
  Optimizer aopt(OptimizerKind::adam(), DecayPolicy::constant(), 5e-4, false, RngState(1));
  ParamBank adam_direct = standard_bank(9);
  auto pb = adam_direct.view();
  for (std::size_t s = 0; s < 10; ++s) {
    load_grads(pa, grads[s]);
    aopt.step(pa, 0.001);
    load_grads(pb, grads[s]);
    adam_step(pb, 0.001, 5e-4, 0.9, 0.999, 1e-8, s + 1);
  }
  CHECK(adam_class.flat_values() == adam_direct.flat_values());

  ParamBank rms_class = standard_bank(9);
  auto pr = rms_class.view();
  Optimizer ropt(OptimizerKind::rmsprop(), DecayPolicy::constant(), 5e-4, false, RngState(1));
  ParamBank rms_direct = standard_bank(9);
  auto ps = rms_direct.view();
  for (std::size_t s = 0; s < 10; ++s) {
    load_grads(pr, grads[s]);
    ropt.step(pr, 0.001);
    load_grads(ps, grads[s]);
    rmsprop_step(ps, 0.001, 5e-4, 0.95, 1e-8);
  }
  CHECK(rms_class.flat_values() == rms_direct.flat_values());
}

TEST_CASE("optimizer: randomized decay stream is part of the trial state") {
  const auto grads = grad_sequence(88, 20, 12);
  auto run = [&](std::uint64_t decay_seed) {
    ParamBank bank = standard_bank(2);
    auto params = bank.view();
    Optimizer opt(OptimizerKind::sgd(0.9), DecayPolicy::randomized(4.0), 0.01, false,
                  RngState(decay_seed));
    for (std::size_t s = 0; s < 20; ++s) {
      load_grads(params, grads[s]);
      opt.step(params, 0.05);
    }
    return bank.flat_values();
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("learning rate: sigmoid anneal hits both endpoints exactly") {
  const LrSchedule s = LrSchedule::sigmoid_anneal(0.1, 0.001);
  CHECK(lr_at(s, 0, 1000) == 0.1);
  CHECK(lr_at(s, 1000, 1000) == 0.001);
  CHECK(lr_at(s, 500, 1000) == doctest::Approx(0.0505).epsilon(1e-12));
  CHECK(lr_at(s, 0, 0) == 0.1);
  double prev = lr_at(s, 0, 1000);
  for (std::size_t t = 1; t <= 1000; ++t) {
    const double cur = lr_at(s, t, 1000);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("learning rate: constant, exponential, staircase") {
  CHECK(lr_at(LrSchedule::constant(0.05), 123, 1000) == 0.05);
  const LrSchedule e = LrSchedule::exponential(0.1, 0.99);
  CHECK(lr_at(e, 0, 100) == 0.1);
  CHECK(lr_at(e, 3, 100) == 0.1 * std::pow(0.99, 3.0));
  const LrSchedule st = LrSchedule::staircase(0.1, 0.5, 10);
  CHECK(lr_at(st, 9, 100) == 0.1);
  CHECK(lr_at(st, 10, 100) == 0.1 * 0.5);
  CHECK(lr_at(st, 25, 100) == 0.1 * std::pow(0.5, 2.0));
}

TEST_CASE("factories validate their arguments") {
  CHECK_THROWS_AS(DecayPolicy::adadecay(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(DecayPolicy::randomized(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::sigmoid_anneal(0.001, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::sigmoid_anneal(0.1, 0.001, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::exponential(0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::exponential(0.1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(LrSchedule::staircase(0.1, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(OptimizerKind::sgd(1.0), std::invalid_argument);
  CHECK_THROWS_AS(OptimizerKind::rmsprop(1.0), std::invalid_argument);
  CHECK_THROWS_AS(OptimizerKind::rmsprop(0.95, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(OptimizerKind::adam(1.0), std::invalid_argument);
  CHECK_THROWS_AS(OptimizerKind::adam(0.9, 0.999, 0.0), std::invalid_argument);
  CHECK(policy_name(DecayPolicy::adadecay(4.0)) == "adadecay");
  CHECK(policy_name(DecayPolicy::none()) == "none");
}
