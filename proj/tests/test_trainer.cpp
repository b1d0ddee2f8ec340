#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fairlab/trainer.hpp"
#include "helpers.hpp"

using namespace fairlab;
using namespace fairlab::trainer;

namespace {

// Linearly separable two-group toy problem.
Dataset separable_toy(uint64_t seed, int n) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Mat f(n, 2);
  std::vector<int> labels(n), sens(n);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    labels[i] = y;
    sens[i] = (i / 2) % 2;
    f.at(i, 0) = (y == 1 ? 2.0 : -2.0) + noise(g);
    f.at(i, 1) = noise(g);
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

Dataset shifted_groups(uint64_t seed, int n) {
  // Group-dependent label rates and a group-revealing feature.
  std::mt19937_64 g(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat f(n, 3);
  std::vector<int> labels(n), sens(n);
  for (int i = 0; i < n; ++i) {
    const int s = u(g) < 0.75 ? 0 : 1;
    const double rate = s == 0 ? 0.55 : 0.25;
    const int y = u(g) < rate ? 1 : 0;
    sens[i] = s;
    labels[i] = y;
    f.at(i, 0) = (y ? 1.0 : -1.0) + noise(g);
    f.at(i, 1) = (s ? 1.5 : -1.5) + 0.5 * noise(g);
    f.at(i, 2) = noise(g);
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

}  // namespace

TEST_CASE("chi2 simplex projection basics") {
  const Vec anchor = {0.8, 0.2};

  // Feasible points are fixed points.
  const Vec inside = {0.78, 0.22};
  const Vec p1 = project_chi2_simplex(inside, anchor, 0.1);
  CHECK(testutil::max_rel_err(p1, inside) < 1e-10);

  // Zero radius collapses the ball to the anchor.
  const Vec p0 = project_chi2_simplex({0.2, 0.8}, anchor, 0.0);
  CHECK(p0[0] == anchor[0]);
  CHECK(p0[1] == anchor[1]);

  CHECK_THROWS_AS(project_chi2_simplex({0.5, 0.5}, {0.9, 0.2}, 0.1), InvalidInput);
  CHECK_THROWS_AS(project_chi2_simplex({0.5, 0.5}, {1.0, 0.0}, 0.1), InvalidInput);
}

TEST_CASE("chi2 simplex projection matches a grid oracle in 2d") {
  const Vec anchor = {0.8, 0.2};
  const double delta = 0.1;
  const Vec v = {0.2, 0.8};
  const Vec got = project_chi2_simplex(v, anchor, delta);

  // Brute force over the 1-d parametrization q = (a, 1-a).
  double best_a = -1.0, best_obj = 1e300;
  const int grid = 1000000;
  for (int i = 0; i <= grid; ++i) {
    const double a = static_cast<double>(i) / grid;
    const Vec q = {a, 1.0 - a};
    if (chi2_divergence(q, anchor) > delta) continue;
    const double obj = (a - v[0]) * (a - v[0]) + (1.0 - a - v[1]) * (1.0 - a - v[1]);
    if (obj < best_obj) {
      best_obj = obj;
      best_a = a;
    }
  }
  CHECK(std::abs(got[0] - best_a) < 1e-5);
  CHECK(chi2_divergence(got, anchor) <= delta + 1e-9);
}

TEST_CASE("chi2 simplex projection is idempotent") {
  auto g = testutil::rng(808);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(g() % 3);
    Vec anchor(k, 0.0);
    double sum = 0.0;
    for (double& a : anchor) {
      a = 0.1 + u(g) + 0.5;
      sum += a;
    }
    for (double& a : anchor) a /= sum;
    Vec v(k);
    for (double& x : v) x = u(g);
    const double delta = 0.05 + 0.2 * std::abs(u(g));
    const Vec once = project_chi2_simplex(v, anchor, delta);
    const Vec twice = project_chi2_simplex(once, anchor, delta);
    for (int s = 0; s < k; ++s) CHECK(std::abs(once[s] - twice[s]) < 1e-12);
    CHECK(chi2_divergence(once, anchor) <= delta + 1e-9);
    double qs = 0.0;
    for (double x : once) {
      CHECK(x >= 0.0);
      qs += x;
    }
    CHECK(std::abs(qs - 1.0) < 1e-10);
  }
}

TEST_CASE("erm fits separable data and is deterministic") {
  auto data = separable_toy(3, 100);
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.seed = 9;
  auto trace = train_erm(data, cfg);
  CHECK(trace.epochs.back().train.accuracy >= 0.99);

  auto trace2 = train_erm(data, cfg);
  REQUIRE(trace.model.weights.size() == trace2.model.weights.size());
  for (size_t j = 0; j < trace.model.weights.size(); ++j)
    CHECK(trace.model.weights[j] == trace2.model.weights[j]);
  CHECK(trace.digest() == trace2.digest());
}

TEST_CASE("erm objective is monotone nonincreasing at the default step size") {
  auto data = shifted_groups(4, 400);
  TrainConfig cfg;
  cfg.steps = 300;
  auto trace = train_erm(data, cfg);
  for (size_t t = 1; t < trace.epochs.size(); ++t)
    CHECK(trace.epochs[t].objective <= trace.epochs[t - 1].objective + 1e-12);
}

TEST_CASE("train_fair with lambda zero equals erm") {
  auto data = shifted_groups(5, 200);
  TrainConfig cfg;
  cfg.steps = 120;
  cfg.lambda = 0.0;
  auto fair = train_fair(data, cfg);
  auto erm = train_erm(data, cfg);
  for (size_t j = 0; j < fair.model.weights.size(); ++j)
    CHECK(fair.model.weights[j] == erm.model.weights[j]);
}

TEST_CASE("fair training reduces the group rate gap") {
  auto data = shifted_groups(6, 800);
  TrainConfig cfg;
  cfg.steps = 800;
  auto erm = train_erm(data, cfg);
  cfg.lambda = 0.9;
  auto fair = train_fair(data, cfg);
  const auto& nr_erm = erm.epochs.back().train.nr;
  const auto& nr_fair = fair.epochs.back().train.nr;
  CHECK(std::abs(nr_fair[0] - nr_fair[1]) < 0.5 * std::abs(nr_erm[0] - nr_erm[1]));
  CHECK(fair.epochs.back().train.ddp < erm.epochs.back().train.ddp);
}

TEST_CASE("sadro with a collapsed ball reproduces the fair trajectory") {
  auto data = shifted_groups(7, 300);
  TrainConfig cfg;
  cfg.steps = 80;
  cfg.lambda = 0.5;

  auto fair = train_fair(data, cfg);

  TrainConfig cfg0 = cfg;
  cfg0.dro = DroConfig::constrained(0.0);
  auto pinned = train_sadro(data, cfg0, nullptr);
  for (size_t j = 0; j < fair.model.weights.size(); ++j)
    CHECK(pinned.model.weights[j] == fair.model.weights[j]);

  // A zero lagrangian coefficient disables the ascent and pins q to the
  // anchor, reproducing the fair trajectory exactly.
  TrainConfig cfgz = cfg;
  cfgz.dro = DroConfig::lagrangian(0.0);
  Trainer a(data, cfg);
  Trainer b(data, cfgz);
  for (int t = 0; t < cfg.steps; ++t) {
    a.step();
    b.step();
    double dw = 0.0;
    for (size_t j = 0; j < a.model().weights.size(); ++j)
      dw = std::max(dw, std::abs(a.model().weights[j] - b.model().weights[j]));
    CHECK(dw == 0.0);
    double dq = 0.0;
    for (size_t s = 0; s < b.q().size(); ++s)
      dq = std::max(dq, std::abs(b.q()[s] - data.group_frequencies()[s]));
    CHECK(dq == 0.0);
  }
}

TEST_CASE("sadro trace keeps q feasible") {
  auto data = shifted_groups(8, 300);
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.lambda = 0.9;
  cfg.dro = DroConfig::constrained(0.2);
  auto trace = train_sadro(data, cfg);
  const Vec anchor = data.group_frequencies();
  for (const auto& e : trace.epochs) {
    double sum = 0.0;
    for (double x : e.q) {
      CHECK(x >= -1e-12);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(chi2_divergence(e.q, anchor) <= cfg.dro.delta + 1e-9);
  }

  cfg.dro = DroConfig::lagrangian(0.9);
  auto ltrace = train_sadro(data, cfg);
  for (const auto& e : ltrace.epochs) {
    double sum = 0.0;
    for (double x : e.q) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  TrainConfig off;
  CHECK_THROWS_AS(train_sadro(data, off), InvalidInput);
}

TEST_CASE("sadro moves q away from the anchor under group loss imbalance") {
  auto data = shifted_groups(9, 500);
  TrainConfig cfg;
  cfg.steps = 400;
  cfg.lambda = 0.9;
  cfg.dro = DroConfig::lagrangian(0.5);
  auto trace = train_sadro(data, cfg);
  const Vec anchor = data.group_frequencies();
  const Vec qT = trace.epochs.back().q;
  CHECK(chi2_divergence(qT, anchor) > 1e-4);
}

TEST_CASE("minibatch mode stays deterministic") {
  auto data = shifted_groups(10, 400);
  TrainConfig cfg;
  cfg.steps = 60;
  cfg.batch = 64;
  cfg.seed = 77;
  auto t1 = train_erm(data, cfg);
  auto t2 = train_erm(data, cfg);
  CHECK(t1.digest() == t2.digest());
}

TEST_CASE("diverged training reports the epoch") {
  // Legal (finite) but extreme feature scale overflows the first update.
  Mat f(4, 1);
  f.at(0, 0) = 1e154;
  f.at(1, 0) = -1e154;
  f.at(2, 0) = 1e154;
  f.at(3, 0) = -1e154;
  auto data = Dataset::make(f, {1, 0, 1, 0}, {0, 0, 1, 1});
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.step_w = 1e160;
  try {
    train_erm(data, cfg);
    FAIL("expected divergence");
  } catch (const DivergedTraining& e) {
    CHECK(e.epoch >= 0);
  }
}
