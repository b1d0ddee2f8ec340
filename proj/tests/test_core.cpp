#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fairlab/core.hpp"
#include "helpers.hpp"

using namespace fairlab;

TEST_CASE("empirical_joint basic counts") {
  auto j = empirical_joint({1, 1}, {0, 1});
  CHECK(j.p(0, 1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j.p(0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j.p(0, 0, 0) == 0.0);
  CHECK(j.p(0, 0, 1) == 0.0);

  auto u = empirical_joint({0, 1, 0, 1}, {0, 0, 1, 1});
  for (int y = 0; y < 2; ++y)
    for (int s = 0; s < 2; ++s) CHECK(u.p(0, y, s) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("empirical_joint coin flips land near uniform") {
  std::mt19937_64 g(20240517);
  std::bernoulli_distribution coin(0.5);
  const int n = 1000;
  std::vector<int> preds(n), sens(n);
  for (int i = 0; i < n; ++i) {
    preds[i] = coin(g) ? 1 : 0;
    sens[i] = i % 2;  // balanced groups
  }
  // Independent oracle: direct counting.
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i < n; ++i) counts[preds[i]][sens[i]] += 1.0 / n;
  auto j = empirical_joint(preds, sens);
  for (int y = 0; y < 2; ++y)
    for (int s = 0; s < 2; ++s) {
      CHECK(j.p(0, y, s) == doctest::Approx(counts[y][s]).epsilon(1e-12));
      CHECK(std::abs(j.p(0, y, s) - 0.25) < 0.05);
    }
}

TEST_CASE("empirical_joint errors") {
  CHECK_THROWS_AS(empirical_joint({}, {}), InvalidInput);
  CHECK_THROWS_AS(empirical_joint({0, 1}, {0, 2}), EmptyGroup);  // group 1 missing
  CHECK_THROWS_AS(empirical_joint({0, 2}, {0, 1}), InvalidInput);
}

TEST_CASE("empirical_joint marginalization reproduces histograms") {
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> group(0, 3);
  std::bernoulli_distribution coin(0.3);
  const int n = 400;
  std::vector<int> preds(n), sens(n);
  std::vector<long> hist(4, 0);
  long ones = 0;
  for (int i = 0; i < n; ++i) {
    preds[i] = coin(g) ? 1 : 0;
    sens[i] = group(g);
    hist[sens[i]]++;
    ones += preds[i];
  }
  if (hist[0] == 0 || hist[1] == 0 || hist[2] == 0 || hist[3] == 0) return;
  auto j = empirical_joint(preds, sens);
  const Vec ps = j.marginal_s();
  const Vec py = j.marginal_y();
  for (int s = 0; s < 4; ++s)
    CHECK(ps[s] * n == doctest::Approx(static_cast<double>(hist[s])).epsilon(1e-12));
  CHECK(py[1] * n == doctest::Approx(static_cast<double>(ones)).epsilon(1e-12));
}

TEST_CASE("validate reports violations") {
  auto ok = DiscreteJoint::make(1, 2, 2, {0.25, 0.25, 0.25, 0.25});
  auto rep = validate(ok);
  CHECK(rep.ok());

  auto bad = DiscreteJoint::unchecked(1, 2, 2, {0.25, 0.25, 0.25, 0.15});
  auto rep2 = validate(bad);
  REQUIRE(!rep2.ok());
  CHECK(rep2.violations[0].find("normalization") != std::string::npos);

  auto det = DiscreteJoint::make(2, 2, 2, {0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0});
  CHECK(validate(det).deterministic_label);
  CHECK(!validate(ok).deterministic_label);
}

TEST_CASE("marginal chain reconstructs the joint") {
  std::mt19937_64 g(99);
  std::exponential_distribution<double> expo(1.0);
  const int nx = 3, ny = 2, ns = 3;
  Vec p(static_cast<size_t>(nx) * ny * ns);
  double sum = 0.0;
  for (double& v : p) {
    v = expo(g);
    sum += v;
  }
  for (double& v : p) v /= sum;
  auto j = DiscreteJoint::make(nx, ny, ns, p);
  const Vec ps = j.marginal_s();
  for (int s = 0; s < ns; ++s) {
    const Vec pxs = j.cond_x_given_s(s);
    for (int x = 0; x < nx; ++x) {
      const Vec pyxs = j.cond_y_given_xs(x, s);
      for (int y = 0; y < ny; ++y) {
        const double rebuilt = ps[s] * pxs[x] * pyxs[y];
        CHECK(std::abs(rebuilt - j.p(x, y, s)) < 1e-10);
      }
    }
  }
}

TEST_CASE("dataset invariants") {
  Mat f(3, 2);
  f.at(0, 0) = 1.0;
  f.at(1, 1) = -1.0;
  auto d = Dataset::make(f, {0, 1, 1}, {0, 1, 0});
  CHECK(d.n() == 3);
  CHECK(d.groups() == 2);
  CHECK(d.group_counts[0] == 2);
  CHECK(d.group_counts[1] == 1);

  CHECK_THROWS_AS(Dataset::make(Mat(0, 2), {}, {}), InvalidInput);
  CHECK_THROWS_AS(Dataset::make(Mat(2, 1), {0, 1}, {0, 2}), EmptyGroup);
  Mat nan(1, 1);
  nan.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset::make(nan, {0}, {0}), InvalidInput);
}

TEST_CASE("policy normalization and clamping") {
  CHECK_THROWS_AS(Policy::make(1, 2, 1, {0.5, 0.4}), InvalidInput);
  auto q = Policy::make(1, 2, 1, {1.0 + 5e-13, -5e-13});
  CHECK(q.q(0, 1, 0) == 0.0);
  CHECK(q.q(0, 0, 0) <= 1.0);
}

TEST_CASE("score models") {
  auto lin = ScoreModel::linear(3);
  CHECK(lin.weights.size() == 4);
  lin.weights = {1.0, -2.0, 0.5, 0.25};
  const double x[3] = {1.0, 1.0, 2.0};
  CHECK(lin.score(x) == doctest::Approx(1.0 - 2.0 + 1.0 + 0.25));

  auto mlp = ScoreModel::mlp1(3, 4);
  CHECK(mlp.weights.size() == 3 * 4 + 4 + 4 + 1);
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (double& w : mlp.weights) w = nd(g);
  CHECK(std::isfinite(mlp.score(x)));

  // Analytic weight gradient vs central differences.
  Vec grad;
  mlp.score_grad(x, grad);
  auto f = [&](const Vec& w) {
    ScoreModel m = mlp;
    m.weights = w;
    return m.score(x);
  };
  const Vec fd = testutil::finite_difference(f, mlp.weights, 1e-6);
  CHECK(testutil::max_rel_err(grad, fd) < 1e-7);
}

TEST_CASE("chi2 divergence") {
  CHECK(chi2_divergence({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(chi2_divergence({0.8, 0.2}, {0.5, 0.5}) ==
        doctest::Approx(0.09 / 0.5 + 0.09 / 0.5));
  CHECK_THROWS_AS(chi2_divergence({1.0, 0.0}, {1.0, 0.0}), InvalidInput);
}
