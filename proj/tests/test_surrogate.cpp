#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fairlab/measures.hpp"
#include "fairlab/surrogate.hpp"
#include "helpers.hpp"

using namespace fairlab;
using namespace fairlab::surrogate;
using measures::DependenceKind;

namespace {

Dataset random_dataset(uint64_t seed, int n, int d, int k) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::bernoulli_distribution lab(0.5);
  Mat f(n, d);
  for (double& v : f.a) v = nd(g);
  std::vector<int> labels(n), sens(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = lab(g) ? 1 : 0;
    sens[i] = i % k;  // every group populated
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

ScoreModel random_linear(uint64_t seed, int d) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(0.0, 0.7);
  auto m = ScoreModel::linear(d);
  for (double& w : m.weights) w = nd(g);
  return m;
}

}  // namespace

TEST_CASE("soft rates at zero scores are one half") {
  auto data = random_dataset(1, 40, 3, 2);
  auto model = ScoreModel::linear(3);  // all-zero weights
  auto stats = soft_group_rates(model, data, 0.1, data.group_frequencies());
  for (double r : stats.soft_rate) CHECK(r == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats.overall == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("soft rates saturate with extreme scores") {
  // One feature equal to +50 for group 0 and -50 for group 1; identity weight.
  Mat f(4, 1);
  f.at(0, 0) = 50.0;
  f.at(1, 0) = -50.0;
  f.at(2, 0) = 50.0;
  f.at(3, 0) = -50.0;
  auto data = Dataset::make(f, {1, 0, 1, 0}, {0, 1, 0, 1});
  auto model = ScoreModel::linear(1);
  model.weights = {1.0, 0.0};
  auto stats = soft_group_rates(model, data, 0.1, {0.5, 0.5});
  CHECK(stats.soft_rate[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(stats.soft_rate[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("soft rates match a direct summation oracle") {
  auto data = random_dataset(77, 60, 4, 3);
  auto model = random_linear(78, 4);
  const double h = 0.1;
  auto stats = soft_group_rates(model, data, h, data.group_frequencies());
  // Direct re-summation.
  Vec sums(3, 0.0), counts(3, 0.0);
  for (int i = 0; i < data.n(); ++i) {
    double score = model.weights[4];
    for (int j = 0; j < 4; ++j) score += model.weights[j] * data.features.at(i, j);
    sums[data.sensitive[i]] += 1.0 / (1.0 + std::exp(-score / h));
    counts[data.sensitive[i]] += 1.0;
  }
  for (int s = 0; s < 3; ++s)
    CHECK(std::abs(stats.soft_rate[s] - sums[s] / counts[s]) < 1e-12);
  CHECK_THROWS_AS(soft_group_rates(model, data, 0.0, data.group_frequencies()),
                  InvalidBandwidth);
}

TEST_CASE("penalty vanishes for identical score distributions") {
  // Two groups see the exact same feature values.
  Mat f(6, 1);
  const double vals[3] = {-1.0, 0.3, 2.0};
  for (int i = 0; i < 6; ++i) f.at(i, 0) = vals[i / 2];
  auto data = Dataset::make(f, {0, 0, 1, 1, 0, 1}, {0, 1, 0, 1, 0, 1});
  auto model = random_linear(5, 1);
  for (auto kind : {DependenceKind::DDP, DependenceKind::MutualInformation,
                    DependenceKind::ERMI, DependenceKind::MaximalCorrelation}) {
    auto eval = penalty(kind, model, data, 0.25);
    CHECK(eval.value == doctest::Approx(0.0).epsilon(1e-9));
  }
  // DDP subgradient at the tie is exactly zero.
  auto eval = penalty(DependenceKind::DDP, model, data, 0.25);
  CHECK(testutil::max_abs(eval.grad_w) == 0.0);
}

TEST_CASE("penalty grad_w matches finite differences for all kinds") {
  auto data = random_dataset(123, 50, 3, 2);
  auto model = random_linear(124, 3);
  const double h = 0.3;
  for (auto kind : {DependenceKind::DDP, DependenceKind::MutualInformation,
                    DependenceKind::ERMI, DependenceKind::MaximalCorrelation}) {
    auto eval = penalty(kind, model, data, h);
    auto f = [&](const Vec& w) {
      ScoreModel m = model;
      m.weights = w;
      return penalty(kind, m, data, h).value;
    };
    const Vec fd = testutil::finite_difference(f, model.weights, 1e-5);
    CHECK(testutil::max_rel_err(eval.grad_w, fd) < 1e-4);
  }
}

TEST_CASE("penalty grad_q matches finite differences on the simplex tangent") {
  auto data = random_dataset(321, 60, 3, 3);
  auto model = random_linear(322, 3);
  const double h = 0.3;
  auto q = SimplexWeights::at_anchor({0.5, 0.3, 0.2}, 0.5);
  q.q = {0.4, 0.35, 0.25};
  for (auto kind : {DependenceKind::DDP, DependenceKind::MutualInformation,
                    DependenceKind::ERMI, DependenceKind::MaximalCorrelation}) {
    auto eval = penalty(kind, model, data, h, &q);
    REQUIRE(eval.has_grad_q);
    for (int i = 0; i + 1 < 3; ++i) {
      // direction e_i - e_{i+1} stays on the simplex
      const double eps = 1e-6;
      auto value_at = [&](double t) {
        SimplexWeights qq = q;
        qq.q[i] += t;
        qq.q[i + 1] -= t;
        return penalty(kind, model, data, h, &qq).value;
      };
      const double fd = (value_at(eps) - value_at(-eps)) / (2.0 * eps);
      const double analytic = eval.grad_q[i] - eval.grad_q[i + 1];
      CHECK(std::abs(fd - analytic) < 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("weighted risk recovers the unweighted risk at the anchor") {
  auto data = random_dataset(55, 80, 4, 2);
  auto model = random_linear(56, 4);
  const Vec phat = data.group_frequencies();

  auto ratio = weighted_risk(model, data, phat, WeightMode::ratio);
  double mean_ce = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double score = model.weights[4];
    for (int j = 0; j < 4; ++j) score += model.weights[j] * data.features.at(i, j);
    const double p = 1.0 / (1.0 + std::exp(-score));
    mean_ce += -(data.labels[i] * std::log(p) + (1 - data.labels[i]) * std::log(1 - p));
  }
  mean_ce /= data.n();
  CHECK(ratio.value == doctest::Approx(mean_ce).epsilon(1e-10));

  // literal mode at the anchor: sum_s phat_s^2 * (mean loss within group s)
  auto literal = weighted_risk(model, data, phat, WeightMode::literal);
  Vec group_loss(2, 0.0);
  for (int i = 0; i < data.n(); ++i) {
    double score = model.weights[4];
    for (int j = 0; j < 4; ++j) score += model.weights[j] * data.features.at(i, j);
    group_loss[data.sensitive[i]] += bce_loss(score, data.labels[i]);
  }
  double expected = 0.0;
  for (int s = 0; s < 2; ++s)
    expected += phat[s] * phat[s] * (group_loss[s] / data.group_counts[s]);
  CHECK(literal.value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("weighted risk gradients match finite differences") {
  auto data = random_dataset(91, 40, 3, 3);
  auto model = random_linear(92, 3);
  const Vec q = {0.5, 0.25, 0.25};
  for (auto mode : {WeightMode::ratio, WeightMode::literal}) {
    auto eval = weighted_risk(model, data, q, mode);
    auto f = [&](const Vec& w) {
      ScoreModel m = model;
      m.weights = w;
      return weighted_risk(m, data, q, mode).value;
    };
    const Vec fd = testutil::finite_difference(f, model.weights, 1e-5);
    CHECK(testutil::max_rel_err(eval.grad_w, fd) < 1e-4);
    // grad_q along simplex tangents
    for (int i = 0; i + 1 < 3; ++i) {
      const double eps = 1e-6;
      auto value_at = [&](double t) {
        Vec qq = q;
        qq[i] += t;
        qq[i + 1] -= t;
        return weighted_risk(model, data, qq, mode).value;
      };
      const double fdq = (value_at(eps) - value_at(-eps)) / (2.0 * eps);
      CHECK(std::abs(fdq - (eval.grad_q[i] - eval.grad_q[i + 1])) < 1e-6);
    }
  }
}

TEST_CASE("ddp surrogate approaches the hard ddp as h shrinks") {
  auto data = random_dataset(1, 120, 3, 2);
  auto model = random_linear(10001, 3);
  // Drop samples with near-zero scores so that the hard limit is clean.
  const Vec scores = model.scores(data);
  std::vector<int> keep;
  for (int i = 0; i < data.n(); ++i)
    if (std::abs(scores[i]) > 0.2) keep.push_back(i);
  Mat f(static_cast<int>(keep.size()), 3);
  std::vector<int> labels, sens;
  for (size_t r = 0; r < keep.size(); ++r) {
    for (int j = 0; j < 3; ++j) f.at(static_cast<int>(r), j) = data.features.at(keep[r], j);
    labels.push_back(data.labels[keep[r]]);
    sens.push_back(data.sensitive[keep[r]]);
  }
  auto trimmed = Dataset::make(std::move(f), std::move(labels), std::move(sens));
  const double hard = measures::ddp(
      empirical_joint(model.predict(trimmed), trimmed.sensitive));
  double prev = 1e9;
  for (double h : {1.0, 0.1, 0.01}) {
    const double gap = std::abs(penalty(DependenceKind::DDP, model, trimmed, h).value - hard);
    CHECK(gap <= prev + 1e-12);
    prev = gap;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("unsupported penalty kind") {
  auto data = random_dataset(71, 20, 2, 2);
  auto model = random_linear(72, 2);
  CHECK_THROWS_AS(penalty(DependenceKind::RhoTV, model, data, 0.1), UnsupportedKind);
}
