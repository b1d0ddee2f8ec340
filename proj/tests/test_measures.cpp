#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairlab/measures.hpp"
#include "helpers.hpp"

using namespace fairlab;
using namespace fairlab::measures;
using testutil::independent_ys_joint;
using testutil::random_ys_joint;

namespace {

DiscreteJoint ys_equal_uniform() {
  // Y = S, binary uniform.
  return DiscreteJoint::make(1, 2, 2, {0.5, 0.0, 0.0, 0.5});
}

}  // namespace

TEST_CASE("tv distance") {
  CHECK(tv_distance({1.0, 0.0}, {1.0, 0.0}) == 0.0);
  CHECK(tv_distance({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  CHECK(tv_distance({0.7, 0.3}, {0.4, 0.6}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(tv_distance({1.0}, {0.5, 0.5}), InvalidInput);
  CHECK_THROWS_AS(tv_distance({0.7, 0.7}, {0.5, 0.5}), InvalidInput);
}

TEST_CASE("optimal tv coupling") {
  auto diag = optimal_tv_coupling({0.3, 0.7}, {0.3, 0.7});
  CHECK(diag.at(0, 0) == doctest::Approx(0.3));
  CHECK(diag.at(1, 1) == doctest::Approx(0.7));
  CHECK(diag.at(0, 1) == 0.0);
  CHECK(diag.at(1, 0) == 0.0);

  auto swap = optimal_tv_coupling({1.0, 0.0}, {0.0, 1.0});
  CHECK(swap.at(0, 1) == doctest::Approx(1.0));
  CHECK(swap.at(0, 0) == 0.0);
  CHECK(swap.at(1, 0) == 0.0);
  CHECK(swap.at(1, 1) == 0.0);

  auto g = testutil::rng(31337);
  std::exponential_distribution<double> expo(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(g() % 5);
    Vec p(n), q(n);
    double sp = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      p[i] = expo(g);
      q[i] = expo(g);
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    auto m = optimal_tv_coupling(p, q);
    double off = 0.0;
    Vec rows(n, 0.0), cols(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        rows[i] += m.at(i, j);
        cols[j] += m.at(i, j);
        if (i != j) off += m.at(i, j);
      }
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(rows[i] - p[i]) < 1e-10);
      CHECK(std::abs(cols[i] - q[i]) < 1e-10);
    }
    CHECK(std::abs(off - tv_distance(p, q)) < 1e-10);
  }
}

TEST_CASE("ddp examples") {
  auto g = testutil::rng(11);
  CHECK(ddp(independent_ys_joint(g, 2, 2)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ddp(ys_equal_uniform()) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(ddp(DiscreteJoint::unchecked(1, 2, 2, {0.5, 0.0, 0.5, 0.0})), EmptyGroup);
}

TEST_CASE("deo examples") {
  // Perfect predictor.
  std::vector<int> y = {0, 1, 0, 1, 1, 0, 1, 0};
  std::vector<int> s = {0, 0, 1, 1, 0, 1, 0, 1};
  CHECK(deo(y, y, s) == 0.0);

  // Prediction independent of everything, uniform.
  std::vector<int> pred(16), lab(16), grp(16);
  for (int i = 0; i < 16; ++i) {
    pred[i] = i % 2;
    lab[i] = (i / 2) % 2;
    grp[i] = (i / 4) % 2;
  }
  CHECK(deo(pred, lab, grp) == doctest::Approx(0.0).epsilon(1e-12));

  // Yhat = S with Y independent of (S, Yhat): each label slice contributes 2.
  for (int i = 0; i < 16; ++i) {
    grp[i] = i % 2;
    pred[i] = grp[i];
    lab[i] = (i / 2) % 2;
  }
  CHECK(deo(pred, lab, grp) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("rho_tv examples and relation to ddp") {
  auto g = testutil::rng(12);
  CHECK(rho_tv(independent_ys_joint(g, 3, 2)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rho_tv(ys_equal_uniform()) == doctest::Approx(0.5).epsilon(1e-12));
  for (int trial = 0; trial < 100; ++trial) {
    const int ny = 2 + static_cast<int>(g() % 3);
    const int ns = 2 + static_cast<int>(g() % 3);
    auto j = random_ys_joint(g, ny, ns);
    CHECK(rho_tv(j) <= ddp(j) / 2.0 + 1e-12);
  }
}

TEST_CASE("mutual information") {
  auto g = testutil::rng(13);
  CHECK(mutual_information(independent_ys_joint(g, 2, 3)) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(mutual_information(ys_equal_uniform(), LogBase::nat) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mutual_information(ys_equal_uniform(), LogBase::bit) ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (int trial = 0; trial < 100; ++trial) {
    auto j = random_ys_joint(g, 2 + trial % 3, 2 + trial % 2);
    CHECK(mutual_information(j) ==
          doctest::Approx(testutil::brute_force_kl_nats(j)).epsilon(1e-10));
  }
}

TEST_CASE("ermi") {
  auto g = testutil::rng(14);
  CHECK(ermi(independent_ys_joint(g, 2, 2)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ermi(ys_equal_uniform()) == doctest::Approx(1.0).epsilon(1e-12));
  for (int trial = 0; trial < 200; ++trial) {
    auto j = random_ys_joint(g, 2 + trial % 3, 2 + (trial / 2) % 3);
    const double e = ermi(j);
    CHECK(e >= 0.0);
    const double t = 2.0 * rho_tv(j);
    if (t <= 1.0) CHECK(e >= t * t - 1e-9);
  }
}

TEST_CASE("maximal correlation") {
  auto g = testutil::rng(15);
  CHECK(maximal_correlation(independent_ys_joint(g, 2, 2)) ==
        doctest::Approx(0.0).epsilon(1e-8));
  CHECK(maximal_correlation(ys_equal_uniform()) == doctest::Approx(1.0).epsilon(1e-9));
  for (int trial = 0; trial < 100; ++trial) {
    auto j = random_ys_joint(g, 2, 2);
    CHECK(std::abs(maximal_correlation(j) - testutil::binary_pearson_abs(j)) < 1e-8);
  }
  // Degenerate marginal.
  CHECK_THROWS_AS(maximal_correlation(DiscreteJoint::unchecked(1, 2, 2, {0.5, 0.5, 0.0, 0.0})),
                  DegenerateMarginal);
}

TEST_CASE("negative rate") {
  auto nr = negative_rate({0, 0, 0, 0}, {0, 1, 0, 1});
  CHECK(nr[0] == 1.0);
  CHECK(nr[1] == 1.0);
  auto nr2 = negative_rate({0, 1, 1, 1}, {0, 0, 1, 1});
  CHECK(nr2[0] == doctest::Approx(0.5));
  CHECK(nr2[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(negative_rate({0, 0}, {0, 2}), EmptyGroup);
}

TEST_CASE("pinsker-type inequalities on random joints") {
  auto g = testutil::rng(1000003);
  constexpr double kLog2e = 1.4426950408889634;
  for (int trial = 0; trial < 1000; ++trial) {
    const int ny = 2 + static_cast<int>(g() % 3);
    const int ns = 2 + static_cast<int>(g() % 3);
    auto j = random_ys_joint(g, ny, ns);
    const double rtv = rho_tv(j);
    const double mi_bits = mutual_information(j, LogBase::bit);
    CHECK(mi_bits - 2.0 * kLog2e * rtv * rtv >= -1e-9);

    const double e = ermi(j);
    const double t = 2.0 * rtv;
    const double h = t <= 1.0 ? t * t : 2.0 * t - 1.0;
    CHECK(e - h >= -1e-9);

    const double r = std::min(ny, ns) - 1;
    CHECK(r * maximal_correlation(j) - e >= -1e-9);
  }
}

TEST_CASE("all measures vanish exactly on factorized joints") {
  auto g = testutil::rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    auto j = independent_ys_joint(g, 2 + trial % 3, 2 + (trial / 3) % 3);
    CHECK(std::abs(ddp(j)) < 1e-10);
    CHECK(std::abs(rho_tv(j)) < 1e-10);
    CHECK(std::abs(mutual_information(j)) < 1e-10);
    CHECK(std::abs(ermi(j)) < 1e-10);
    CHECK(std::abs(maximal_correlation(j)) < 1e-7);
  }
}

TEST_CASE("merging outcomes never increases mi or ermi") {
  auto g = testutil::rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int ny = 3 + static_cast<int>(g() % 2);
    const int ns = 2 + static_cast<int>(g() % 3);
    auto j = random_ys_joint(g, ny, ns);
    // Merge outcomes 0 and 1 of Y.
    Vec merged(static_cast<size_t>(ny - 1) * ns, 0.0);
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) {
        const int ym = y == 0 ? 0 : y - 1;
        merged[static_cast<size_t>(ym) * ns + s] += j.p(0, y, s);
      }
    auto jm = DiscreteJoint::make(1, ny - 1, ns, std::move(merged));
    CHECK(mutual_information(jm) <= mutual_information(j) + 1e-10);
    CHECK(ermi(jm) <= ermi(j) + 1e-10);
  }
}

TEST_CASE("joint-table gradients match finite differences") {
  auto g = testutil::rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    const int ny = 2 + trial % 2;
    const int ns = 2 + (trial / 2) % 2;
    auto j = random_ys_joint(g, ny, ns);
    Mat ys = j.ys_marginal();

    auto check_grad = [&](auto value_fn, const MeasureGrad& got, double tol) {
      auto f = [&](const Vec& flat) {
        Mat m = ys;
        m.a = flat;
        return value_fn(m);
      };
      const Vec fd = testutil::finite_difference(f, ys.a, 1e-7);
      CHECK(testutil::max_rel_err(got.d_joint.a, fd) < tol);
    };

    check_grad([](const Mat& m) { return mutual_information(m, LogBase::nat); },
               mutual_information_grad(ys, LogBase::nat), 1e-5);
    check_grad([](const Mat& m) { return ermi(m); }, ermi_grad(ys), 1e-5);
    check_grad([](const Mat& m) { return maximal_correlation(m); },
               maximal_correlation_grad(ys), 1e-4);
  }
}

TEST_CASE("evaluate_metrics consistency") {
  std::vector<int> pred = {1, 0, 1, 1, 0, 0, 1, 0};
  std::vector<int> lab = {1, 0, 0, 1, 1, 0, 1, 1};
  std::vector<int> sens = {0, 0, 0, 0, 1, 1, 1, 1};
  auto rec = evaluate_metrics(pred, lab, sens);
  // accuracy equals the group-frequency weighted mean of group accuracies
  double acc = 0.0;
  acc += rec.group_accuracy[0] * 0.5 + rec.group_accuracy[1] * 0.5;
  CHECK(rec.accuracy == doctest::Approx(acc).epsilon(1e-12));
  CHECK(rec.nr[0] == doctest::Approx(0.25));
  CHECK(rec.nr[1] == doctest::Approx(0.75));
}
