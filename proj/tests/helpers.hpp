// Shared oracles and generators for the test suites. Everything here is
// deliberately independent of the library implementation paths it checks:
// brute-force summations, closed forms, finite differences, enumeration.
#ifndef FAIRLAB_TESTS_HELPERS_HPP
#define FAIRLAB_TESTS_HELPERS_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fairlab/core.hpp"

namespace testutil {

using fairlab::DiscreteJoint;
using fairlab::Mat;
using fairlab::Vec;

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

// Symmetric Dirichlet(1) over all cells of a (y,s) joint.
inline DiscreteJoint random_ys_joint(std::mt19937_64& g, int ny, int ns) {
  std::exponential_distribution<double> expo(1.0);
  Vec p(static_cast<size_t>(ny) * ns);
  double sum = 0.0;
  for (double& v : p) {
    v = expo(g);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return DiscreteJoint::make(1, ny, ns, std::move(p));
}

// Product joint of independently sampled marginals.
inline DiscreteJoint independent_ys_joint(std::mt19937_64& g, int ny, int ns) {
  std::exponential_distribution<double> expo(1.0);
  Vec py(ny), ps(ns);
  double sy = 0.0, ss = 0.0;
  for (double& v : py) {
    v = expo(g);
    sy += v;
  }
  for (double& v : ps) {
    v = expo(g);
    ss += v;
  }
  Vec p(static_cast<size_t>(ny) * ns);
  for (int y = 0; y < ny; ++y)
    for (int s = 0; s < ns; ++s) p[static_cast<size_t>(y) * ns + s] = (py[y] / sy) * (ps[s] / ss);
  return DiscreteJoint::make(1, ny, ns, std::move(p));
}

// Cell-wise KL(P_{Y,S} || P_Y x P_S), an oracle for mutual information.
inline double brute_force_kl_nats(const DiscreteJoint& j) {
  const Vec py = j.marginal_y();
  const Vec ps = j.marginal_s();
  double kl = 0.0;
  for (int y = 0; y < j.ny; ++y)
    for (int s = 0; s < j.ns; ++s) {
      const double p = j.p(0, y, s);
      if (p > 0.0) kl += p * std::log(p / (py[y] * ps[s]));
    }
  return kl;
}

// |Pearson correlation| of the 0/1-coded variables of a binary x binary joint.
inline double binary_pearson_abs(const DiscreteJoint& j) {
  const double p11 = j.p(0, 1, 1);
  const double py = j.marginal_y()[1];
  const double ps = j.marginal_s()[1];
  const double cov = p11 - py * ps;
  const double denom = std::sqrt(py * (1 - py) * ps * (1 - ps));
  return denom > 0.0 ? std::abs(cov) / denom : 0.0;
}

// Central finite difference of a scalar function of a vector.
inline Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x,
                             double step = 1e-5) {
  Vec g(x.size());
  Vec xp = x;
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + step;
    const double up = f(xp);
    xp[i] = orig - step;
    const double dn = f(xp);
    xp[i] = orig;
    g[i] = (up - dn) / (2.0 * step);
  }
  return g;
}

inline double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_rel_err(const Vec& got, const Vec& want) {
  double scale = 1.0;
  for (double w : want) scale = std::max(scale, std::abs(w));
  double err = 0.0;
  for (size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
  return err / scale;
}

}  // namespace testutil

#endif
