#include "fairlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fairlab {

namespace {

constexpr double kNormTol = 1e-10;
constexpr double kNegTol = -1e-12;

std::vector<long> histogram(const std::vector<int>& values, int k) {
  std::vector<long> counts(k, 0);
  for (int v : values) counts[v]++;
  return counts;
}

}  // namespace

Vec Dataset::group_frequencies() const {
  Vec f(group_counts.size());
  for (size_t s = 0; s < group_counts.size(); ++s)
    f[s] = static_cast<double>(group_counts[s]) / n();
  return f;
}

Dataset Dataset::make(Mat features, std::vector<int> labels, std::vector<int> sensitive) {
  const size_t n = labels.size();
  if (n == 0) throw InvalidInput("Dataset: empty input");
  if (features.rows != static_cast<int>(n) || sensitive.size() != n)
    throw InvalidInput("Dataset: arrays have mismatched lengths");
  for (double v : features.a)
    if (!std::isfinite(v)) throw InvalidInput("Dataset: non-finite feature value");
  int k = 0;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw InvalidInput("Dataset: labels must be 0/1");
    if (sensitive[i] < 0) throw InvalidInput("Dataset: negative sensitive value");
    k = std::max(k, sensitive[i] + 1);
  }
  auto counts = histogram(sensitive, k);
  for (int s = 0; s < k; ++s)
    if (counts[s] == 0)
      throw EmptyGroup("Dataset: sensitive outcome " + std::to_string(s) + " has no samples");
  Dataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.sensitive = std::move(sensitive);
  d.group_counts = std::move(counts);
  return d;
}

DiscreteJoint DiscreteJoint::unchecked(int nx, int ny, int ns, Vec probs) {
  DiscreteJoint j;
  j.nx = nx;
  j.ny = ny;
  j.ns = ns;
  j.probs = std::move(probs);
  return j;
}

DiscreteJoint DiscreteJoint::make(int nx, int ny, int ns, Vec probs) {
  if (nx < 1 || ny < 2 || ns < 2)
    throw InvalidInput("DiscreteJoint: supports require |X| >= 1, |Y| >= 2, |S| >= 2");
  if (probs.size() != static_cast<size_t>(nx) * ny * ns)
    throw InvalidInput("DiscreteJoint: probs size does not match supports");
  double sum = 0.0;
  for (double& p : probs) {
    if (p < kNegTol || !std::isfinite(p))
      throw InvalidInput("DiscreteJoint: negative or non-finite probability");
    if (p < 0) p = 0.0;
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTol)
    throw InvalidInput("DiscreteJoint: probabilities sum to " + std::to_string(sum));
  // Snap to exact normalization so derived marginals stay clean.
  for (double& p : probs) p /= sum;
  return unchecked(nx, ny, ns, std::move(probs));
}

Vec DiscreteJoint::marginal_x() const {
  Vec m(nx, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) m[x] += p(x, y, s);
  return m;
}

Vec DiscreteJoint::marginal_y() const {
  Vec m(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) m[y] += p(x, y, s);
  return m;
}

Vec DiscreteJoint::marginal_s() const {
  Vec m(ns, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) m[s] += p(x, y, s);
  return m;
}

double DiscreteJoint::p_xs(int x, int s) const {
  double m = 0.0;
  for (int y = 0; y < ny; ++y) m += p(x, y, s);
  return m;
}

Vec DiscreteJoint::cond_y_given_s(int s) const {
  Vec num(ny, 0.0);
  double ps = 0.0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      num[y] += p(x, y, s);
      ps += p(x, y, s);
    }
  if (ps <= 0.0)
    throw EmptyGroup("DiscreteJoint: P(S=" + std::to_string(s) + ") = 0");
  for (double& v : num) v /= ps;
  return num;
}

Vec DiscreteJoint::cond_y_given_xs(int x, int s) const {
  const double mass = p_xs(x, s);
  Vec c(ny);
  if (mass <= 0.0) {
    std::fill(c.begin(), c.end(), 1.0 / ny);
    return c;
  }
  for (int y = 0; y < ny; ++y) c[y] = p(x, y, s) / mass;
  return c;
}

Vec DiscreteJoint::cond_x_given_s(int s) const {
  Vec c(nx, 0.0);
  double ps = 0.0;
  for (int x = 0; x < nx; ++x) {
    c[x] = p_xs(x, s);
    ps += c[x];
  }
  if (ps <= 0.0)
    throw EmptyGroup("DiscreteJoint: P(S=" + std::to_string(s) + ") = 0");
  for (double& v : c) v /= ps;
  return c;
}

Mat DiscreteJoint::ys_marginal() const {
  Mat m(ny, ns);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) m.at(y, s) += p(x, y, s);
  return m;
}

bool DiscreteJoint::is_deterministic_label() const {
  constexpr double tol = 1e-9;
  for (int x = 0; x < nx; ++x)
    for (int s = 0; s < ns; ++s) {
      const double mass = p_xs(x, s);
      if (mass <= 0.0) continue;
      double best = 0.0;
      for (int y = 0; y < ny; ++y) best = std::max(best, p(x, y, s));
      if (best / mass < 1.0 - tol) return false;
    }
  return true;
}

int DiscreteJoint::label_of(int x, int s) const {
  int best = 0;
  double bp = p(x, 0, s);
  for (int y = 1; y < ny; ++y)
    if (p(x, y, s) > bp) {
      bp = p(x, y, s);
      best = y;
    }
  return best;
}

int DiscreteJoint::majority_s() const {
  const Vec ps = marginal_s();
  return static_cast<int>(std::max_element(ps.begin(), ps.end()) - ps.begin());
}

double DiscreteJoint::delta_majority() const {
  const Vec ps = marginal_s();
  return *std::max_element(ps.begin(), ps.end()) - 0.5;
}

Policy Policy::make(int nx, int ny, int ns, Vec table) {
  if (table.size() != static_cast<size_t>(nx) * ny * ns)
    throw InvalidInput("Policy: table size does not match supports");
  Policy q;
  q.nx = nx;
  q.ny = ny;
  q.ns = ns;
  q.table = std::move(table);
  for (int x = 0; x < nx; ++x)
    for (int s = 0; s < ns; ++s) {
      double sum = 0.0;
      for (int y = 0; y < ny; ++y) {
        const double v = q.table[(static_cast<size_t>(x) * ny + y) * ns + s];
        if (v < -1e-12)
          throw InvalidInput("Policy: negative conditional probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInput("Policy: conditional distribution not normalized");
    }
  return q;
}

Policy Policy::uniform(int nx, int ny, int ns) {
  Policy q;
  q.nx = nx;
  q.ny = ny;
  q.ns = ns;
  q.table.assign(static_cast<size_t>(nx) * ny * ns, 1.0 / ny);
  return q;
}

Policy Policy::point_mass(const DiscreteJoint& joint) {
  Policy q;
  q.nx = joint.nx;
  q.ny = joint.ny;
  q.ns = joint.ns;
  q.table.assign(joint.probs.size(), 0.0);
  for (int x = 0; x < joint.nx; ++x)
    for (int s = 0; s < joint.ns; ++s) {
      if (joint.p_xs(x, s) <= 0.0) {
        for (int y = 0; y < joint.ny; ++y) q.q_ref(x, y, s) = 1.0 / joint.ny;
      } else {
        q.q_ref(x, joint.label_of(x, s), s) = 1.0;
      }
    }
  return q;
}

double Policy::q(int x, int y, int s) const {
  const double v = table[(static_cast<size_t>(x) * ny + y) * ns + s];
  return std::clamp(v, 0.0, 1.0);
}

size_t ScoreModel::weight_count(Kind kind, int dim, int hidden) {
  if (kind == Kind::linear) return static_cast<size_t>(dim) + 1;
  return static_cast<size_t>(dim) * hidden + hidden + hidden + 1;
}

ScoreModel ScoreModel::linear(int dim) {
  ScoreModel m;
  m.kind = Kind::linear;
  m.dim = dim;
  m.weights.assign(weight_count(Kind::linear, dim, 0), 0.0);
  return m;
}

ScoreModel ScoreModel::mlp1(int dim, int hidden) {
  ScoreModel m;
  m.kind = Kind::mlp1;
  m.dim = dim;
  m.hidden = hidden;
  m.weights.assign(weight_count(Kind::mlp1, dim, hidden), 0.0);
  return m;
}

double ScoreModel::score(const double* x) const {
  if (kind == Kind::linear) {
    double s = weights[dim];
    for (int j = 0; j < dim; ++j) s += weights[j] * x[j];
    return s;
  }
  // mlp1: weights = [W1 (d*h, row-major by input), b1 (h), w2 (h), b2]
  const double* w1 = weights.data();
  const double* b1 = weights.data() + static_cast<size_t>(dim) * hidden;
  const double* w2 = b1 + hidden;
  const double b2 = w2[hidden];
  double out = b2;
  for (int u = 0; u < hidden; ++u) {
    double z = b1[u];
    for (int j = 0; j < dim; ++j) z += w1[static_cast<size_t>(j) * hidden + u] * x[j];
    out += w2[u] * std::tanh(z);
  }
  return out;
}

double ScoreModel::score_grad(const double* x, Vec& grad) const {
  grad.assign(weights.size(), 0.0);
  if (kind == Kind::linear) {
    for (int j = 0; j < dim; ++j) grad[j] = x[j];
    grad[dim] = 1.0;
    return score(x);
  }
  const double* w1 = weights.data();
  const double* b1 = weights.data() + static_cast<size_t>(dim) * hidden;
  const double* w2 = b1 + hidden;
  const double b2 = w2[hidden];
  const size_t off_b1 = static_cast<size_t>(dim) * hidden;
  const size_t off_w2 = off_b1 + hidden;
  double out = b2;
  for (int u = 0; u < hidden; ++u) {
    double z = b1[u];
    for (int j = 0; j < dim; ++j) z += w1[static_cast<size_t>(j) * hidden + u] * x[j];
    const double t = std::tanh(z);
    const double dz = w2[u] * (1.0 - t * t);
    out += w2[u] * t;
    grad[off_w2 + u] = t;
    grad[off_b1 + u] = dz;
    for (int j = 0; j < dim; ++j) grad[static_cast<size_t>(j) * hidden + u] = dz * x[j];
  }
  grad[off_w2 + hidden] = 1.0;
  return out;
}

Vec ScoreModel::scores(const Dataset& data) const {
  Vec out(data.n());
  for (int i = 0; i < data.n(); ++i)
    out[i] = score(data.features.a.data() + static_cast<size_t>(i) * data.dim());
  return out;
}

std::vector<int> ScoreModel::predict(const Dataset& data) const {
  const Vec f = scores(data);
  std::vector<int> pred(f.size());
  for (size_t i = 0; i < f.size(); ++i) pred[i] = f[i] > 0.0 ? 1 : 0;
  return pred;
}

SimplexWeights SimplexWeights::at_anchor(Vec anchor, double radius) {
  if (radius < 0.0) throw InvalidInput("SimplexWeights: negative radius");
  double sum = 0.0;
  for (double v : anchor) {
    if (v <= 0.0) throw InvalidInput("SimplexWeights: anchor must be strictly positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw InvalidInput("SimplexWeights: anchor off the simplex");
  SimplexWeights w;
  w.q = anchor;
  w.anchor = std::move(anchor);
  w.radius = radius;
  return w;
}

double chi2_divergence(const Vec& q, const Vec& p) {
  if (q.size() != p.size()) throw InvalidInput("chi2_divergence: length mismatch");
  double d = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    if (p[i] <= 0.0) throw InvalidInput("chi2_divergence: reference entry <= 0");
    const double diff = q[i] - p[i];
    d += diff * diff / p[i];
  }
  return d;
}

DiscreteJoint empirical_joint(const std::vector<int>& predictions,
                              const std::vector<int>& sensitive) {
  if (predictions.empty()) throw InvalidInput("empirical_joint: empty input");
  if (predictions.size() != sensitive.size())
    throw InvalidInput("empirical_joint: length mismatch");
  int k = 0;
  for (int s : sensitive) {
    if (s < 0) throw InvalidInput("empirical_joint: negative sensitive value");
    k = std::max(k, s + 1);
  }
  for (int p : predictions)
    if (p != 0 && p != 1) throw InvalidInput("empirical_joint: predictions must be 0/1");
  const size_t n = predictions.size();
  Vec probs(static_cast<size_t>(2) * k, 0.0);
  std::vector<long> counts(k, 0);
  for (size_t i = 0; i < n; ++i) {
    probs[static_cast<size_t>(predictions[i]) * k + sensitive[i]] += 1.0 / n;
    counts[sensitive[i]]++;
  }
  for (int s = 0; s < k; ++s)
    if (counts[s] == 0)
      throw EmptyGroup("empirical_joint: sensitive outcome " + std::to_string(s) +
                       " has no samples");
  return DiscreteJoint::make(1, 2, k, std::move(probs));
}

ValidationReport validate(const DiscreteJoint& joint) {
  ValidationReport report;
  double sum = 0.0;
  bool negative = false;
  for (double p : joint.probs) {
    sum += p;
    if (p < kNegTol) negative = true;
  }
  if (std::abs(sum - 1.0) > kNormTol) {
    std::ostringstream os;
    os << "normalization: probabilities sum to " << sum;
    report.violations.push_back(os.str());
  }
  if (negative) report.violations.push_back("negativity: negative probability entry");
  const Vec ps = joint.marginal_s();
  for (int s = 0; s < joint.ns; ++s)
    if (ps[s] <= 0.0)
      report.violations.push_back("empty-group: P(S=" + std::to_string(s) + ") = 0");
  report.deterministic_label = joint.is_deterministic_label();
  return report;
}

}  // namespace fairlab
