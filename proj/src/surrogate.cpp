#include "fairlab/surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace fairlab::surrogate {

namespace {

double sign(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

void check_weights(const Vec& w, int k) {
  if (static_cast<int>(w.size()) != k)
    throw InvalidInput("surrogate: weight vector length mismatch");
  double sum = 0.0;
  for (double v : w) {
    if (v < -1e-12) throw InvalidInput("surrogate: negative group weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidInput("surrogate: group weights not normalized");
}

// Scores, smoothed probabilities and their score-derivatives for all samples.
struct SoftEval {
  Vec score;
  Vec prob;    // sigmoid(score / h)
  Vec dprob;   // d prob / d score
};

SoftEval soft_eval(const ScoreModel& model, const Dataset& data, double h) {
  SoftEval e;
  e.score = model.scores(data);
  e.prob.resize(e.score.size());
  e.dprob.resize(e.score.size());
  for (size_t i = 0; i < e.score.size(); ++i) {
    const double p = sigmoid(e.score[i] / h);
    e.prob[i] = p;
    e.dprob[i] = p * (1.0 - p) / h;
  }
  return e;
}

// grad_w accumulation of sum_i coeff_i * d f(x_i) / d w, in fixed index order.
Vec accumulate_score_grads(const ScoreModel& model, const Dataset& data, const Vec& coeff) {
  Vec total(model.weights.size(), 0.0);
  Vec g;
  for (int i = 0; i < data.n(); ++i) {
    if (coeff[i] == 0.0) continue;
    model.score_grad(data.features.a.data() + static_cast<size_t>(i) * data.dim(), g);
    for (size_t j = 0; j < total.size(); ++j) total[j] += coeff[i] * g[j];
  }
  return total;
}

}  // namespace

double sigmoid(double t) {
  if (t >= 0.0) {
    const double z = std::exp(-t);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(t);
  return z / (1.0 + z);
}

double bce_loss(double score, int label) {
  // log(1 + exp(score)) - label * score, stably.
  return std::max(score, 0.0) + std::log1p(std::exp(-std::abs(score))) -
         label * score;
}

SoftGroupStats soft_group_rates(const ScoreModel& model, const Dataset& data, double h,
                                const Vec& weights) {
  if (h <= 0.0) throw InvalidBandwidth("soft_group_rates: bandwidth must be positive");
  const int k = data.groups();
  check_weights(weights, k);
  const SoftEval e = soft_eval(model, data, h);
  SoftGroupStats stats;
  stats.bandwidth = h;
  stats.soft_rate.assign(k, 0.0);
  for (int i = 0; i < data.n(); ++i) stats.soft_rate[data.sensitive[i]] += e.prob[i];
  for (int s = 0; s < k; ++s) stats.soft_rate[s] /= data.group_counts[s];
  for (int s = 0; s < k; ++s) stats.overall += weights[s] * stats.soft_rate[s];
  return stats;
}

PenaltyEval penalty(DependenceKind kind, const ScoreModel& model, const Dataset& data,
                    double h, const SimplexWeights* q) {
  if (h <= 0.0) throw InvalidBandwidth("penalty: bandwidth must be positive");
  if (kind == DependenceKind::RhoTV)
    throw UnsupportedKind("penalty: rho_tv has no training surrogate");
  const int k = data.groups();
  const Vec weights = q ? q->q : data.group_frequencies();
  check_weights(weights, k);

  const SoftEval e = soft_eval(model, data, h);
  Vec rate(k, 0.0);
  for (int i = 0; i < data.n(); ++i) rate[data.sensitive[i]] += e.prob[i];
  for (int s = 0; s < k; ++s) rate[s] /= data.group_counts[s];

  PenaltyEval out;
  Vec d_rate(k, 0.0);  // d value / d r_s

  if (kind == DependenceKind::DDP) {
    double mean = 0.0;
    for (int s = 0; s < k; ++s) mean += weights[s] * rate[s];
    double sign_sum = 0.0;
    for (int s = 0; s < k; ++s) {
      // y = 1 and y = 0 terms are mirror images of each other.
      out.value += 2.0 * std::abs(rate[s] - mean);
      sign_sum += sign(rate[s] - mean);
    }
    for (int s = 0; s < k; ++s)
      d_rate[s] = 2.0 * (sign(rate[s] - mean) - weights[s] * sign_sum);
    if (q) {
      out.has_grad_q = true;
      out.grad_q.assign(k, 0.0);
      for (int u = 0; u < k; ++u) out.grad_q[u] = -2.0 * rate[u] * sign_sum;
    }
  } else {
    // Soft joint of (smoothed prediction, S) under the chosen group weights.
    Mat ys(2, k);
    for (int s = 0; s < k; ++s) {
      ys.at(1, s) = weights[s] * rate[s];
      ys.at(0, s) = weights[s] * (1.0 - rate[s]);
    }
    const measures::MeasureGrad m = measures::dependence_grad(kind, ys);
    out.value = m.value;
    for (int s = 0; s < k; ++s)
      d_rate[s] = weights[s] * (m.d_joint.at(1, s) - m.d_joint.at(0, s));
    if (q) {
      out.has_grad_q = true;
      out.grad_q.assign(k, 0.0);
      for (int s = 0; s < k; ++s)
        out.grad_q[s] = m.d_joint.at(1, s) * rate[s] + m.d_joint.at(0, s) * (1.0 - rate[s]);
    }
  }

  Vec coeff(data.n());
  for (int i = 0; i < data.n(); ++i) {
    const int s = data.sensitive[i];
    coeff[i] = d_rate[s] * e.dprob[i] / data.group_counts[s];
  }
  out.grad_w = accumulate_score_grads(model, data, coeff);
  return out;
}

RiskEval weighted_risk(const ScoreModel& model, const Dataset& data, const Vec& q,
                       WeightMode mode) {
  const int k = data.groups();
  check_weights(q, k);
  const Vec phat = data.group_frequencies();
  const int n = data.n();
  const Vec score = model.scores(data);

  RiskEval out;
  out.grad_q.assign(k, 0.0);
  Vec coeff(n);
  for (int i = 0; i < n; ++i) {
    const int s = data.sensitive[i];
    const double w =
        mode == WeightMode::literal ? q[s] / n : q[s] / (n * phat[s]);
    const double loss = bce_loss(score[i], data.labels[i]);
    out.value += w * loss;
    coeff[i] = w * (sigmoid(score[i]) - data.labels[i]);
    out.grad_q[s] += mode == WeightMode::literal ? loss / n : loss / (n * phat[s]);
  }
  out.grad_w = accumulate_score_grads(model, data, coeff);
  return out;
}

RiskEval mean_risk(const ScoreModel& model, const Dataset& data) {
  return weighted_risk(model, data, data.group_frequencies(), WeightMode::ratio);
}

}  // namespace fairlab::surrogate
