#include "fairlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace fairlab::trainer {

namespace {

// Weighted simplex projection: argmin sum_s a_s (q_s - z_s)^2 over the simplex,
// solved by bisection on the KKT threshold.
Vec weighted_simplex_projection(const Vec& z, const Vec& a) {
  const int k = static_cast<int>(z.size());
  double lo = 1e300, hi = -1e300;
  for (int s = 0; s < k; ++s) {
    lo = std::min(lo, 2.0 * a[s] * (z[s] - 1.0));
    hi = std::max(hi, 2.0 * a[s] * z[s]);
  }
  auto mass = [&](double tau) {
    double sum = 0.0;
    for (int s = 0; s < k; ++s) sum += std::max(0.0, z[s] - tau / (2.0 * a[s]));
    return sum;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vec q(k);
  double sum = 0.0;
  for (int s = 0; s < k; ++s) {
    q[s] = std::max(0.0, z[s] - tau / (2.0 * a[s]));
    sum += q[s];
  }
  // Snap the (tiny) bisection residue so the output is exactly normalized.
  for (int s = 0; s < k; ++s) q[s] /= sum;
  return q;
}

Vec penalized_projection(const Vec& v, const Vec& anchor, double mu) {
  const int k = static_cast<int>(v.size());
  Vec z(k), a(k);
  for (int s = 0; s < k; ++s) {
    a[s] = 1.0 + mu / anchor[s];
    z[s] = (v[s] + mu) / a[s];
  }
  return weighted_simplex_projection(z, a);
}

void check_anchor(const Vec& anchor) {
  double sum = 0.0;
  for (double p : anchor) {
    if (p <= 0.0) throw InvalidInput("projection: anchor must be strictly positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidInput("projection: anchor off the simplex");
}

double score_std(const Vec& scores) {
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= scores.size();
  double var = 0.0;
  for (double v : scores) var += (v - mean) * (v - mean);
  return std::sqrt(var / scores.size());
}

void fnv_append(uint64_t& h, const void* data, size_t bytes) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

void fnv_append_vec(uint64_t& h, const Vec& v) {
  if (!v.empty()) fnv_append(h, v.data(), v.size() * sizeof(double));
}

}  // namespace

Vec project_chi2_simplex(const Vec& v, const Vec& anchor, double delta) {
  if (v.size() != anchor.size()) throw InvalidInput("project_chi2_simplex: length mismatch");
  check_anchor(anchor);
  if (delta < 0.0) throw InvalidInput("project_chi2_simplex: negative radius");
  if (delta == 0.0) return anchor;

  Vec q = penalized_projection(v, anchor, 0.0);  // plain simplex projection
  if (chi2_divergence(q, anchor) <= delta) return q;

  // Bracket the constraint multiplier, then bisect to the ball boundary.
  double mu_lo = 0.0, mu_hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    q = penalized_projection(v, anchor, mu_hi);
    if (chi2_divergence(q, anchor) <= delta) break;
    mu_lo = mu_hi;
    mu_hi *= 2.0;
  }
  Vec feasible = q;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    q = penalized_projection(v, anchor, mid);
    const double c = chi2_divergence(q, anchor);
    if (c <= delta) {
      mu_hi = mid;
      feasible = q;
      if (c >= delta - 1e-9) break;
    } else {
      mu_lo = mid;
    }
  }
  return feasible;
}

Vec prox_chi2_simplex(const Vec& u, const Vec& anchor, double mu) {
  if (u.size() != anchor.size()) throw InvalidInput("prox_chi2_simplex: length mismatch");
  check_anchor(anchor);
  return penalized_projection(u, anchor, mu);
}

Vec prox_sqdist_simplex(const Vec& u, const Vec& anchor, double mu) {
  if (u.size() != anchor.size()) throw InvalidInput("prox_sqdist_simplex: length mismatch");
  check_anchor(anchor);
  const int k = static_cast<int>(u.size());
  Vec z(k), a(k, 1.0 + mu);
  for (int s = 0; s < k; ++s) z[s] = (u[s] + mu * anchor[s]) / (1.0 + mu);
  return weighted_simplex_projection(z, a);
}

MetricsRecord evaluate_model(const ScoreModel& model, const Dataset& data) {
  return measures::evaluate_metrics(model.predict(data), data.labels, data.sensitive);
}

Trainer::Trainer(const Dataset& data, TrainConfig config)
    : data_(data), config_(config), rng_(config.seed) {
  if (config_.lambda < 0.0) throw InvalidInput("Trainer: negative lambda");
  if (config_.steps < 1) throw InvalidInput("Trainer: steps must be positive");
  if (config_.step_w <= 0.0 || config_.step_q <= 0.0)
    throw InvalidInput("Trainer: step sizes must be positive");
  if (config_.model_kind == ScoreModel::Kind::linear) {
    model_ = ScoreModel::linear(data.dim());
  } else {
    model_ = ScoreModel::mlp1(data.dim(), config_.hidden);
    std::normal_distribution<double> init(0.0, 0.1);
    for (double& w : model_.weights) w = init(rng_);
  }
  anchor_ = data.group_frequencies();
  q_ = anchor_;
}

void Trainer::set_model(const ScoreModel& m) {
  if (m.weights.size() != model_.weights.size())
    throw InvalidInput("Trainer: model dimension mismatch");
  model_ = m;
}

double Trainer::step() {
  const bool dro = config_.dro.mode != DroConfig::Mode::off;
  const Dataset* batch = &data_;
  Dataset batch_storage;
  if (config_.batch > 0 && config_.batch < data_.n()) {
    // Stratified draw keeps every group populated.
    std::vector<int> indices;
    indices.reserve(config_.batch);
    std::vector<std::vector<int>> by_group(data_.groups());
    for (int i = 0; i < data_.n(); ++i) by_group[data_.sensitive[i]].push_back(i);
    for (int s = 0; s < data_.groups(); ++s) {
      auto& pool = by_group[s];
      std::shuffle(pool.begin(), pool.end(), rng_);
      const int take = std::max(
          1, static_cast<int>(std::lround(config_.batch * static_cast<double>(pool.size()) /
                                          data_.n())));
      for (int t = 0; t < take && t < static_cast<int>(pool.size()); ++t)
        indices.push_back(pool[t]);
    }
    std::sort(indices.begin(), indices.end());
    Mat f(static_cast<int>(indices.size()), data_.dim());
    std::vector<int> labels, sens;
    for (size_t r = 0; r < indices.size(); ++r) {
      std::memcpy(f.a.data() + r * data_.dim(),
                  data_.features.a.data() + static_cast<size_t>(indices[r]) * data_.dim(),
                  sizeof(double) * data_.dim());
      labels.push_back(data_.labels[indices[r]]);
      sens.push_back(data_.sensitive[indices[r]]);
    }
    batch_storage = Dataset::make(std::move(f), std::move(labels), std::move(sens));
    batch = &batch_storage;
  }

  // Group weights are indexed identically on the batch.
  const Vec& weights = dro ? q_ : anchor_;
  const surrogate::RiskEval risk =
      surrogate::weighted_risk(model_, *batch, weights, config_.weight_mode);

  double objective = risk.value;
  Vec grad_w = risk.grad_w;

  // One smoothing bandwidth per iteration, from the pre-step scores.
  double h = config_.bandwidth_floor;
  if (config_.lambda > 0.0) {
    const Vec scores = model_.scores(*batch);
    h = std::max(config_.bandwidth_scale * score_std(scores), config_.bandwidth_floor);
    SimplexWeights qw;
    const SimplexWeights* qptr = nullptr;
    if (dro) {
      qw.q = q_;
      qw.anchor = anchor_;
      qw.radius = config_.dro.delta;
      qptr = &qw;
    }
    const surrogate::PenaltyEval pen =
        surrogate::penalty(config_.kind, model_, *batch, h, qptr);
    objective += config_.lambda * pen.value;
    for (size_t j = 0; j < grad_w.size(); ++j)
      grad_w[j] += config_.lambda * pen.grad_w[j];
  }

  if (!std::isfinite(objective))
    throw DivergedTraining("training objective diverged", steps_done_);

  for (size_t j = 0; j < model_.weights.size(); ++j) {
    model_.weights[j] -= config_.step_w * grad_w[j];
    if (!std::isfinite(model_.weights[j]))
      throw DivergedTraining("model weights diverged", steps_done_);
  }

  const bool q_frozen =
      config_.dro.mode == DroConfig::Mode::lagrangian && config_.dro.zeta == 0.0;
  if (dro && !q_frozen) {
    // The ascent gradient is evaluated at the just-updated weights.
    const surrogate::RiskEval risk_q =
        surrogate::weighted_risk(model_, *batch, q_, config_.weight_mode);
    Vec grad_q = risk_q.grad_q;
    if (config_.lambda > 0.0) {
      SimplexWeights qw;
      qw.q = q_;
      qw.anchor = anchor_;
      qw.radius = config_.dro.delta;
      const surrogate::PenaltyEval pen =
          surrogate::penalty(config_.kind, model_, *batch, h, &qw);
      for (size_t s = 0; s < grad_q.size(); ++s)
        grad_q[s] += config_.lambda * pen.grad_q[s];
    }
    Vec u(q_.size());
    for (size_t s = 0; s < q_.size(); ++s) u[s] = q_[s] + config_.step_q * grad_q[s];
    if (config_.dro.mode == DroConfig::Mode::constrained) {
      q_ = project_chi2_simplex(u, anchor_, config_.dro.delta);
    } else if (config_.dro.zeta > 0.0) {
      // Lagrangian mode: ascent on <q, g> - ||q - anchor||^2 / (12 zeta).
      // zeta scales the worst-case strength; zero disables the ascent and
      // pins q to the anchor.
      q_ = prox_sqdist_simplex(u, anchor_, config_.step_q / (6.0 * config_.dro.zeta));
    }
  }

  ++steps_done_;
  return objective;
}

namespace {

TrainTrace run_training(const Dataset& data, const TrainConfig& config, const Dataset* eval) {
  TrainTrace trace;
  if (config.lambda > 1.0)
    trace.warnings.push_back("lambda > 1 is outside the usual sweep range");
  Trainer trainer(data, config);
  trace.has_eval = eval != nullptr;
  Vec prev_q = trainer.q();
  for (int t = 0; t < config.steps; ++t) {
    prev_q = trainer.q();
    const double objective = trainer.step();
    if (config.record_every > 0 &&
        (t % config.record_every == 0 || t == config.steps - 1)) {
      EpochRecord rec;
      rec.step = t;
      rec.objective = objective;
      rec.train = evaluate_model(trainer.model(), data);
      if (eval) rec.eval = evaluate_model(trainer.model(), *eval);
      rec.q = trainer.q();
      trace.epochs.push_back(std::move(rec));
    }
  }
  if (config.dro.mode != DroConfig::Mode::off) {
    double drift = 0.0;
    for (size_t s = 0; s < prev_q.size(); ++s)
      drift = std::max(drift, std::abs(trainer.q()[s] - prev_q[s]));
    trace.q_oscillation = drift > 1e-3;
  }
  trace.model = trainer.model();
  return trace;
}

}  // namespace

TrainTrace train_erm(const Dataset& data, TrainConfig config, const Dataset* eval) {
  config.lambda = 0.0;
  config.dro = DroConfig::off();
  return run_training(data, config, eval);
}

TrainTrace train_fair(const Dataset& data, TrainConfig config, const Dataset* eval) {
  config.dro = DroConfig::off();
  return run_training(data, config, eval);
}

TrainTrace train_sadro(const Dataset& data, TrainConfig config, const Dataset* eval) {
  if (config.dro.mode == DroConfig::Mode::off)
    throw InvalidInput("train_sadro: a DRO mode is required");
  return run_training(data, config, eval);
}

uint64_t TrainTrace::digest() const {
  uint64_t h = 1469598103934665603ull;
  fnv_append_vec(h, model.weights);
  for (const EpochRecord& e : epochs) {
    fnv_append(h, &e.step, sizeof(e.step));
    fnv_append(h, &e.objective, sizeof(e.objective));
    fnv_append(h, &e.train.accuracy, sizeof(double));
    fnv_append(h, &e.train.ddp, sizeof(double));
    fnv_append(h, &e.train.deo, sizeof(double));
    fnv_append_vec(h, e.train.nr);
    fnv_append_vec(h, e.train.group_accuracy);
    if (has_eval) {
      fnv_append(h, &e.eval.accuracy, sizeof(double));
      fnv_append(h, &e.eval.ddp, sizeof(double));
      fnv_append(h, &e.eval.deo, sizeof(double));
      fnv_append_vec(h, e.eval.nr);
      fnv_append_vec(h, e.eval.group_accuracy);
    }
    fnv_append_vec(h, e.q);
  }
  return h;
}

}  // namespace fairlab::trainer
