#ifndef FAIRLAB_TRAINER_HPP
#define FAIRLAB_TRAINER_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fairlab/core.hpp"
#include "fairlab/measures.hpp"
#include "fairlab/surrogate.hpp"

namespace fairlab::trainer {

using measures::DependenceKind;
using surrogate::WeightMode;

struct DroConfig {
  enum class Mode { off, constrained, lagrangian };
  Mode mode = Mode::off;
  double delta = 0.0;  // chi-square ball radius (constrained mode)
  double zeta = 0.0;   // penalty coefficient (lagrangian mode)

  static DroConfig off() { return {}; }
  static DroConfig constrained(double delta) {
    DroConfig d;
    d.mode = Mode::constrained;
    d.delta = delta;
    return d;
  }
  static DroConfig lagrangian(double zeta) {
    DroConfig d;
    d.mode = Mode::lagrangian;
    d.zeta = zeta;
    return d;
  }
};

struct TrainConfig {
  double lambda = 0.0;
  DroConfig dro;
  DependenceKind kind = DependenceKind::DDP;
  int steps = 2000;
  double step_w = 0.05;
  double step_q = 0.01;
  int batch = 0;  // 0 = full batch; otherwise stratified minibatch size
  uint64_t seed = 0;
  WeightMode weight_mode = WeightMode::ratio;
  ScoreModel::Kind model_kind = ScoreModel::Kind::linear;
  int hidden = 16;  // mlp1 only
  // Smoothing bandwidth h = max(bandwidth_scale * std(scores), bandwidth_floor),
  // recomputed every step.
  double bandwidth_scale = 0.1;
  double bandwidth_floor = 0.01;
  int record_every = 1;
};

struct EpochRecord {
  int step = 0;
  double objective = 0.0;  // risk + lambda * penalty at the step start
  MetricsRecord train;
  MetricsRecord eval;
  Vec q;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  ScoreModel model;
  bool has_eval = false;
  bool q_oscillation = false;
  std::vector<std::string> warnings;

  // Order-sensitive digest of the full trace; equal traces agree bit-for-bit.
  uint64_t digest() const;
};

// Euclidean projection of v onto {q on the simplex : chi2(q, anchor) <= delta}.
// Plain simplex projection first; if the ball constraint is violated, bisection
// on the constraint multiplier composed with a weighted simplex projection.
Vec project_chi2_simplex(const Vec& v, const Vec& anchor, double delta);

// Proximal steps for a penalized ascent on the simplex:
// argmin_{q on simplex} ||q - u||^2 + mu * chi2(q, anchor), and the
// squared-distance variant argmin ||q - u||^2 + mu * ||q - anchor||^2 used by
// the lagrangian DRO mode.
Vec prox_chi2_simplex(const Vec& u, const Vec& anchor, double mu);
Vec prox_sqdist_simplex(const Vec& u, const Vec& anchor, double mu);

TrainTrace train_erm(const Dataset& data, TrainConfig config, const Dataset* eval = nullptr);
TrainTrace train_fair(const Dataset& data, TrainConfig config, const Dataset* eval = nullptr);
TrainTrace train_sadro(const Dataset& data, TrainConfig config, const Dataset* eval = nullptr);

// Incremental engine behind the three entry points; also used by the
// federated simulator, which advances client models a few steps at a time.
class Trainer {
 public:
  Trainer(const Dataset& data, TrainConfig config);

  // One descent step on w followed (in DRO modes) by one ascent step on q.
  // Returns the objective value at the step start.
  double step();

  const ScoreModel& model() const { return model_; }
  void set_model(const ScoreModel& m);
  const Vec& q() const { return q_; }
  int steps_done() const { return steps_done_; }
  const TrainConfig& config() const { return config_; }

 private:
  const Dataset& data_;
  TrainConfig config_;
  ScoreModel model_;
  Vec q_;
  Vec anchor_;
  std::mt19937_64 rng_;
  int steps_done_ = 0;
};

MetricsRecord evaluate_model(const ScoreModel& model, const Dataset& data);

}  // namespace fairlab::trainer

#endif
