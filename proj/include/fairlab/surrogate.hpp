#ifndef FAIRLAB_SURROGATE_HPP
#define FAIRLAB_SURROGATE_HPP

#include "fairlab/core.hpp"
#include "fairlab/measures.hpp"

namespace fairlab::surrogate {

using measures::DependenceKind;

double sigmoid(double t);
// Binary cross-entropy of sigmoid(score) against a 0/1 label, evaluated in
// the numerically stable softplus form.
double bce_loss(double score, int label);

// Sigmoid-smoothed group rates r_s = (1/n_s) sum_{i: s_i=s} sigmoid(f(x_i)/h).
struct SoftGroupStats {
  Vec soft_rate;
  double overall = 0.0;  // sum_s weight_s * r_s
  double bandwidth = 0.0;
};

SoftGroupStats soft_group_rates(const ScoreModel& model, const Dataset& data, double h,
                                const Vec& weights);

struct PenaltyEval {
  double value = 0.0;
  Vec grad_w;
  bool has_grad_q = false;
  Vec grad_q;
};

// Differentiable dependence penalty between the smoothed prediction variable
// and S. Group weights come from `q` when supplied, otherwise from the
// empirical sensitive marginal. Supported kinds: DDP, MutualInformation,
// ERMI, MaximalCorrelation.
PenaltyEval penalty(DependenceKind kind, const ScoreModel& model, const Dataset& data,
                    double h, const SimplexWeights* q = nullptr);

enum class WeightMode { ratio, literal };

struct RiskEval {
  double value = 0.0;
  Vec grad_w;
  Vec grad_q;
};

// Group-weighted cross-entropy risk. literal uses per-sample weight q_{s_i}/n;
// ratio uses q_{s_i}/(n p_{s_i}) so q = p recovers the unweighted risk.
RiskEval weighted_risk(const ScoreModel& model, const Dataset& data, const Vec& q,
                       WeightMode mode);

// Unweighted mean cross-entropy and its weight gradient.
RiskEval mean_risk(const ScoreModel& model, const Dataset& data);

}  // namespace fairlab::surrogate

#endif
