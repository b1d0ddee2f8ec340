#ifndef FAIRLAB_ORACLE_HPP
#define FAIRLAB_ORACLE_HPP

#include <random>
#include <string>

#include "fairlab/core.hpp"
#include "fairlab/lp.hpp"
#include "fairlab/measures.hpp"

namespace fairlab::oracle {

using measures::DependenceKind;

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

// Joint of (prediction, S) induced by running the policy on the joint's
// (X, S) marginal.
DiscreteJoint induced_prediction_joint(const DiscreteJoint& joint, const Policy& policy);

// Expected 0/1 loss of a policy against deterministic labels.
double policy_01_risk(const DiscreteJoint& joint, const Policy& policy);

// E_{P_{X,S}}[ TV(Q_{.|x,s}, P_{Y|x,s}) ]; the 0/1 risk generalized to
// nondeterministic labels.
double policy_tv_risk(const DiscreteJoint& joint, const Policy& policy);

// Policy carrying no dependence on S: each (x,s) cell predicts from the
// optimal coupling between P_{Y|s} and P_{Y|s_max}. Its induced conditional
// P_{Yhat|s} equals P_{Y|s_max} for every s. Requires deterministic labels.
Policy independence_witness_policy(const DiscreteJoint& joint);

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

struct JointSpec {
  int nx = 3;
  int ny = 2;
  int ns = 2;
  double p_majority_lo = 0.55;
  double p_majority_hi = 0.95;
  bool deterministic = true;
};

// Dirichlet(1) cells per sensitive outcome, majority mass on s = 0, optional
// argmax-collapse of the label conditionals.
DiscreteJoint random_joint(const JointSpec& spec, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Solvers for the constrained classification problems
// ---------------------------------------------------------------------------

struct PolicySolution {
  Policy policy;
  double risk = 0.0;        // recomputed from the policy, not read off the solver
  double lp_value = 0.0;    // solver objective
  double duality_gap = 0.0;
  double certificate_residual = 0.0;
};

// 0/1-risk-optimal policy under DDP(Yhat, S) <= eps (deterministic labels).
PolicySolution optimal_fair_policy_ddp(const DiscreteJoint& joint, double eps);

// TV-risk-optimal policy under a DDP or rho_TV constraint (any labels).
PolicySolution optimal_fair_policy_tv(const DiscreteJoint& joint, DependenceKind measure,
                                      double eps);

struct ConvexSolution {
  Policy policy;
  double risk = 0.0;
  double constraint_value = 0.0;  // exact re-evaluation on the induced joint
  double violation = 0.0;
  int outer_rounds = 0;
};

// 0/1-risk minimization under a smooth dependence constraint
// (MutualInformation in bits, ERMI, or MaximalCorrelation), via an exterior
// quadratic penalty with projected gradient descent and backtracking.
ConvexSolution solve_convex_constrained(const DiscreteJoint& joint, DependenceKind kind,
                                        double eps);

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

struct TheoremReport {
  double epsilon = 0.0;
  double delta_majority = 0.0;
  double bound = 0.0;
  double observed = 0.0;
  bool satisfied = false;
  bool applicable = true;
  bool used_witness = false;  // theorem-2 near-miss fallback engaged
  Vec per_s;                  // per-group TV distances
};

TheoremReport verify_theorem1(const DiscreteJoint& joint, double eps);
TheoremReport verify_theorem2(const DiscreteJoint& joint, DependenceKind kind, double eps);

// ---------------------------------------------------------------------------
// Ratio-structured joints and the perturbed-ratio bound
// ---------------------------------------------------------------------------

struct Remark1Instance {
  DiscreteJoint joint;
  Mat phi_low;    // |X| x |Y| envelope of the conditional ratios over s
  Mat phi_high;
  Mat delta;      // phi_high - phi_low
  double eta = 0.0;

  // max_{x,y} Delta(x,y); zero iff the ratio property holds exactly.
  double max_delta() const;
};

// X = X-tilde construction: P(x|y) is a two-component mixture whose weights
// are orthogonal to the direction along which P(y|s) varies, so the ratio
// P(x|y,s)/P(x|s) is independent of s. eta applies a bounded multiplicative
// perturbation to P(x|y,s), renormalized per (y,s); P_S and P_{Y|S} are
// preserved exactly.
Remark1Instance make_remark1_joint(int nx, int ny, int ns, uint64_t seed, double eta);

// Exact-ratio case: DDP-constrained TV formulation against the theorem-1 bound.
TheoremReport verify_theorem3(const Remark1Instance& inst, double eps);

// Perturbed case: rho_TV-constrained TV formulation against 2 eps (1 + 1/(2 delta)),
// gated on eps/2 >= E_{P_X x P_{Y|s_max}}[Delta].
TheoremReport verify_theorem4(const Remark1Instance& inst, double eps);

// ---------------------------------------------------------------------------
// Divergence inequality fuzzing
// ---------------------------------------------------------------------------

struct LemmaReport {
  int trials = 0;
  int violations = 0;
  double min_slack_mi = 0.0;
  double min_slack_ermi = 0.0;
  double min_slack_mc = 0.0;
  std::string worst_instance;  // serialized joint attaining the smallest slack
};

LemmaReport check_pinsker_lemmas(int n_trials, uint64_t seed);

// Flat text record: supports, probs, epsilon, policy table; 17 significant
// digits, fixed field order.
std::string serialize_instance(const DiscreteJoint& joint, double eps, const Policy& policy);

}  // namespace fairlab::oracle

#endif
