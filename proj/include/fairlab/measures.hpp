#ifndef FAIRLAB_MEASURES_HPP
#define FAIRLAB_MEASURES_HPP

#include "fairlab/core.hpp"

namespace fairlab::measures {

enum class DependenceKind { DDP, RhoTV, MutualInformation, ERMI, MaximalCorrelation };

const char* kind_name(DependenceKind kind);

enum class LogBase { nat, bit };

// (1/2) sum_i |p_i - q_i|.
double tv_distance(const Vec& p, const Vec& q);

// Coupling with row marginal p and column marginal q whose off-diagonal mass
// equals tv_distance(p, q): diagonal gets min(p_i, q_i), residual mass is
// matched greedily.
Mat optimal_tv_coupling(const Vec& p, const Vec& q);

// sum_{y,s} |P(Y=y|S=s) - P(Y=y)|  =  2 sum_s TV(P_{Y|s}, P_Y).
double ddp(const DiscreteJoint& joint);
double ddp(const Mat& ys);

// sum over populated (y,s) cells of |P(Yhat|Y=y,S=s) - P(Yhat|Y=y)|.
double deo(const std::vector<int>& pred, const std::vector<int>& label,
           const std::vector<int>& sensitive);

// E_{s~P_S}[ TV(P_{Y|s}, P_Y) ].
double rho_tv(const DiscreteJoint& joint);
double rho_tv(const Mat& ys);

// sum p(y,s) log( p(y,s) / (p(y) p(s)) ), with 0 log 0 := 0.
double mutual_information(const DiscreteJoint& joint, LogBase base = LogBase::nat);
double mutual_information(const Mat& ys, LogBase base = LogBase::nat);

// chi-square divergence between P_{Y,S} and P_Y x P_S:
// sum p(y,s)^2 / (p(y) p(s)) - 1.
double ermi(const DiscreteJoint& joint);
double ermi(const Mat& ys);

// Second-largest singular value of B[y,s] = p(y,s) / sqrt(p(y) p(s)),
// computed by deflated power iteration with a deterministic start vector.
double maximal_correlation(const DiscreteJoint& joint);
double maximal_correlation(const Mat& ys);

// Per-group fraction of 0-predictions, NR(s) = P(Yhat=0 | S=s).
Vec negative_rate(const std::vector<int>& pred, const std::vector<int>& sensitive);

// Value of a dependence measure together with its gradient with respect to
// the joint (y,s) table. Used by the differentiable penalties and by the
// constrained policy solver; the maximal-correlation gradient holds the
// current singular pair fixed.
struct MeasureGrad {
  double value = 0.0;
  Mat d_joint;
};

MeasureGrad mutual_information_grad(const Mat& ys, LogBase base = LogBase::nat);
MeasureGrad ermi_grad(const Mat& ys);
MeasureGrad maximal_correlation_grad(const Mat& ys);

// Dispatch over the three smooth kinds above; throws UnsupportedKind otherwise.
MeasureGrad dependence_grad(DependenceKind kind, const Mat& ys);

// Full evaluation metrics for hard predictions against labels and groups.
MetricsRecord evaluate_metrics(const std::vector<int>& pred, const std::vector<int>& label,
                               const std::vector<int>& sensitive);

}  // namespace fairlab::measures

#endif
