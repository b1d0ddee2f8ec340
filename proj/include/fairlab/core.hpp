#ifndef FAIRLAB_CORE_HPP
#define FAIRLAB_CORE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fairlab/errors.hpp"

namespace fairlab {

using Vec = std::vector<double>;

// Dense row-major matrix, just enough for the small problems in this library.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// Tabular learning sample: standardized features, binary labels, k-ary
// sensitive attribute. Immutable after construction.
struct Dataset {
  Mat features;                  // n x d
  std::vector<int> labels;       // in {0,1}
  std::vector<int> sensitive;    // in {0,...,k-1}
  std::vector<long> group_counts;  // size k, histogram of `sensitive`

  int n() const { return features.rows; }
  int dim() const { return features.cols; }
  int groups() const { return static_cast<int>(group_counts.size()); }

  // Empirical sensitive-attribute marginal.
  Vec group_frequencies() const;

  // Validates all invariants; throws InvalidInput / EmptyGroup.
  static Dataset make(Mat features, std::vector<int> labels, std::vector<int> sensitive);
};

// Finite joint distribution over (X, Y, S). probs laid out x-major:
// index (x*ny + y)*ns + s.
struct DiscreteJoint {
  int nx = 0;
  int ny = 0;
  int ns = 0;
  Vec probs;

  static DiscreteJoint make(int nx, int ny, int ns, Vec probs);
  // Bypasses validation; used by validate() and by tests that need broken inputs.
  static DiscreteJoint unchecked(int nx, int ny, int ns, Vec probs);

  double p(int x, int y, int s) const {
    return probs[(static_cast<size_t>(x) * ny + y) * ns + s];
  }
  double& p_ref(int x, int y, int s) {
    return probs[(static_cast<size_t>(x) * ny + y) * ns + s];
  }

  Vec marginal_x() const;
  Vec marginal_y() const;
  Vec marginal_s() const;
  double p_xs(int x, int s) const;
  // P(Y=y | S=s); throws EmptyGroup if P(S=s) = 0.
  Vec cond_y_given_s(int s) const;
  // P(Y=y | X=x, S=s); uniform by convention when P(x,s) = 0.
  Vec cond_y_given_xs(int x, int s) const;
  // P(X=x | S=s).
  Vec cond_x_given_s(int s) const;
  // (Y,S) marginal as an ny x ns matrix.
  Mat ys_marginal() const;

  // True iff every positive-mass (x,s) cell puts all conditional label mass
  // on a single outcome.
  bool is_deterministic_label() const;
  // argmax_y P(y|x,s); only meaningful for deterministic-label joints.
  int label_of(int x, int s) const;

  // Index of the most frequent sensitive outcome (ties -> smallest index).
  int majority_s() const;
  // P(S = s_max) - 1/2. Positive iff a strict majority group exists.
  double delta_majority() const;
};

// Conditional distribution table Q(yhat | x, s), same layout as DiscreteJoint.
struct Policy {
  int nx = 0;
  int ny = 0;
  int ns = 0;
  Vec table;

  static Policy make(int nx, int ny, int ns, Vec table);
  static Policy uniform(int nx, int ny, int ns);
  // Point mass on label_of(x,s) for a deterministic-label joint.
  static Policy point_mass(const DiscreteJoint& joint);

  // Entry clamped to [0,1] on read.
  double q(int x, int y, int s) const;
  double& q_ref(int x, int y, int s) {
    return table[(static_cast<size_t>(x) * ny + y) * ns + s];
  }
};

// Parameterized score function; sigmoid(score) is P(Yhat = 1 | x).
struct ScoreModel {
  enum class Kind { linear, mlp1 };

  Kind kind = Kind::linear;
  int dim = 0;     // input dimension d
  int hidden = 0;  // hidden width h (mlp1 only)
  Vec weights;     // linear: d+1 (bias last); mlp1: d*h + h + h + 1

  static ScoreModel linear(int dim);
  static ScoreModel mlp1(int dim, int hidden);
  static size_t weight_count(Kind kind, int dim, int hidden);

  double score(const double* x) const;
  // Score and gradient of the score with respect to the weights.
  double score_grad(const double* x, Vec& grad) const;
  // Scores for every row of a dataset.
  Vec scores(const Dataset& data) const;
  // Hard predictions: score > 0.
  std::vector<int> predict(const Dataset& data) const;
};

// DRO variable q over sensitive outcomes together with its chi-square ball.
struct SimplexWeights {
  Vec q;
  Vec anchor;      // empirical sensitive marginal
  double radius = 0.0;  // chi-square ball radius

  static SimplexWeights at_anchor(Vec anchor, double radius);
  int k() const { return static_cast<int>(q.size()); }
};

// chi^2(q, p) = sum_s (q_s - p_s)^2 / p_s. Requires p > 0 elementwise.
double chi2_divergence(const Vec& q, const Vec& p);

// Evaluation metrics of a prediction vector on a dataset.
struct MetricsRecord {
  double accuracy = 0.0;
  double ddp = 0.0;
  double deo = 0.0;
  Vec nr;              // per-group fraction of 0-predictions
  Vec group_accuracy;  // per-group accuracy
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool deterministic_label = false;

  bool ok() const { return violations.empty(); }
};

// Plug-in joint of (prediction, sensitive) pairs: nx = 1, ny = 2, ns = k.
DiscreteJoint empirical_joint(const std::vector<int>& predictions,
                              const std::vector<int>& sensitive);

// Report-only invariant check (normalization, negativity, empty groups) plus
// the deterministic-label flag.
ValidationReport validate(const DiscreteJoint& joint);

}  // namespace fairlab

#endif
