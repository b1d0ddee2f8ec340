#ifndef FAIRLAB_LP_HPP
#define FAIRLAB_LP_HPP

#include <limits>

#include "fairlab/core.hpp"

namespace fairlab::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

// min c.x  subject to  a_eq x = b_eq,  a_ub x <= b_ub,  lo <= x <= hi.
// Empty bound vectors default to lo = 0, hi = +inf.
struct LpProblem {
  Vec c;
  Mat a_eq;
  Vec b_eq;
  Mat a_ub;
  Vec b_ub;
  Vec lo;
  Vec hi;

  int vars() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  double value = 0.0;
  Vec x;
  Vec dual_eq;   // one multiplier per equality row
  Vec dual_ub;   // one multiplier per inequality row
  // |primal objective - dual objective|, both recomputed from the original
  // problem data.
  double duality_gap = 0.0;
  // max of primal constraint violation and dual-feasibility violation,
  // recomputed from the original problem data.
  double certificate_residual = 0.0;
};

// Dense two-phase simplex with Bland's anti-cycling rule.
LpResult solve_lp(const LpProblem& problem);

}  // namespace fairlab::lp

#endif
