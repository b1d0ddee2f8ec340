#include "fairlab/lp.hpp"

#include <algorithm>
#include <cmath>

namespace fairlab::lp {

namespace {

constexpr double kTol = 1e-9;

struct Row {
  Vec coeff;       // structural coefficients after the lo-shift
  double rhs = 0.0;
  bool is_eq = false;
  double flip = 1.0;  // sign applied to reach rhs >= 0
  int orig_index = 0;
  bool from_eq = false;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem) {
  const int n = problem.vars();
  const int m_eq = problem.b_eq.size() ? static_cast<int>(problem.b_eq.size()) : 0;
  const int m_ub = problem.b_ub.size() ? static_cast<int>(problem.b_ub.size()) : 0;
  if ((m_eq && (problem.a_eq.rows != m_eq || problem.a_eq.cols != n)) ||
      (m_ub && (problem.a_ub.rows != m_ub || problem.a_ub.cols != n)))
    throw InvalidInput("solve_lp: constraint dimensions do not match objective");
  Vec lo = problem.lo.empty() ? Vec(n, 0.0) : problem.lo;
  Vec hi = problem.hi.empty() ? Vec(n, kInf) : problem.hi;
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw InvalidInput("solve_lp: bound dimensions do not match objective");
  for (int j = 0; j < n; ++j)
    if (!std::isfinite(lo[j])) throw InvalidInput("solve_lp: lower bounds must be finite");

  // Shift x = x' + lo so x' >= 0; finite upper bounds become extra <= rows.
  double shift_const = 0.0;
  for (int j = 0; j < n; ++j) shift_const += problem.c[j] * lo[j];

  std::vector<Row> rows;
  rows.reserve(m_eq + m_ub + n);
  for (int i = 0; i < m_eq; ++i) {
    Row r;
    r.coeff.assign(n, 0.0);
    r.rhs = problem.b_eq[i];
    for (int j = 0; j < n; ++j) {
      r.coeff[j] = problem.a_eq.at(i, j);
      r.rhs -= r.coeff[j] * lo[j];
    }
    r.is_eq = true;
    r.from_eq = true;
    r.orig_index = i;
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < m_ub; ++i) {
    Row r;
    r.coeff.assign(n, 0.0);
    r.rhs = problem.b_ub[i];
    for (int j = 0; j < n; ++j) {
      r.coeff[j] = problem.a_ub.at(i, j);
      r.rhs -= r.coeff[j] * lo[j];
    }
    r.orig_index = i;
    rows.push_back(std::move(r));
  }
  int n_bound_rows = 0;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(hi[j])) continue;
    Row r;
    r.coeff.assign(n, 0.0);
    r.coeff[j] = 1.0;
    r.rhs = hi[j] - lo[j];
    r.orig_index = m_ub + n_bound_rows++;
    rows.push_back(std::move(r));
  }
  const int m = static_cast<int>(rows.size());

  // Normalize rhs >= 0; a flipped <= row becomes a >= row and needs an
  // artificial, like the equality rows.
  std::vector<int> sense(m);  // 0: <=, 1: =, 2: >=
  for (int i = 0; i < m; ++i) {
    if (rows[i].rhs < 0.0) {
      rows[i].flip = -1.0;
      rows[i].rhs = -rows[i].rhs;
      for (double& v : rows[i].coeff) v = -v;
      sense[i] = rows[i].is_eq ? 1 : 2;
    } else {
      sense[i] = rows[i].is_eq ? 1 : 0;
    }
  }

  int n_slack = 0, n_art = 0;
  std::vector<int> slack_col(m, -1), art_col(m, -1);
  for (int i = 0; i < m; ++i)
    if (sense[i] != 1) ++n_slack;
  for (int i = 0; i < m; ++i)
    if (sense[i] != 0) ++n_art;

  const int ncols = n + n_slack + n_art;
  Mat t(m + 1, ncols + 1);
  std::vector<int> basis(m, -1);
  {
    int sc = n, ac = n + n_slack;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) t.at(i, j) = rows[i].coeff[j];
      t.at(i, ncols) = rows[i].rhs;
      if (sense[i] != 1) {
        slack_col[i] = sc;
        t.at(i, sc) = sense[i] == 0 ? 1.0 : -1.0;
        ++sc;
      }
      if (sense[i] != 0) {
        art_col[i] = ac;
        t.at(i, ac) = 1.0;
        basis[i] = ac;
        ++ac;
      } else {
        basis[i] = slack_col[i];
      }
    }
  }

  auto pivot = [&](int prow, int pcol) {
    const double pv = t.at(prow, pcol);
    for (int j = 0; j <= ncols; ++j) t.at(prow, j) /= pv;
    for (int i = 0; i <= m; ++i) {
      if (i == prow) continue;
      const double f = t.at(i, pcol);
      if (f == 0.0) continue;
      for (int j = 0; j <= ncols; ++j) t.at(i, j) -= f * t.at(prow, j);
    }
    basis[prow] = pcol;
  };

  // Bland's rule: entering = lowest-index column with negative reduced cost;
  // leaving = min ratio, ties by lowest basis index.
  auto run_simplex = [&](const std::vector<bool>& allowed) -> bool {
    for (long iter = 0; iter < 500000; ++iter) {
      int enter = -1;
      for (int j = 0; j < ncols; ++j)
        if (allowed[j] && t.at(m, j) < -kTol) {
          enter = j;
          break;
        }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i) {
        const double a = t.at(i, enter);
        if (a > kTol) {
          const double ratio = t.at(i, ncols) / a;
          if (ratio < best - 1e-12 ||
              (ratio < best + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    throw ConvergenceFailure("solve_lp: iteration limit exceeded");
  };

  LpResult result;

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    for (int j = 0; j <= ncols; ++j) t.at(m, j) = 0.0;
    for (int i = 0; i < m; ++i)
      if (art_col[i] >= 0) t.at(m, art_col[i]) = 1.0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n + n_slack)
        for (int j = 0; j <= ncols; ++j) t.at(m, j) -= t.at(i, j);
    std::vector<bool> allowed(ncols, true);
    run_simplex(allowed);
    // The objective row rhs tracks minus the phase-1 objective.
    if (-t.at(m, ncols) > 1e-8) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Drive remaining artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + n_slack) continue;
      for (int j = 0; j < n + n_slack; ++j)
        if (std::abs(t.at(i, j)) > kTol) {
          pivot(i, j);
          break;
        }
    }
  }

  // Phase 2: original objective, artificials barred from entering.
  for (int j = 0; j <= ncols; ++j) t.at(m, j) = 0.0;
  for (int j = 0; j < n; ++j) t.at(m, j) = problem.c[j];
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n && problem.c[basis[i]] != 0.0) {
      const double f = problem.c[basis[i]];
      for (int j = 0; j <= ncols; ++j) t.at(m, j) -= f * t.at(i, j);
      t.at(m, basis[i]) = 0.0;
    }
  }
  std::vector<bool> allowed(ncols, true);
  for (int j = n + n_slack; j < ncols; ++j) allowed[j] = false;
  if (!run_simplex(allowed)) {
    result.status = LpStatus::unbounded;
    return result;
  }

  // Primal solution in original coordinates.
  Vec xs(ncols, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] >= 0) xs[basis[i]] = t.at(i, ncols);
  result.x.assign(n, 0.0);
  for (int j = 0; j < n; ++j) result.x[j] = std::max(xs[j], 0.0) + lo[j];
  result.value = shift_const;
  for (int j = 0; j < n; ++j) result.value += problem.c[j] * (result.x[j] - lo[j]);

  // Duals read off the indicator column of each row (slack for <= rows,
  // artificial for = / >= rows), then unflipped.
  Vec dual_rows(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const int ind = sense[i] == 0 ? slack_col[i] : art_col[i];
    dual_rows[i] = -t.at(m, ind) * rows[i].flip;
  }
  result.dual_eq.assign(m_eq, 0.0);
  result.dual_ub.assign(m_ub + n_bound_rows, 0.0);
  for (int i = 0; i < m; ++i) {
    if (rows[i].from_eq)
      result.dual_eq[rows[i].orig_index] = dual_rows[i];
    else
      result.dual_ub[rows[i].orig_index] = dual_rows[i];
  }

  // Certificate recomputed from the problem data: primal feasibility, dual
  // feasibility (reduced costs of the shifted problem) and the duality gap.
  double resid = 0.0;
  for (int i = 0; i < m_eq; ++i) {
    double lhs = 0.0;
    for (int j = 0; j < n; ++j) lhs += problem.a_eq.at(i, j) * result.x[j];
    resid = std::max(resid, std::abs(lhs - problem.b_eq[i]));
  }
  for (int i = 0; i < m_ub; ++i) {
    double lhs = 0.0;
    for (int j = 0; j < n; ++j) lhs += problem.a_ub.at(i, j) * result.x[j];
    resid = std::max(resid, lhs - problem.b_ub[i]);
  }
  for (int j = 0; j < n; ++j) {
    resid = std::max(resid, lo[j] - result.x[j]);
    if (std::isfinite(hi[j])) resid = std::max(resid, result.x[j] - hi[j]);
  }
  double dual_obj = shift_const;
  {
    // Dual objective over the shifted rhs.
    int bound_row = m_ub;
    for (int i = 0; i < m_eq; ++i) {
      double rhs = problem.b_eq[i];
      for (int j = 0; j < n; ++j) rhs -= problem.a_eq.at(i, j) * lo[j];
      dual_obj += result.dual_eq[i] * rhs;
    }
    for (int i = 0; i < m_ub; ++i) {
      double rhs = problem.b_ub[i];
      for (int j = 0; j < n; ++j) rhs -= problem.a_ub.at(i, j) * lo[j];
      dual_obj += result.dual_ub[i] * rhs;
    }
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(hi[j])) continue;
      dual_obj += result.dual_ub[bound_row++] * (hi[j] - lo[j]);
    }
    // Dual feasibility: c_j - y^T A_j >= 0 for the shifted min problem;
    // inequality duals must be <= 0.
    for (int i = 0; i < m_ub + n_bound_rows; ++i)
      resid = std::max(resid, result.dual_ub[i]);
    for (int j = 0; j < n; ++j) {
      double r = problem.c[j];
      for (int i = 0; i < m_eq; ++i) r -= result.dual_eq[i] * problem.a_eq.at(i, j);
      for (int i = 0; i < m_ub; ++i) r -= result.dual_ub[i] * problem.a_ub.at(i, j);
      if (std::isfinite(hi[j])) {
        int bi = m_ub;
        for (int jj = 0; jj < j; ++jj)
          if (std::isfinite(hi[jj])) ++bi;
        r -= result.dual_ub[bi];
      }
      resid = std::max(resid, -r);
    }
  }
  result.duality_gap = std::abs(result.value - dual_obj);
  result.certificate_residual = std::max(resid, 0.0);
  result.status = LpStatus::optimal;
  return result;
}

}  // namespace fairlab::lp
