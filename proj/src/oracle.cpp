#include "fairlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace fairlab::oracle {

namespace {

constexpr double kLog2e = 1.4426950408889634;

double u_of(double eps) { return std::max(eps, std::sqrt(std::max(eps, 0.0))); }

// Euclidean projection onto the probability simplex (sort-based).
Vec simplex_projection(Vec v) {
  const int n = static_cast<int>(v.size());
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int rho = 0;
  for (int j = 0; j < n; ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / (j + 1);
    if (u[j] - t > 0.0) {
      rho = j + 1;
      tau = t;
    }
  }
  (void)rho;
  double sum = 0.0;
  for (double& x : v) {
    x = std::max(x - tau, 0.0);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

struct CellIndex {
  std::vector<std::pair<int, int>> cells;  // positive-mass (x, s)
  Mat mass;                                // P(x, s)
  std::vector<int> lookup;                 // x * ns + s -> cell id or -1

  int id(int x, int s, int ns) const { return lookup[static_cast<size_t>(x) * ns + s]; }
};

CellIndex index_cells(const DiscreteJoint& joint) {
  CellIndex ci;
  ci.mass = Mat(joint.nx, joint.ns);
  ci.lookup.assign(static_cast<size_t>(joint.nx) * joint.ns, -1);
  for (int x = 0; x < joint.nx; ++x)
    for (int s = 0; s < joint.ns; ++s) {
      const double m = joint.p_xs(x, s);
      ci.mass.at(x, s) = m;
      if (m > 0.0) {
        ci.lookup[static_cast<size_t>(x) * joint.ns + s] =
            static_cast<int>(ci.cells.size());
        ci.cells.emplace_back(x, s);
      }
    }
  return ci;
}

Policy policy_from_solution(const DiscreteJoint& joint, const CellIndex& ci, const Vec& x,
                            int ny) {
  Policy q = Policy::uniform(joint.nx, joint.ny, joint.ns);
  for (size_t c = 0; c < ci.cells.size(); ++c) {
    const auto [cx, cs] = ci.cells[c];
    double sum = 0.0;
    for (int y = 0; y < ny; ++y) sum += std::max(x[c * ny + y], 0.0);
    for (int y = 0; y < ny; ++y)
      q.q_ref(cx, y, cs) = sum > 0.0 ? std::max(x[c * ny + y], 0.0) / sum : 1.0 / ny;
  }
  return q;
}

// Coefficients of P(Yhat=y|S=s) - P(Yhat=y) as a linear form over the policy
// variables with prediction index y.
struct DdpRowBuilder {
  const DiscreteJoint& joint;
  const CellIndex& ci;
  Vec p_s;
  std::vector<Vec> p_x_given_s;  // [s][x]

  explicit DdpRowBuilder(const DiscreteJoint& j, const CellIndex& c) : joint(j), ci(c) {
    p_s = joint.marginal_s();
    for (int s = 0; s < joint.ns; ++s) p_x_given_s.push_back(joint.cond_x_given_s(s));
  }

  // Adds the pair of absolute-value rows for (y, s) with auxiliary column t_col.
  void add_rows(Mat& a_ub, Vec& b_ub, int y, int s, int t_col, int ny) const {
    const int base = a_ub.rows;
    a_ub.a.resize(static_cast<size_t>(base + 2) * a_ub.cols, 0.0);
    a_ub.rows = base + 2;
    for (size_t c = 0; c < ci.cells.size(); ++c) {
      const auto [cx, cs] = ci.cells[c];
      const double coef =
          (cs == s ? p_x_given_s[s][cx] : 0.0) - p_s[cs] * p_x_given_s[cs][cx];
      const int col = static_cast<int>(c) * ny + y;
      a_ub.at(base, col) = coef;
      a_ub.at(base + 1, col) = -coef;
    }
    a_ub.at(base, t_col) = -1.0;
    a_ub.at(base + 1, t_col) = -1.0;
    b_ub.push_back(0.0);
    b_ub.push_back(0.0);
  }
};

TheoremReport make_report(const DiscreteJoint& joint, const DiscreteJoint& induced,
                          double eps, bool worst_case) {
  TheoremReport rep;
  rep.epsilon = eps;
  rep.delta_majority = joint.delta_majority();
  const int smax = joint.majority_s();
  const Vec target = joint.cond_y_given_s(smax);
  const Vec p_s = joint.marginal_s();
  rep.per_s.assign(joint.ns, 0.0);
  double worst = 0.0, mean = 0.0;
  for (int s = 0; s < joint.ns; ++s) {
    rep.per_s[s] = measures::tv_distance(induced.cond_y_given_s(s), target);
    worst = std::max(worst, rep.per_s[s]);
    mean += p_s[s] * rep.per_s[s];
  }
  rep.observed = worst_case ? worst : mean;
  return rep;
}

}  // namespace

DiscreteJoint induced_prediction_joint(const DiscreteJoint& joint, const Policy& policy) {
  if (policy.nx != joint.nx || policy.ny != joint.ny || policy.ns != joint.ns)
    throw InvalidInput("induced_prediction_joint: policy/joint shape mismatch");
  Vec probs(static_cast<size_t>(joint.ny) * joint.ns, 0.0);
  for (int x = 0; x < joint.nx; ++x)
    for (int s = 0; s < joint.ns; ++s) {
      const double m = joint.p_xs(x, s);
      if (m <= 0.0) continue;
      for (int y = 0; y < joint.ny; ++y)
        probs[static_cast<size_t>(y) * joint.ns + s] += m * policy.q(x, y, s);
    }
  return DiscreteJoint::make(1, joint.ny, joint.ns, std::move(probs));
}

double policy_01_risk(const DiscreteJoint& joint, const Policy& policy) {
  if (!joint.is_deterministic_label())
    throw PreconditionViolated("policy_01_risk: joint labels are not deterministic");
  double risk = 0.0;
  for (int x = 0; x < joint.nx; ++x)
    for (int s = 0; s < joint.ns; ++s) {
      const double m = joint.p_xs(x, s);
      if (m <= 0.0) continue;
      risk += m * (1.0 - policy.q(x, joint.label_of(x, s), s));
    }
  return risk;
}

double policy_tv_risk(const DiscreteJoint& joint, const Policy& policy) {
  double risk = 0.0;
  for (int x = 0; x < joint.nx; ++x)
    for (int s = 0; s < joint.ns; ++s) {
      const double m = joint.p_xs(x, s);
      if (m <= 0.0) continue;
      const Vec truth = joint.cond_y_given_xs(x, s);
      double tv = 0.0;
      for (int y = 0; y < joint.ny; ++y) tv += std::abs(policy.q(x, y, s) - truth[y]);
      risk += m * 0.5 * tv;
    }
  return risk;
}

Policy independence_witness_policy(const DiscreteJoint& joint) {
  if (!joint.is_deterministic_label())
    throw PreconditionViolated("independence_witness_policy: nondeterministic labels");
  const int smax = joint.majority_s();
  const Vec target = joint.cond_y_given_s(smax);
  Policy q = Policy::uniform(joint.nx, joint.ny, joint.ns);
  for (int s = 0; s < joint.ns; ++s) {
    const Vec py_s = joint.cond_y_given_s(s);
    const Mat coupling = measures::optimal_tv_coupling(target, py_s);
    for (int x = 0; x < joint.nx; ++x) {
      if (joint.p_xs(x, s) <= 0.0) continue;
      const int y = joint.label_of(x, s);
      if (py_s[y] <= 0.0) continue;
      for (int yh = 0; yh < joint.ny; ++yh)
        q.q_ref(x, yh, s) = coupling.at(yh, y) / py_s[y];
    }
  }
  return q;
}

DiscreteJoint random_joint(const JointSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> umaj(spec.p_majority_lo, spec.p_majority_hi);
  std::exponential_distribution<double> expo(1.0);
  Vec p_s(spec.ns);
  p_s[0] = umaj(rng);
  double rest = 0.0;
  for (int s = 1; s < spec.ns; ++s) {
    p_s[s] = expo(rng);
    rest += p_s[s];
  }
  for (int s = 1; s < spec.ns; ++s) p_s[s] = (1.0 - p_s[0]) * p_s[s] / rest;

  Vec probs(static_cast<size_t>(spec.nx) * spec.ny * spec.ns, 0.0);
  for (int s = 0; s < spec.ns; ++s) {
    Mat cell(spec.nx, spec.ny);
    double sum = 0.0;
    for (double& v : cell.a) {
      v = expo(rng);
      sum += v;
    }
    for (double& v : cell.a) v /= sum;
    if (spec.deterministic) {
      for (int x = 0; x < spec.nx; ++x) {
        double mass = 0.0;
        int best = 0;
        for (int y = 0; y < spec.ny; ++y) {
          mass += cell.at(x, y);
          if (cell.at(x, y) > cell.at(x, best)) best = y;
        }
        for (int y = 0; y < spec.ny; ++y) cell.at(x, y) = y == best ? mass : 0.0;
      }
    }
    for (int x = 0; x < spec.nx; ++x)
      for (int y = 0; y < spec.ny; ++y)
        probs[(static_cast<size_t>(x) * spec.ny + y) * spec.ns + s] =
            p_s[s] * cell.at(x, y);
  }
  return DiscreteJoint::make(spec.nx, spec.ny, spec.ns, std::move(probs));
}

PolicySolution optimal_fair_policy_ddp(const DiscreteJoint& joint, double eps) {
  if (!joint.is_deterministic_label())
    throw PreconditionViolated("optimal_fair_policy_ddp: labels must be deterministic");
  if (eps < 0.0) throw InvalidInput("optimal_fair_policy_ddp: negative epsilon");
  const int ny = joint.ny, ns = joint.ns;
  const CellIndex ci = index_cells(joint);
  const int nq = static_cast<int>(ci.cells.size()) * ny;
  const int nt = ny * ns;
  const int nvars = nq + nt;

  lp::LpProblem p;
  p.c.assign(nvars, 0.0);
  for (size_t c = 0; c < ci.cells.size(); ++c) {
    const auto [cx, cs] = ci.cells[c];
    const int label = joint.label_of(cx, cs);
    for (int y = 0; y < ny; ++y)
      if (y != label) p.c[c * ny + y] = ci.mass.at(cx, cs);
  }

  p.a_eq = Mat(static_cast<int>(ci.cells.size()), nvars);
  p.b_eq.assign(ci.cells.size(), 1.0);
  for (size_t c = 0; c < ci.cells.size(); ++c)
    for (int y = 0; y < ny; ++y) p.a_eq.at(static_cast<int>(c), static_cast<int>(c * ny + y)) = 1.0;

  p.a_ub = Mat(0, nvars);
  DdpRowBuilder rows(joint, ci);
  for (int y = 0; y < ny; ++y)
    for (int s = 0; s < ns; ++s)
      rows.add_rows(p.a_ub, p.b_ub, y, s, nq + y * ns + s, ny);
  // sum of the absolute-value variables bounded by eps
  {
    const int base = p.a_ub.rows;
    p.a_ub.a.resize(static_cast<size_t>(base + 1) * nvars, 0.0);
    p.a_ub.rows = base + 1;
    for (int t = 0; t < nt; ++t) p.a_ub.at(base, nq + t) = 1.0;
    p.b_ub.push_back(eps);
  }

  const lp::LpResult res = lp::solve_lp(p);
  if (res.status != lp::LpStatus::optimal)
    throw ConvergenceFailure("optimal_fair_policy_ddp: LP not optimal");
  PolicySolution sol;
  sol.policy = policy_from_solution(joint, ci, res.x, ny);
  sol.risk = policy_01_risk(joint, sol.policy);
  sol.lp_value = res.value;
  sol.duality_gap = res.duality_gap;
  sol.certificate_residual = res.certificate_residual;
  return sol;
}

PolicySolution optimal_fair_policy_tv(const DiscreteJoint& joint, DependenceKind measure,
                                      double eps) {
  if (measure != DependenceKind::DDP && measure != DependenceKind::RhoTV)
    throw UnsupportedKind("optimal_fair_policy_tv: measure must be DDP or RhoTV");
  if (eps < 0.0) throw InvalidInput("optimal_fair_policy_tv: negative epsilon");
  const int ny = joint.ny, ns = joint.ns;
  const CellIndex ci = index_cells(joint);
  const int ncells = static_cast<int>(ci.cells.size());
  const int nq = ncells * ny;
  const int nu = ncells * ny;  // |Q - P| per cell and label
  const int nt = ny * ns;      // |P(yhat|s) - P(yhat)| terms
  const int nvars = nq + nu + nt;
  const Vec p_s = joint.marginal_s();

  lp::LpProblem p;
  p.c.assign(nvars, 0.0);
  for (int c = 0; c < ncells; ++c) {
    const auto [cx, cs] = ci.cells[c];
    for (int y = 0; y < ny; ++y) p.c[nq + c * ny + y] = 0.5 * ci.mass.at(cx, cs);
  }

  p.a_eq = Mat(ncells, nvars);
  p.b_eq.assign(ncells, 1.0);
  for (int c = 0; c < ncells; ++c)
    for (int y = 0; y < ny; ++y) p.a_eq.at(c, c * ny + y) = 1.0;

  p.a_ub = Mat(0, nvars);
  // u >= +-(Q - P(y|x,s))
  for (int c = 0; c < ncells; ++c) {
    const auto [cx, cs] = ci.cells[c];
    const Vec truth = joint.cond_y_given_xs(cx, cs);
    for (int y = 0; y < ny; ++y) {
      const int base = p.a_ub.rows;
      p.a_ub.a.resize(static_cast<size_t>(base + 2) * nvars, 0.0);
      p.a_ub.rows = base + 2;
      p.a_ub.at(base, c * ny + y) = 1.0;
      p.a_ub.at(base, nq + c * ny + y) = -1.0;
      p.a_ub.at(base + 1, c * ny + y) = -1.0;
      p.a_ub.at(base + 1, nq + c * ny + y) = -1.0;
      p.b_ub.push_back(truth[y]);
      p.b_ub.push_back(-truth[y]);
    }
  }
  DdpRowBuilder rows(joint, ci);
  for (int y = 0; y < ny; ++y)
    for (int s = 0; s < ns; ++s)
      rows.add_rows(p.a_ub, p.b_ub, y, s, nq + nu + y * ns + s, ny);
  {
    const int base = p.a_ub.rows;
    p.a_ub.a.resize(static_cast<size_t>(base + 1) * nvars, 0.0);
    p.a_ub.rows = base + 1;
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s) {
        const double coef = measure == DependenceKind::DDP ? 1.0 : 0.5 * p_s[s];
        p.a_ub.at(base, nq + nu + y * ns + s) = coef;
      }
    p.b_ub.push_back(eps);
  }

  const lp::LpResult res = lp::solve_lp(p);
  if (res.status != lp::LpStatus::optimal)
    throw ConvergenceFailure("optimal_fair_policy_tv: LP not optimal");
  PolicySolution sol;
  sol.policy = policy_from_solution(joint, ci, res.x, ny);
  sol.risk = policy_tv_risk(joint, sol.policy);
  sol.lp_value = res.value;
  sol.duality_gap = res.duality_gap;
  sol.certificate_residual = res.certificate_residual;
  return sol;
}

namespace {

double exact_constraint_value(DependenceKind kind, const DiscreteJoint& induced) {
  switch (kind) {
    case DependenceKind::MutualInformation:
      return measures::mutual_information(induced, measures::LogBase::bit);
    case DependenceKind::ERMI:
      return measures::ermi(induced);
    case DependenceKind::MaximalCorrelation: {
      const Vec py = induced.marginal_y();
      int pos = 0;
      for (double v : py) pos += v > 0.0;
      if (pos < 2) return 0.0;  // constant prediction carries no dependence
      return measures::maximal_correlation(induced);
    }
    default:
      throw UnsupportedKind("exact_constraint_value: unsupported kind");
  }
}

measures::MeasureGrad constraint_grad(DependenceKind kind, const Mat& ys) {
  if (kind == DependenceKind::MutualInformation)
    return measures::mutual_information_grad(ys, measures::LogBase::bit);
  return measures::dependence_grad(kind, ys);
}

}  // namespace

ConvexSolution solve_convex_constrained(const DiscreteJoint& joint, DependenceKind kind,
                                        double eps) {
  if (kind != DependenceKind::MutualInformation && kind != DependenceKind::ERMI &&
      kind != DependenceKind::MaximalCorrelation)
    throw UnsupportedKind("solve_convex_constrained: kind must be MI, ERMI or MC");
  if (!joint.is_deterministic_label())
    throw PreconditionViolated("solve_convex_constrained: labels must be deterministic");
  if (eps < 0.0) throw InvalidInput("solve_convex_constrained: negative epsilon");

  const int ny = joint.ny, ns = joint.ns;
  const CellIndex ci = index_cells(joint);
  const int ncells = static_cast<int>(ci.cells.size());
  const int nq = ncells * ny;

  Vec risk_grad(nq, 0.0);
  Vec q(nq, 0.0);
  for (int c = 0; c < ncells; ++c) {
    const auto [cx, cs] = ci.cells[c];
    const int label = joint.label_of(cx, cs);
    q[c * ny + label] = 1.0;  // start from the risk-optimal rule
    for (int y = 0; y < ny; ++y)
      if (y != label) risk_grad[c * ny + y] = ci.mass.at(cx, cs);
  }

  auto induced_ys = [&](const Vec& table) {
    Mat ys(ny, ns);
    for (int c = 0; c < ncells; ++c) {
      const auto [cx, cs] = ci.cells[c];
      for (int y = 0; y < ny; ++y) ys.at(y, cs) += ci.mass.at(cx, cs) * table[c * ny + y];
    }
    return ys;
  };
  auto risk_of = [&](const Vec& table) {
    double r = 0.0;
    for (int j = 0; j < nq; ++j) r += risk_grad[j] * table[j];
    return r;
  };
  auto project = [&](Vec table) {
    for (int c = 0; c < ncells; ++c) {
      Vec block(table.begin() + c * ny, table.begin() + (c + 1) * ny);
      block = simplex_projection(std::move(block));
      std::copy(block.begin(), block.end(), table.begin() + c * ny);
    }
    return table;
  };
  auto constraint_of = [&](const Vec& table) {
    const Mat ys = induced_ys(table);
    if (kind == DependenceKind::MaximalCorrelation) {
      Vec py(ny, 0.0);
      for (int y = 0; y < ny; ++y)
        for (int s = 0; s < ns; ++s) py[y] += ys.at(y, s);
      int pos = 0;
      for (double v : py) pos += v > 1e-12;
      if (pos < 2) return 0.0;
    }
    return constraint_grad(kind, ys).value;
  };

  ConvexSolution sol;
  double g0 = constraint_of(q);
  if (g0 <= eps) {
    sol.policy = policy_from_solution(joint, ci, q, ny);
    sol.risk = risk_of(q);
    sol.constraint_value = exact_constraint_value(kind, induced_prediction_joint(joint, sol.policy));
    sol.violation = std::max(0.0, sol.constraint_value - eps);
    return sol;
  }

  double prev_objective = 1e300;
  double alpha = 1.0;
  for (double mu : {1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12}) {
    sol.outer_rounds++;
    auto penalized = [&](const Vec& table) {
      const double g = constraint_of(table);
      const double over = std::max(0.0, g - eps);
      return risk_of(table) + mu * over * over;
    };
    double f = penalized(q);
    for (int it = 0; it < 4000; ++it) {
      // Gradient of the penalized objective.
      const Mat ys = induced_ys(q);
      const measures::MeasureGrad mg = constraint_grad(kind, ys);
      const double over = std::max(0.0, mg.value - eps);
      Vec grad = risk_grad;
      if (over > 0.0) {
        for (int c = 0; c < ncells; ++c) {
          const auto [cx, cs] = ci.cells[c];
          for (int y = 0; y < ny; ++y)
            grad[c * ny + y] += 2.0 * mu * over * ci.mass.at(cx, cs) * mg.d_joint.at(y, cs);
        }
      }
      // Backtracking proximal step.
      bool moved = false;
      alpha = std::min(alpha * 2.0, 1e3);
      for (; alpha > 1e-14; alpha *= 0.5) {
        Vec trial(nq);
        for (int j = 0; j < nq; ++j) trial[j] = q[j] - alpha * grad[j];
        trial = project(std::move(trial));
        const double ft = penalized(trial);
        double dist2 = 0.0;
        for (int j = 0; j < nq; ++j) dist2 += (trial[j] - q[j]) * (trial[j] - q[j]);
        if (ft <= f - 1e-4 * dist2 / std::max(alpha, 1e-14)) {
          q = std::move(trial);
          const bool tiny = dist2 < 1e-24;
          f = ft;
          moved = !tiny;
          break;
        }
      }
      if (!moved) break;
    }
    const double g = constraint_of(q);
    const double objective = risk_of(q);
    const bool feasible = g - eps < 1e-6;
    const bool settled = std::abs(objective - prev_objective) <
                         1e-8 * std::max(1.0, std::abs(objective));
    prev_objective = objective;
    if (feasible && settled) break;
  }

  sol.policy = policy_from_solution(joint, ci, q, ny);
  sol.risk = policy_01_risk(joint, sol.policy);
  sol.constraint_value =
      exact_constraint_value(kind, induced_prediction_joint(joint, sol.policy));
  sol.violation = std::max(0.0, sol.constraint_value - eps);
  if (sol.violation >= 1e-6)
    throw ConvergenceFailure("solve_convex_constrained: constraint violation persists",
                             sol.violation);
  return sol;
}

TheoremReport verify_theorem1(const DiscreteJoint& joint, double eps) {
  if (!joint.is_deterministic_label())
    throw PreconditionViolated("verify_theorem1: labels must be deterministic");
  const PolicySolution sol = optimal_fair_policy_ddp(joint, eps);
  TheoremReport rep =
      make_report(joint, induced_prediction_joint(joint, sol.policy), eps, true);
  const double delta = rep.delta_majority;
  if (delta <= 0.0) {
    rep.applicable = false;
    rep.satisfied = true;
    rep.bound = lp::kInf;
    return rep;
  }
  rep.bound = (0.5 + 1.0 / (4.0 * delta)) * eps;
  rep.satisfied = rep.observed <= rep.bound + 1e-6;
  return rep;
}

TheoremReport verify_theorem2(const DiscreteJoint& joint, DependenceKind kind, double eps) {
  const ConvexSolution sol = solve_convex_constrained(joint, kind, eps);
  const Policy witness = independence_witness_policy(joint);
  const double witness_risk = policy_01_risk(joint, witness);

  // The bound argument needs a feasible policy at least as good as the
  // independence witness; fall back to the witness when the solver is not.
  const Policy* chosen = &sol.policy;
  bool used_witness = false;
  if (sol.violation >= 1e-6 || sol.risk > witness_risk + 1e-9) {
    chosen = &witness;
    used_witness = true;
  }

  TheoremReport rep =
      make_report(joint, induced_prediction_joint(joint, *chosen), eps, false);
  rep.used_witness = used_witness;
  const double delta = rep.delta_majority;
  if (delta <= 0.0) {
    rep.applicable = false;
    rep.satisfied = true;
    rep.bound = lp::kInf;
    return rep;
  }
  const double factor = 0.5 + 1.0 / (4.0 * delta);
  switch (kind) {
    case DependenceKind::MutualInformation:
      rep.bound = factor * std::sqrt(2.0 * eps / kLog2e);
      break;
    case DependenceKind::ERMI:
      rep.bound = factor * u_of(eps);
      break;
    case DependenceKind::MaximalCorrelation: {
      const double r = std::min(joint.ns, joint.ny) - 1;
      rep.bound = factor * u_of(r * eps);
      break;
    }
    default:
      throw UnsupportedKind("verify_theorem2: unsupported kind");
  }
  rep.satisfied = rep.observed <= rep.bound + 1e-6;
  return rep;
}

double Remark1Instance::max_delta() const {
  double m = 0.0;
  for (double v : delta.a) m = std::max(m, v);
  return m;
}

Remark1Instance make_remark1_joint(int nx, int ny, int ns, uint64_t seed, double eta) {
  if (nx < 2 || ny < 2 || ns < 2)
    throw InvalidParams("make_remark1_joint: supports must all be at least 2");
  if (eta < 0.0 || eta >= 1.0)
    throw InvalidPerturbation("make_remark1_joint: eta must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Direction along which P(y|s) varies; the mixture weights below are built
  // orthogonal to it so that P(x|s) stays independent of s.
  Vec v(ny, 0.0);
  if (ny >= 3) {
    v[0] = 1.0;
    v[1] = -2.0;
    v[2] = 1.0;
  } else {
    v[0] = 1.0;
    v[1] = -1.0;
  }
  Vec beta(ny);
  for (double& b : beta) b = 0.15 + 0.7 * unit(rng);
  if (ny >= 3)
    beta[1] = 0.5 * (beta[0] + beta[2]);
  else
    beta[1] = beta[0];

  Vec base_u(nx), base_d(nx);
  double su = 0.0, sd = 0.0;
  for (int x = 0; x < nx; ++x) {
    base_u[x] = 0.1 + unit(rng);
    base_d[x] = 0.1 + unit(rng);
    su += base_u[x];
    sd += base_d[x];
  }
  for (int x = 0; x < nx; ++x) {
    base_u[x] /= su;
    base_d[x] /= sd;
  }
  Mat x_given_y(nx, ny);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      x_given_y.at(x, y) = (1.0 - beta[y]) * base_u[x] + beta[y] * base_d[x];

  Vec p_y(ny);
  double sy = 0.0;
  for (double& p : p_y) {
    p = 0.2 + 0.8 * unit(rng);
    sy += p;
  }
  for (double& p : p_y) p /= sy;

  Vec p_s(ns);
  p_s[0] = 0.55 + 0.4 * unit(rng);
  double rest = 0.0;
  for (int s = 1; s < ns; ++s) {
    p_s[s] = 0.2 + unit(rng);
    rest += p_s[s];
  }
  for (int s = 1; s < ns; ++s) p_s[s] = (1.0 - p_s[0]) * p_s[s] / rest;

  // t_s are centered under P_S and scaled to keep every P(y|s) inside (0.02, 0.98).
  Vec t(ns);
  for (double& x : t) x = 2.0 * unit(rng) - 1.0;
  double mean_t = 0.0;
  for (int s = 0; s < ns; ++s) mean_t += p_s[s] * t[s];
  for (double& x : t) x -= mean_t;
  double t_cap = 1e300;
  for (int y = 0; y < ny; ++y) {
    if (v[y] == 0.0) continue;
    t_cap = std::min(t_cap, (p_y[y] - 0.02) / std::abs(v[y]));
    t_cap = std::min(t_cap, (0.98 - p_y[y]) / std::abs(v[y]));
  }
  double t_max = 0.0;
  for (double x : t) t_max = std::max(t_max, std::abs(x));
  if (t_max > 0.0) {
    const double scale = 0.9 * t_cap / t_max;
    for (double& x : t) x *= scale;
  }
  Mat y_given_s(ny, ns);
  for (int y = 0; y < ny; ++y)
    for (int s = 0; s < ns; ++s) y_given_s.at(y, s) = p_y[y] + t[s] * v[y];

  // Perturbed conditionals P(x | y, s), renormalized per (y, s).
  std::vector<Mat> x_given_ys(ns, Mat(nx, ny));
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      double z = 0.0;
      for (int x = 0; x < nx; ++x) {
        const double f = 1.0 + eta * (2.0 * unit(rng) - 1.0);
        x_given_ys[s].at(x, y) = x_given_y.at(x, y) * f;
        z += x_given_ys[s].at(x, y);
      }
      for (int x = 0; x < nx; ++x) {
        x_given_ys[s].at(x, y) /= z;
        if (x_given_ys[s].at(x, y) <= 0.0 || x_given_ys[s].at(x, y) >= 1.0)
          throw InvalidPerturbation("make_remark1_joint: perturbed probability left (0,1)");
      }
    }
  }

  Vec probs(static_cast<size_t>(nx) * ny * ns, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int s = 0; s < ns; ++s)
        probs[(static_cast<size_t>(x) * ny + y) * ns + s] =
            p_s[s] * y_given_s.at(y, s) * x_given_ys[s].at(x, y);

  Remark1Instance inst;
  inst.eta = eta;
  inst.joint = DiscreteJoint::make(nx, ny, ns, std::move(probs));
  inst.phi_low = Mat(nx, ny, 1e300);
  inst.phi_high = Mat(nx, ny, -1e300);
  inst.delta = Mat(nx, ny);
  for (int s = 0; s < ns; ++s) {
    Vec x_given_s(nx, 0.0);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        x_given_s[x] += y_given_s.at(y, s) * x_given_ys[s].at(x, y);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const double ratio = x_given_ys[s].at(x, y) / x_given_s[x];
        inst.phi_low.at(x, y) = std::min(inst.phi_low.at(x, y), ratio);
        inst.phi_high.at(x, y) = std::max(inst.phi_high.at(x, y), ratio);
      }
  }
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      inst.delta.at(x, y) = inst.phi_high.at(x, y) - inst.phi_low.at(x, y);
  return inst;
}

TheoremReport verify_theorem3(const Remark1Instance& inst, double eps) {
  const PolicySolution sol =
      optimal_fair_policy_tv(inst.joint, DependenceKind::DDP, eps);
  TheoremReport rep = make_report(
      inst.joint, induced_prediction_joint(inst.joint, sol.policy), eps, true);
  const double delta = rep.delta_majority;
  rep.applicable = delta > 0.0 && inst.max_delta() <= 1e-9;
  if (!rep.applicable) {
    rep.satisfied = true;
    rep.bound = lp::kInf;
    return rep;
  }
  rep.bound = (0.5 + 1.0 / (4.0 * delta)) * eps;
  rep.satisfied = rep.observed <= rep.bound + 1e-6;
  return rep;
}

TheoremReport verify_theorem4(const Remark1Instance& inst, double eps) {
  const DiscreteJoint& joint = inst.joint;
  const int smax = joint.majority_s();
  const Vec p_x = joint.marginal_x();
  const Vec y_smax = joint.cond_y_given_s(smax);
  double expected_delta = 0.0;
  for (int x = 0; x < joint.nx; ++x)
    for (int y = 0; y < joint.ny; ++y)
      expected_delta += p_x[x] * y_smax[y] * inst.delta.at(x, y);

  const PolicySolution sol =
      optimal_fair_policy_tv(joint, DependenceKind::RhoTV, eps);
  TheoremReport rep =
      make_report(joint, induced_prediction_joint(joint, sol.policy), eps, false);
  const double delta = rep.delta_majority;
  rep.applicable = delta > 0.0 && eps / 2.0 >= expected_delta;
  if (!rep.applicable) {
    rep.satisfied = true;
    rep.bound = lp::kInf;
    return rep;
  }
  rep.bound = 2.0 * eps * (1.0 + 1.0 / (2.0 * delta));
  rep.satisfied = rep.observed <= rep.bound + 1e-6;
  return rep;
}

LemmaReport check_pinsker_lemmas(int n_trials, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  LemmaReport rep;
  rep.trials = n_trials;
  rep.min_slack_mi = rep.min_slack_ermi = rep.min_slack_mc = 1e300;
  double worst_slack = 1e300;
  for (int trial = 0; trial < n_trials; ++trial) {
    const int ny = 2 + static_cast<int>(rng() % 3);
    const int ns = 2 + static_cast<int>(rng() % 3);
    Vec p(static_cast<size_t>(ny) * ns);
    double sum = 0.0;
    for (double& x : p) {
      x = expo(rng);
      sum += x;
    }
    for (double& x : p) x /= sum;
    const DiscreteJoint j = DiscreteJoint::make(1, ny, ns, std::move(p));

    const double rtv = measures::rho_tv(j);
    const double mi_bits = measures::mutual_information(j, measures::LogBase::bit);
    const double e = measures::ermi(j);
    const double t = 2.0 * rtv;
    const double h = t <= 1.0 ? t * t : 2.0 * t - 1.0;
    const double r = std::min(ny, ns) - 1;
    const double slack_mi = mi_bits - 2.0 * kLog2e * rtv * rtv;
    const double slack_ermi = e - h;
    const double slack_mc = r * measures::maximal_correlation(j) - e;

    rep.min_slack_mi = std::min(rep.min_slack_mi, slack_mi);
    rep.min_slack_ermi = std::min(rep.min_slack_ermi, slack_ermi);
    rep.min_slack_mc = std::min(rep.min_slack_mc, slack_mc);
    const double local_min = std::min({slack_mi, slack_ermi, slack_mc});
    if (local_min < -1e-9) rep.violations++;
    if (local_min < worst_slack) {
      worst_slack = local_min;
      rep.worst_instance = serialize_instance(j, 0.0, Policy::uniform(1, ny, ns));
    }
  }
  return rep;
}

std::string serialize_instance(const DiscreteJoint& joint, double eps, const Policy& policy) {
  std::string out;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += ' ';
    out += buf;
  };
  out += "supports";
  std::snprintf(buf, sizeof(buf), " %d %d %d", joint.nx, joint.ny, joint.ns);
  out += buf;
  out += "\nprobs";
  for (double v : joint.probs) put(v);
  out += "\nepsilon";
  put(eps);
  out += "\npolicy";
  for (double v : policy.table) put(v);
  out += "\n";
  return out;
}

}  // namespace fairlab::oracle
