#include "fairlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fairlab::measures {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void check_distribution(const Vec& p, const char* who) {
  double sum = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw InvalidInput(std::string(who) + ": negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidInput(std::string(who) + ": input not normalized");
}

Vec row_marginal(const Mat& ys) {
  Vec a(ys.rows, 0.0);
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) a[y] += ys.at(y, s);
  return a;
}

Vec col_marginal(const Mat& ys) {
  Vec b(ys.cols, 0.0);
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) b[s] += ys.at(y, s);
  return b;
}

}  // namespace

const char* kind_name(DependenceKind kind) {
  switch (kind) {
    case DependenceKind::DDP: return "ddp";
    case DependenceKind::RhoTV: return "rho_tv";
    case DependenceKind::MutualInformation: return "mi";
    case DependenceKind::ERMI: return "ermi";
    case DependenceKind::MaximalCorrelation: return "mc";
  }
  return "?";
}

double tv_distance(const Vec& p, const Vec& q) {
  if (p.size() != q.size()) throw InvalidInput("tv_distance: length mismatch");
  check_distribution(p, "tv_distance");
  check_distribution(q, "tv_distance");
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

Mat optimal_tv_coupling(const Vec& p, const Vec& q) {
  if (p.size() != q.size()) throw InvalidInput("optimal_tv_coupling: length mismatch");
  check_distribution(p, "optimal_tv_coupling");
  check_distribution(q, "optimal_tv_coupling");
  const int n = static_cast<int>(p.size());
  Mat m(n, n);
  Vec surplus(n), deficit(n);
  for (int i = 0; i < n; ++i) {
    const double d = std::min(p[i], q[i]);
    m.at(i, i) = d;
    surplus[i] = p[i] - d;
    deficit[i] = q[i] - d;
  }
  int j = 0;
  for (int i = 0; i < n; ++i) {
    while (surplus[i] > 1e-15) {
      while (j < n && deficit[j] <= 1e-15) ++j;
      if (j >= n) break;
      const double moved = std::min(surplus[i], deficit[j]);
      m.at(i, j) += moved;
      surplus[i] -= moved;
      deficit[j] -= moved;
    }
  }
  return m;
}

double ddp(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  double total = 0.0;
  for (int s = 0; s < ys.cols; ++s) {
    if (ps[s] <= 0.0)
      throw EmptyGroup("ddp: P(S=" + std::to_string(s) + ") = 0");
    for (int y = 0; y < ys.rows; ++y)
      total += std::abs(ys.at(y, s) / ps[s] - py[y]);
  }
  return total;
}

double ddp(const DiscreteJoint& joint) { return ddp(joint.ys_marginal()); }

double deo(const std::vector<int>& pred, const std::vector<int>& label,
           const std::vector<int>& sensitive) {
  if (pred.size() != label.size() || pred.size() != sensitive.size())
    throw InvalidInput("deo: length mismatch");
  int nyh = 0, nyl = 0, k = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    nyh = std::max(nyh, pred[i] + 1);
    nyl = std::max(nyl, label[i] + 1);
    k = std::max(k, sensitive[i] + 1);
  }
  // counts[yh][y][s] and the (y,s) / y totals
  std::vector<double> cell(static_cast<size_t>(nyh) * nyl * k, 0.0);
  std::vector<double> ys_total(static_cast<size_t>(nyl) * k, 0.0);
  std::vector<double> y_total(nyl, 0.0);
  std::vector<double> yh_y(static_cast<size_t>(nyh) * nyl, 0.0);
  for (size_t i = 0; i < pred.size(); ++i) {
    cell[(static_cast<size_t>(pred[i]) * nyl + label[i]) * k + sensitive[i]] += 1.0;
    ys_total[static_cast<size_t>(label[i]) * k + sensitive[i]] += 1.0;
    y_total[label[i]] += 1.0;
    yh_y[static_cast<size_t>(pred[i]) * nyl + label[i]] += 1.0;
  }
  double total = 0.0;
  for (int y = 0; y < nyl; ++y) {
    if (y_total[y] <= 0.0) continue;
    for (int s = 0; s < k; ++s) {
      const double nys = ys_total[static_cast<size_t>(y) * k + s];
      if (nys <= 0.0) continue;  // unpopulated (y,s) cells are excluded
      for (int yh = 0; yh < nyh; ++yh) {
        const double p_cond_ys =
            cell[(static_cast<size_t>(yh) * nyl + y) * k + s] / nys;
        const double p_cond_y = yh_y[static_cast<size_t>(yh) * nyl + y] / y_total[y];
        total += std::abs(p_cond_ys - p_cond_y);
      }
    }
  }
  return total;
}

double rho_tv(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  double total = 0.0;
  for (int s = 0; s < ys.cols; ++s) {
    if (ps[s] <= 0.0) continue;
    double tv = 0.0;
    for (int y = 0; y < ys.rows; ++y) tv += std::abs(ys.at(y, s) / ps[s] - py[y]);
    total += ps[s] * 0.5 * tv;
  }
  return total;
}

double rho_tv(const DiscreteJoint& joint) { return rho_tv(joint.ys_marginal()); }

double mutual_information(const Mat& ys, LogBase base) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  double mi = 0.0;
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      const double p = ys.at(y, s);
      if (p <= 0.0) continue;
      mi += p * std::log(p / (py[y] * ps[s]));
    }
  mi = std::max(mi, 0.0);
  return base == LogBase::nat ? mi : mi / kLn2;
}

double mutual_information(const DiscreteJoint& joint, LogBase base) {
  return mutual_information(joint.ys_marginal(), base);
}

double ermi(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  double sum = 0.0;
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      const double p = ys.at(y, s);
      if (p <= 0.0) continue;
      const double denom = py[y] * ps[s];
      if (denom <= 0.0)
        throw SingularSupport("ermi: positive mass on a zero product-marginal cell");
      sum += p * p / denom;
    }
  return std::max(sum - 1.0, 0.0);
}

double ermi(const DiscreteJoint& joint) { return ermi(joint.ys_marginal()); }

namespace {

// Deflated power iteration for the second singular value of
// B[y,s] = p(y,s) / sqrt(p(y) p(s)), restricted to the positive-support
// rows/columns. Also returns the singular pair embedded in full index space.
struct SecondSingular {
  double sigma = 0.0;
  Vec u;  // size ny
  Vec v;  // size ns
};

SecondSingular second_singular(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  std::vector<int> rows, cols;
  for (int y = 0; y < ys.rows; ++y)
    if (py[y] > 0.0) rows.push_back(y);
  for (int s = 0; s < ys.cols; ++s)
    if (ps[s] > 0.0) cols.push_back(s);
  if (rows.size() < 2 || cols.size() < 2)
    throw DegenerateMarginal("maximal_correlation: marginal with fewer than 2 outcomes");

  const int m = static_cast<int>(rows.size());
  const int n = static_cast<int>(cols.size());
  Mat b(m, n);
  Vec u1(m), v1(n);
  for (int i = 0; i < m; ++i) u1[i] = std::sqrt(py[rows[i]]);
  for (int j = 0; j < n; ++j) v1[j] = std::sqrt(ps[cols[j]]);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      b.at(i, j) = ys.at(rows[i], cols[j]) / (u1[i] * v1[j]) - u1[i] * v1[j];
  // b now holds the deflated matrix B - u1 v1^T (top pair is exactly (u1, v1)
  // with singular value 1).

  auto matvec = [&](const Vec& v, Vec& bv, Vec& btbv) {
    bv.assign(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) bv[i] += b.at(i, j) * v[j];
    btbv.assign(n, 0.0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) btbv[j] += b.at(i, j) * bv[i];
  };

  // Deterministic start: all-ones deflated against v1, falling back to basis
  // vectors if that direction vanishes.
  Vec v(n, 1.0);
  for (int attempt = 0; attempt <= n; ++attempt) {
    if (attempt > 0) {
      v.assign(n, 0.0);
      v[attempt - 1] = 1.0;
    }
    double proj = 0.0;
    for (int j = 0; j < n; ++j) proj += v[j] * v1[j];
    for (int j = 0; j < n; ++j) v[j] -= proj * v1[j];
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 1e-12) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
      break;
    }
  }

  Vec bv, btbv;
  double sigma2 = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    matvec(v, bv, btbv);
    sigma2 = 0.0;
    for (int j = 0; j < n; ++j) sigma2 += v[j] * btbv[j];
    sigma2 = std::max(sigma2, 0.0);
    double resid = 0.0;
    for (int j = 0; j < n; ++j) {
      const double r = btbv[j] - sigma2 * v[j];
      resid += r * r;
    }
    if (std::sqrt(resid) <= 1e-10) break;
    double norm = 0.0;
    for (double x : btbv) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 1e-15) {
      sigma2 = 0.0;
      break;
    }
    for (int j = 0; j < n; ++j) v[j] = btbv[j] / norm;
  }

  SecondSingular out;
  out.sigma = std::sqrt(std::max(sigma2, 0.0));
  out.u.assign(ys.rows, 0.0);
  out.v.assign(ys.cols, 0.0);
  matvec(v, bv, btbv);
  double bvnorm = 0.0;
  for (double x : bv) bvnorm += x * x;
  bvnorm = std::sqrt(bvnorm);
  for (int j = 0; j < n; ++j) out.v[cols[j]] = v[j];
  if (bvnorm > 1e-15)
    for (int i = 0; i < m; ++i) out.u[rows[i]] = bv[i] / bvnorm;
  return out;
}

}  // namespace

double maximal_correlation(const Mat& ys) {
  const double sigma = second_singular(ys).sigma;
  return std::clamp(sigma, 0.0, 1.0);
}

double maximal_correlation(const DiscreteJoint& joint) {
  return maximal_correlation(joint.ys_marginal());
}

Vec negative_rate(const std::vector<int>& pred, const std::vector<int>& sensitive) {
  if (pred.size() != sensitive.size()) throw InvalidInput("negative_rate: length mismatch");
  if (pred.empty()) throw InvalidInput("negative_rate: empty input");
  int k = 0;
  for (int s : sensitive) k = std::max(k, s + 1);
  Vec zeros(k, 0.0), totals(k, 0.0);
  for (size_t i = 0; i < pred.size(); ++i) {
    totals[sensitive[i]] += 1.0;
    if (pred[i] == 0) zeros[sensitive[i]] += 1.0;
  }
  Vec nr(k);
  for (int s = 0; s < k; ++s) {
    if (totals[s] <= 0.0)
      throw EmptyGroup("negative_rate: group " + std::to_string(s) + " empty");
    nr[s] = zeros[s] / totals[s];
  }
  return nr;
}

MeasureGrad mutual_information_grad(const Mat& ys, LogBase base) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  MeasureGrad out;
  out.d_joint = Mat(ys.rows, ys.cols);
  double mi = 0.0;
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      const double p = ys.at(y, s);
      const double denom = py[y] * ps[s];
      if (p > 0.0 && denom > 0.0) mi += p * std::log(p / denom);
      // Gradient clipped near the boundary so descent directions stay finite.
      const double pc = std::max(p, 1e-12);
      const double dc = std::max(denom, 1e-24);
      out.d_joint.at(y, s) = std::log(pc / dc) - 1.0;
    }
  out.value = std::max(mi, 0.0);
  if (base == LogBase::bit) {
    out.value /= kLn2;
    for (double& g : out.d_joint.a) g /= kLn2;
  }
  return out;
}

MeasureGrad ermi_grad(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  MeasureGrad out;
  out.d_joint = Mat(ys.rows, ys.cols);
  // Row/column quadratic sums reused by every gradient entry.
  Vec row_sum(ys.rows, 0.0), col_sum(ys.cols, 0.0);
  double value = 0.0;
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      const double p = ys.at(y, s);
      if (p <= 0.0) continue;
      const double denom = py[y] * ps[s];
      if (denom <= 0.0)
        throw SingularSupport("ermi_grad: positive mass on a zero product-marginal cell");
      value += p * p / denom;
      row_sum[y] += p * p / (py[y] * py[y] * ps[s]);
      col_sum[s] += p * p / (py[y] * ps[s] * ps[s]);
    }
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      const double denom = py[y] * ps[s];
      const double direct = denom > 0.0 ? 2.0 * ys.at(y, s) / denom : 0.0;
      out.d_joint.at(y, s) = direct - row_sum[y] - col_sum[s];
    }
  out.value = std::max(value - 1.0, 0.0);
  return out;
}

MeasureGrad maximal_correlation_grad(const Mat& ys) {
  const Vec py = row_marginal(ys);
  const Vec ps = col_marginal(ys);
  MeasureGrad out;
  out.d_joint = Mat(ys.rows, ys.cols);

  int rows_pos = 0, cols_pos = 0;
  for (double v : py) rows_pos += v > 0.0;
  for (double v : ps) cols_pos += v > 0.0;
  if (rows_pos < 2 || cols_pos < 2) {
    // A (near-)constant variable carries no dependence; value and gradient
    // are taken as zero.
    out.value = 0.0;
    return out;
  }

  const SecondSingular sv = second_singular(ys);
  out.value = sv.sigma;
  // Danskin-style gradient: the singular pair is held fixed.
  Vec bu(ys.rows, 0.0);  // (B v)_y
  Vec bv(ys.cols, 0.0);  // (u^T B)_s
  auto bval = [&](int y, int s) {
    const double denom = std::sqrt(py[y] * ps[s]);
    return denom > 0.0 ? ys.at(y, s) / denom : 0.0;
  };
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      bu[y] += bval(y, s) * sv.v[s];
      bv[s] += bval(y, s) * sv.u[y];
    }
  for (int y = 0; y < ys.rows; ++y)
    for (int s = 0; s < ys.cols; ++s) {
      if (py[y] <= 0.0 || ps[s] <= 0.0) continue;
      out.d_joint.at(y, s) = sv.u[y] * sv.v[s] / std::sqrt(py[y] * ps[s]) -
                             sv.u[y] * bu[y] / (2.0 * py[y]) -
                             sv.v[s] * bv[s] / (2.0 * ps[s]);
    }
  return out;
}

MeasureGrad dependence_grad(DependenceKind kind, const Mat& ys) {
  switch (kind) {
    case DependenceKind::MutualInformation:
      return mutual_information_grad(ys, LogBase::nat);
    case DependenceKind::ERMI:
      return ermi_grad(ys);
    case DependenceKind::MaximalCorrelation:
      return maximal_correlation_grad(ys);
    default:
      throw UnsupportedKind("dependence_grad: kind has no smooth joint gradient");
  }
}

MetricsRecord evaluate_metrics(const std::vector<int>& pred, const std::vector<int>& label,
                               const std::vector<int>& sensitive) {
  if (pred.size() != label.size() || pred.size() != sensitive.size() || pred.empty())
    throw InvalidInput("evaluate_metrics: bad input lengths");
  int k = 0;
  for (int s : sensitive) k = std::max(k, s + 1);
  Vec correct(k, 0.0), totals(k, 0.0);
  for (size_t i = 0; i < pred.size(); ++i) {
    totals[sensitive[i]] += 1.0;
    if (pred[i] == label[i]) correct[sensitive[i]] += 1.0;
  }
  MetricsRecord rec;
  rec.group_accuracy.resize(k);
  double acc = 0.0;
  for (int s = 0; s < k; ++s) {
    if (totals[s] <= 0.0)
      throw EmptyGroup("evaluate_metrics: group " + std::to_string(s) + " empty");
    rec.group_accuracy[s] = correct[s] / totals[s];
    acc += correct[s];
  }
  rec.accuracy = acc / pred.size();
  rec.ddp = ddp(empirical_joint(pred, sensitive));
  rec.deo = deo(pred, label, sensitive);
  rec.nr = negative_rate(pred, sensitive);
  return rec;
}

}  // namespace fairlab::measures
