#include "bellcert/pbr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bellcert/normal.hpp"

namespace bellcert {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Constraint {
  VectorXd a;      // coefficients on the free entries
  double rhs = 1;  // 1 minus the contribution of pinned entries
};

struct Problem {
  std::vector<int> free_cells;
  VectorXd q;  // q restricted to free cells
  std::vector<Constraint> cons;

  double slack(const Constraint& c, const VectorXd& t) const { return c.rhs - c.a.dot(t); }

  bool strictly_feasible(const VectorXd& t) const {
    if ((t.array() <= 0).any()) return false;
    for (const auto& c : cons)
      if (!(slack(c, t) > 0)) return false;
    return true;
  }

  double objective(const VectorXd& t) const {
    double s = 0;
    for (Eigen::Index j = 0; j < t.size(); ++j)
      if (q[j] > 0) s += q[j] * std::log(t[j]);
    return s;
  }

  // tau * objective + log barriers on slacks and on the entries themselves
  double barrier(const VectorXd& t, double tau) const {
    double s = tau * objective(t);
    for (const auto& c : cons) s += std::log(slack(c, t));
    s += t.array().log().sum();
    return s;
  }
};

Problem build_problem(const JointDistribution& q, bool free_00) {
  Problem pr;
  for (int i = 0; i < 16; ++i) {
    const bool is00 = (i >> 2) == 0;  // a = b = 0
    if (free_00 || !is00) pr.free_cells.push_back(i);
  }
  const auto nfree = static_cast<Eigen::Index>(pr.free_cells.size());
  pr.q.resize(nfree);
  for (Eigen::Index j = 0; j < nfree; ++j) pr.q[j] = q.p[pr.free_cells[j]];

  const auto lr = lr_vertices();
  for (const auto& v : lr) {
    Constraint c;
    c.a = VectorXd::Zero(nfree);
    double pinned = 0;
    for (int i = 0; i < 16; ++i) {
      auto it = std::find(pr.free_cells.begin(), pr.free_cells.end(), i);
      if (it == pr.free_cells.end())
        pinned += v.p[i];
      else
        c.a[it - pr.free_cells.begin()] = v.p[i];
    }
    c.rhs = 1 - pinned;
    if (c.a.isZero()) continue;  // only the all-zero vertex with pinned t00; E = 1 identically
    pr.cons.push_back(c);
  }
  return pr;
}

// Equality-constrained Newton on the constraints the barrier path identified as
// active. Lands the iterate on the face exactly instead of 1/tau inside it.
bool active_set_polish(const Problem& pr, VectorXd& t) {
  if ((pr.q.array() <= 0).any()) return false;
  std::vector<const Constraint*> active;
  for (const auto& c : pr.cons)
    if (pr.slack(c, t) < 1e-7) active.push_back(&c);
  const auto n = t.size();
  const auto k = static_cast<Eigen::Index>(active.size());
  if (k == 0 || k > n) return false;

  VectorXd cur = t;
  for (int iter = 0; iter < 20; ++iter) {
    MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
    VectorXd rhs(n + k);
    for (Eigen::Index j = 0; j < n; ++j) {
      kkt(j, j) = pr.q[j] / (cur[j] * cur[j]);
      rhs[j] = pr.q[j] / cur[j];
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      kkt.block(n + i, 0, 1, n) = active[i]->a.transpose();
      kkt.block(0, n + i, n, 1) = active[i]->a;
      rhs[n + i] = active[i]->rhs - active[i]->a.dot(cur);
    }
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (lu.rank() < n + k) return false;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd next = cur + sol.head(n);
    if ((next.array() <= 0).any()) return false;
    const double change = (next - cur).cwiseAbs().maxCoeff();
    cur = next;
    if (change < 1e-17) {
      if ((sol.tail(k).array() < -1e-12).any()) return false;
      break;
    }
  }
  for (const auto& c : pr.cons)
    if (pr.slack(c, cur) < -1e-15) return false;
  if (pr.objective(cur) < pr.objective(t)) return false;
  t = cur;
  return true;
}

}  // namespace

double log_objective(const JointDistribution& q, const BellFunction& t) {
  double s = 0;
  for (int i = 0; i < 16; ++i)
    if (q.p[i] > 0) s += q.p[i] * std::log(t.t[i]);
  return s;
}

double max_lr_expectation(const BellFunction& t) {
  double best = -1;
  for (const auto& v : lr_vertices()) best = std::max(best, expectation(v, t.t));
  return best;
}

BellFunction optimize_bell_function(const JointDistribution& q, const MleConfig& cfg,
                                    const PbrOptions& opts) {
  double violating_mass = 0;
  for (int i = 4; i < 16; ++i) violating_mass += q.p[i];
  if (!(violating_mass > 0))
    throw Error(ErrorKind::DegenerateInput, "q puts no mass on outcomes other than (0,0)");

  Problem pr = build_problem(q, opts.free_00);
  const auto n = static_cast<Eigen::Index>(pr.free_cells.size());
  VectorXd t = VectorXd::Constant(n, 0.5);
  if (opts.free_00) t.setConstant(0.5);

  const double nbarrier = static_cast<double>(pr.cons.size() + n);
  const double gap_target = std::max(cfg.objective_tol * 1e-2, 1e-16);
  double tau = 1.0;
  std::int64_t newton_steps = 0;

  for (;;) {
    for (int iter = 0; iter < 200; ++iter) {
      if (++newton_steps > cfg.max_iters)
        throw Error(ErrorKind::NotConverged, "barrier Newton exceeded max_iters");
      VectorXd g(n);
      MatrixXd h = MatrixXd::Zero(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        g[j] = (tau * pr.q[j] + 1) / t[j];
        h(j, j) = (tau * pr.q[j] + 1) / (t[j] * t[j]);
      }
      for (const auto& c : pr.cons) {
        const double s = pr.slack(c, t);
        g -= c.a / s;
        h += (c.a * c.a.transpose()) / (s * s);
      }
      Eigen::LDLT<MatrixXd> ldlt(h);
      const VectorXd step = ldlt.solve(g);
      const double decrement = g.dot(step);
      if (!(decrement > 1e-20)) break;

      const double base = pr.barrier(t, tau);
      double alpha = 1.0;
      bool moved = false;
      for (int k = 0; k < 80; ++k, alpha *= 0.5) {
        const VectorXd trial = t + alpha * step;
        if (!pr.strictly_feasible(trial)) continue;
        if (pr.barrier(trial, tau) >= base + 0.25 * alpha * decrement) {
          t = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      if (decrement < 1e-18) break;
    }
    if (nbarrier / tau < gap_target) break;
    tau *= 8;
  }
  active_set_polish(pr, t);

  BellFunction out;
  out.t.fill(1.0);
  for (Eigen::Index j = 0; j < n; ++j) out.t[pr.free_cells[j]] = t[j];
  return out;
}

BellBound compute_m(const BellFunction& t) {
  const auto& verts = polytope_vertices();
  BellBound b;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 24; ++k) {
    const double e = expectation(verts[k], t.t);
    if (e > best) {
      best = e;
      b.achieving_vertex = k;
    }
  }
  b.m = best - 1;
  if (!(b.m > 0))
    throw Error(ErrorKind::NoViolationPossible, "max vertex expectation of T does not exceed 1");
  return b;
}

ThresholdPlan choose_vthresh(const BellFunction& t, const JointDistribution& q, std::int64_t n,
                             double quantile) {
  if (n < 1) throw Error(ErrorKind::InvalidParams, "n must be positive");
  ThresholdPlan plan;
  plan.n = n;
  plan.quantile = quantile;
  plan.z = normal_quantile(quantile);
  double mu = 0, second = 0;
  for (int i = 0; i < 16; ++i) {
    if (!(q.p[i] > 0)) continue;
    const double l = std::log(t.t[i]);
    mu += q.p[i] * l;
    second += q.p[i] * l * l;
  }
  plan.mu = mu;
  plan.sigma2 = std::max(0.0, second - mu * mu);
  const double nd = static_cast<double>(n);
  plan.ln_vthresh = std::max(0.0, nd * mu - plan.z * std::sqrt(nd * plan.sigma2));
  return plan;
}

double asymptotic_rate(const BellFunction& t, const JointDistribution& q, double m) {
  if (!(m > 0)) throw Error(ErrorKind::InvalidParams, "m must be positive");
  return log_objective(q, t) / std::numbers::ln2 / (2 * m);
}

}  // namespace bellcert
