#include "bellcert/ns_mle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bellcert {

namespace {

using Cond = std::array<std::array<double, 4>, 4>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

// Non-signaling coordinates: theta = (pA0, pA1, pB0, pB1, c00, c01, c10, c11)
// with P(11|xy) = c_xy, P(10|xy) = pA_x - c_xy, P(01|xy) = pB_y - c_xy.
struct NsCoords {
  Vec8 theta;

  // P(ab|xy) at [2x+y][2a+b]
  Cond conditionals() const {
    Cond p{};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const int s = 2 * x + y;
        const double c = theta[4 + s], pa = theta[x], pb = theta[2 + y];
        p[s][3] = c;
        p[s][2] = pa - c;
        p[s][1] = pb - c;
        p[s][0] = 1 - pa - pb + c;
      }
    return p;
  }

  static Vec8 gradient_of(int s, int ab) {
    const int x = s >> 1, y = s & 1;
    Vec8 g = Vec8::Zero();
    switch (ab) {
      case 3: g[4 + s] = 1; break;
      case 2: g[x] = 1; g[4 + s] = -1; break;
      case 1: g[2 + y] = 1; g[4 + s] = -1; break;
      default: g[x] = -1; g[2 + y] = -1; g[4 + s] = 1; break;
    }
    return g;
  }

  static NsCoords from(const JointDistribution& q) {
    NsCoords c;
    for (int x = 0; x < 2; ++x) c.theta[x] = 0.5 * (q.marginal_a(1, x, 0) + q.marginal_a(1, x, 1));
    for (int y = 0; y < 2; ++y) c.theta[2 + y] = 0.5 * (q.marginal_b(1, 0, y) + q.marginal_b(1, 1, y));
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) c.theta[4 + 2 * x + y] = q.conditional(1, 1, x, y);
    return c;
  }
};

double objective(const Cond& f, const Cond& p) {
  double s = 0;
  for (int c = 0; c < 4; ++c)
    for (int o = 0; o < 4; ++o)
      if (f[c][o] > 0) s += f[c][o] * std::log(0.25 * p[c][o]);
  return s;
}

bool admissible(const Cond& f, const Cond& p) {
  for (int c = 0; c < 4; ++c)
    for (int o = 0; o < 4; ++o) {
      if (p[c][o] < 0) return false;
      if (f[c][o] > 0 && !(p[c][o] > 0)) return false;
    }
  return true;
}

struct PolishOutcome {
  Cond p;
  double value;
  bool stationary;
};

// Damped Newton ascent; gives up quietly when the curvature is singular
// (optimum on a face of the polytope) and leaves the caller's iterate alone.
PolishOutcome newton_polish(const Cond& f, NsCoords start, double start_value,
                            std::vector<double>* trace) {
  PolishOutcome out{start.conditionals(), start_value, false};
  NsCoords cur = start;
  double value = start_value;
  for (int iter = 0; iter < 100; ++iter) {
    const Cond p = cur.conditionals();
    Vec8 grad = Vec8::Zero();
    Mat8 neg_h = Mat8::Zero();
    for (int s = 0; s < 4; ++s)
      for (int ab = 0; ab < 4; ++ab) {
        if (f[s][ab] <= 0) continue;
        const Vec8 g = NsCoords::gradient_of(s, ab);
        grad += (f[s][ab] / p[s][ab]) * g;
        neg_h += (f[s][ab] / (p[s][ab] * p[s][ab])) * (g * g.transpose());
      }
    Eigen::LDLT<Mat8> ldlt(neg_h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return out;
    const auto diag = ldlt.vectorD();
    if (diag.minCoeff() <= 1e-13 * diag.maxCoeff()) return out;
    const Vec8 step = ldlt.solve(grad);
    const double decrement = grad.dot(step);
    if (!(decrement >= 0)) return out;
    if (decrement < 1e-28) {
      out.stationary = true;
      return out;
    }
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      NsCoords trial{cur.theta + t * step};
      const Cond pt = trial.conditionals();
      if (!admissible(f, pt)) continue;
      const double v = objective(f, pt);
      if (v >= value) {
        moved = v > value;
        cur = trial;
        value = v;
        break;
      }
    }
    if (!moved) {
      out.stationary = decrement < 1e-20;
      return out;
    }
    out.p = cur.conditionals();
    out.value = value;
    if (trace) trace->push_back(value);
  }
  return out;
}

}  // namespace

std::array<std::array<double, 4>, 4> conditional_frequencies(const CountsTable& counts) {
  Cond f{};
  for (int s = 0; s < 4; ++s) {
    const auto& row = counts.counts[s];
    const std::uint64_t total = row[0] + row[1] + row[2] + row[3];
    if (total == 0)
      throw Error(ErrorKind::EmptySettingCell, "no trials with x=" + std::to_string(s >> 1) +
                                                   ", y=" + std::to_string(s & 1));
    for (int o = 0; o < 4; ++o) f[s][o] = static_cast<double>(row[o]) / static_cast<double>(total);
  }
  return f;
}

double log_likelihood(const std::array<std::array<double, 4>, 4>& f, const JointDistribution& q) {
  double s = 0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double fv = f[2 * x + y][2 * a + b];
          if (fv > 0) s += fv * std::log(q(a, b, x, y));
        }
  return s;
}

MleResult fit_nonsignaling(const CountsTable& counts, const MleConfig& cfg, const MleOptions& opts) {
  if (!(cfg.objective_tol > 0) || !(cfg.feasibility_tol > 0) || cfg.max_iters < 1)
    throw Error(ErrorKind::InvalidParams, "MleConfig tolerances must be positive and max_iters >= 1");
  const Cond f = conditional_frequencies(counts);
  const auto& verts = polytope_vertices();

  Table16 fc{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) fc[cell_index(a, b, x, y)] = f[2 * x + y][2 * a + b];

  std::array<double, 24> lam;
  if (opts.initial_weights.empty()) {
    lam.fill(1.0 / 24);
  } else {
    if (opts.initial_weights.size() != 24)
      throw Error(ErrorKind::LengthMismatch, "initial weights must have 24 entries");
    double s = 0;
    for (int k = 0; k < 24; ++k) {
      if (!(opts.initial_weights[k] > 0))
        throw Error(ErrorKind::InvalidParams, "initial weights must be strictly positive");
      s += opts.initial_weights[k];
    }
    for (int k = 0; k < 24; ++k) lam[k] = opts.initial_weights[k] / s;
  }

  auto mixture = [&](const std::array<double, 24>& w) {
    Table16 q{};
    for (int k = 0; k < 24; ++k)
      for (int i = 0; i < 16; ++i) q[i] += w[k] * verts[k].p[i];
    return q;
  };
  auto value_of = [&](const Table16& q) {
    double s = 0;
    for (int i = 0; i < 16; ++i)
      if (fc[i] > 0) s += fc[i] * std::log(q[i]);
    return s;
  };

  Table16 q = mixture(lam);
  double value = value_of(q);
  if (opts.trace) opts.trace->push_back(value);

  double eta = 1.0;
  int quiet = 0;
  std::int64_t iter = 0;
  bool converged = false;
  while (iter < cfg.max_iters) {
    ++iter;
    std::array<double, 24> g{};
    for (int k = 0; k < 24; ++k)
      for (int i = 0; i < 16; ++i)
        if (fc[i] > 0 && verts[k].p[i] > 0) g[k] += fc[i] / q[i] * verts[k].p[i];
    const double gmax = *std::max_element(g.begin(), g.end());

    double next_value = value;
    for (int k = 0; k < 80; ++k) {
      std::array<double, 24> w;
      double z = 0;
      for (int j = 0; j < 24; ++j) {
        w[j] = lam[j] * std::exp(eta * (g[j] - gmax));
        z += w[j];
      }
      for (double& wj : w) wj /= z;
      const Table16 qn = mixture(w);
      const double vn = value_of(qn);
      if (vn >= value) {
        lam = w;
        q = qn;
        next_value = vn;
        eta = std::min(eta * 2, 1e12);
        break;
      }
      eta *= 0.5;
    }
    const double rel = (next_value - value) / std::max(std::abs(value), 1e-300);
    value = next_value;
    if (opts.trace) opts.trace->push_back(value);
    quiet = (rel < cfg.objective_tol) ? quiet + 1 : 0;
    if (quiet >= 10) {
      converged = true;
      break;
    }
  }

  MleResult r;
  r.weights = lam;
  r.iterations = iter;
  JointDistribution qd;
  qd.p = q;

  if (opts.polish) {
    PolishOutcome pol = newton_polish(f, NsCoords::from(qd), value, opts.trace);
    if (pol.value >= value) {
      qd = JointDistribution::from_conditionals(pol.p);
      value = pol.value;
    }
    if (pol.stationary) converged = true;
  }
  if (!converged)
    throw Error(ErrorKind::NotConverged,
                "mirror ascent hit max_iters=" + std::to_string(cfg.max_iters) +
                    " with relative improvement above objective_tol");

  r.q = qd;
  r.log_likelihood = value;
  r.converged = true;
  return r;
}

}  // namespace bellcert
