#include "bellcert/pm_compare.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace bellcert {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Affine coordinates of a uniform-settings non-signaling table:
// (pA0, pA1, pB0, pB1, c00, c01, c10, c11, 1), c_xy = P(++|xy).
// Each is linear in the table, so the same map sends vertex weights to coordinates.
VectorXd ns_coords(const JointDistribution& d) {
  VectorXd v(9);
  for (int x = 0; x < 2; ++x) {
    double s = 0;
    for (int y = 0; y < 2; ++y) s += 4 * (d(1, 0, x, y) + d(1, 1, x, y));
    v[x] = s / 2;
  }
  for (int y = 0; y < 2; ++y) {
    double s = 0;
    for (int x = 0; x < 2; ++x) s += 4 * (d(0, 1, x, y) + d(1, 1, x, y));
    v[2 + y] = s / 2;
  }
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) v[4 + 2 * x + y] = 4 * d(1, 1, x, y);
  double total = 0;
  for (double p : d.p) total += p;
  v[8] = total;
  return v;
}

// Least-squares projection onto the uniform-settings non-signaling affine hull.
JointDistribution project_ns(const JointDistribution& d) {
  MatrixXd a = MatrixXd::Zero(16, 8);
  VectorXd off = VectorXd::Zero(16), target(16);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const int s = 2 * x + y;
      // rows in (a,b) order; columns pA0 pA1 pB0 pB1 c00 c01 c10 c11
      const int r11 = cell_index(1, 1, x, y), r10 = cell_index(1, 0, x, y);
      const int r01 = cell_index(0, 1, x, y), r00 = cell_index(0, 0, x, y);
      a(r11, 4 + s) = 0.25;
      a(r10, x) = 0.25;
      a(r10, 4 + s) = -0.25;
      a(r01, 2 + y) = 0.25;
      a(r01, 4 + s) = -0.25;
      a(r00, x) = -0.25;
      a(r00, 2 + y) = -0.25;
      a(r00, 4 + s) = 0.25;
      off[r00] = 0.25;
    }
  for (int i = 0; i < 16; ++i) target[i] = d.p[i] - off[i];
  const VectorXd theta = a.colPivHouseholderQr().solve(target);
  const VectorXd proj = a * theta + off;
  JointDistribution out;
  for (int i = 0; i < 16; ++i) out.p[i] = proj[i];
  return out;
}

// Dense two-phase simplex with Bland's rule: minimize c.w subject to A w = b, w >= 0.
std::optional<VectorXd> simplex_min(MatrixXd a, VectorXd b, const VectorXd& c) {
  constexpr double tol = 1e-12;
  const auto m = a.rows(), n = a.cols();
  for (Eigen::Index i = 0; i < m; ++i)
    if (b[i] < 0) {
      a.row(i) *= -1;
      b[i] = -b[i];
    }
  // Tableau columns: n originals, m artificials, rhs.
  MatrixXd tab = MatrixXd::Zero(m, n + m + 1);
  tab.leftCols(n) = a;
  tab.block(0, n, m, m) = MatrixXd::Identity(m, m);
  tab.col(n + m) = b;
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

  auto pivot = [&](Eigen::Index r, Eigen::Index col) {
    tab.row(r) /= tab(r, col);
    for (Eigen::Index i = 0; i < m; ++i)
      if (i != r && tab(i, col) != 0) tab.row(i) -= tab(i, col) * tab.row(r);
    basis[r] = col;
  };

  auto run = [&](const VectorXd& cost, Eigen::Index ncols) {
    for (int iter = 0; iter < 10000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols && enter < 0; ++j) {
        if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
        double reduced = cost[j];
        for (Eigen::Index i = 0; i < m; ++i) reduced -= cost[basis[i]] * tab(i, j);
        if (reduced < -tol) enter = j;
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (tab(i, enter) <= tol) continue;
        const double ratio = tab(i, n + m) / tab(i, enter);
        if (leave < 0 || ratio < best - tol ||
            (std::abs(ratio - best) <= tol && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    return false;
  };

  VectorXd phase1 = VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  if (!run(phase1, n + m)) return std::nullopt;
  double infeas = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] >= n) infeas += tab(i, n + m);
  if (infeas > 1e-10) return std::nullopt;

  // Drive zero-level artificials out of the basis; rows with no pivot are redundant.
  std::vector<bool> redundant(m, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n && col < 0; ++j)
      if (std::abs(tab(i, j)) > 1e-9 && std::find(basis.begin(), basis.end(), j) == basis.end()) col = j;
    if (col >= 0)
      pivot(i, col);
    else
      redundant[i] = true;
  }
  for (Eigen::Index i = 0; i < m; ++i)
    if (redundant[i]) tab.row(i).setZero();

  VectorXd phase2 = VectorXd::Zero(n + m);
  phase2.head(n) = c;
  for (Eigen::Index i = 0; i < m; ++i)
    if (redundant[i]) basis[i] = n + i;
  if (!run(phase2, n)) return std::nullopt;

  VectorXd w = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) w[basis[i]] = std::max(0.0, tab(i, n + m));
  return w;
}

}  // namespace

Table16 chsh_function() {
  Table16 t{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          const bool both = x == 1 && y == 1;
          t[cell_index(a, b, x, y)] = (both ? a != b : a == b) ? 1.0 : 0.0;
        }
  return t;
}

PrDecomposition pr_weight(const JointDistribution& d) {
  const JointDistribution proj = project_ns(d);
  for (int i = 0; i < 16; ++i)
    if (std::abs(proj.p[i] - d.p[i]) > 1e-9)
      throw Error(ErrorKind::Infeasible, "input is not a uniform-settings non-signaling table");

  const auto lr = lr_vertices();
  const auto pr = pr_boxes();
  const VectorXd target = ns_coords(proj);

  std::optional<PrDecomposition> best;
  for (int k = 0; k < 8; ++k) {
    MatrixXd a(9, 17);
    a.col(0) = ns_coords(pr[k]);
    for (int j = 0; j < 16; ++j) a.col(1 + j) = ns_coords(lr[j]);
    VectorXd cost = VectorXd::Zero(17);
    cost[0] = 1;
    const auto w = simplex_min(a, target, cost);
    if (!w) continue;
    if (best && !(w->coeff(0) < best->p - 1e-12)) continue;
    PrDecomposition dec;
    dec.p = w->coeff(0);
    dec.pr_index = k;
    for (int j = 0; j < 16; ++j) dec.lr_weights[j] = w->coeff(1 + j);
    best = dec;
  }
  if (!best) throw Error(ErrorKind::Infeasible, "no decomposition with a single PR box exists");
  return *best;
}

JointDistribution reconstruct(const PrDecomposition& dec) {
  const auto lr = lr_vertices();
  const auto pr = pr_boxes();
  JointDistribution out;
  for (int i = 0; i < 16; ++i) {
    double v = dec.p * pr[dec.pr_index].p[i];
    for (int j = 0; j < 16; ++j) v += dec.lr_weights[j] * lr[j].p[i];
    out.p[i] = v;
  }
  return out;
}

double g_bound(double x, double i_ns) {
  if (!(i_ns > 1)) throw Error(ErrorKind::InvalidParams, "i_ns must exceed 1");
  return std::clamp(1 + (1 - x) / (2 * (i_ns - 1)), 0.25, 1.0);
}

double pm_min_trials(const PmBoundInputs& in) {
  if (!(in.p > 0 && in.p < 1) || !(in.eps > 0 && in.eps <= 1))
    throw Error(ErrorKind::InvalidParams, "need 0 < p < 1 and 0 < eps <= 1");
  const double base = 8 * std::log(1 / in.eps);
  if (in.i_ns && in.j_m) {
    const double gap = *in.j_m - 1;
    return base * (*in.i_ns) * (*in.i_ns) / (gap * gap);
  }
  return base / (in.p * in.p);
}

}  // namespace bellcert
