#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bellcert/entropy.hpp"
#include "bellcert/error.hpp"
#include "bellcert/normal.hpp"
#include "bellcert/pbr.hpp"
#include "reference_data.hpp"

using namespace bellcert;

namespace {

double lr_expectation(const BellFunction& t, const JointDistribution& v) { return expectation(v, t.t); }

JointDistribution random_ns(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(24);
  double s = 0;
  for (double& v : w) s += v = std::pow(e(rng), 3);
  for (double& v : w) v /= s;
  return mix(w, polytope_vertices());
}

// The 12 entries off (0,0) that optimize_bell_function may move.
std::vector<int> free_cells() {
  std::vector<int> cells;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          if (a || b) cells.push_back(cell_index(a, b, x, y));
  return cells;
}

}  // namespace

TEST_CASE("Table 1 reproduction") {
  const JointDistribution q = testing::xor3_mle();
  const BellFunction t = optimize_bell_function(q);
  const BellFunction published = testing::xor3_bell_function();

  CHECK(log_objective(q, t) >= log_objective(q, published) - 1e-12);
  CHECK(max_lr_expectation(t) <= 1 + 1e-9);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) CHECK(t(0, 0, x, y) == 1.0);
  for (double v : t.t) CHECK(v > 0);

  const BellBound b = compute_m(published);
  CHECK(std::abs(b.m - testing::kXor3M) <= 1e-6);
  CHECK(b.achieving_vertex >= 16);
  CHECK(std::abs(expectation(q, published.t) - 1.0000003928) <= 1e-9);

  // Entry-wise agreement is not required; large gaps would still be worth seeing.
  for (int i = 0; i < 16; ++i) CHECK(std::abs(t.t[i] - published.t[i]) < 1e-3);
}

TEST_CASE("LR vertex input gives the all-ones function") {
  const JointDistribution q = lr_vertices()[15];
  const BellFunction t = optimize_bell_function(q);
  CHECK(std::abs(log_objective(q, t)) <= 1e-9);
  CHECK(max_lr_expectation(t) <= 1 + 1e-9);

  CHECK_THROWS_AS(optimize_bell_function(lr_vertices()[0]), Error);
  try {
    optimize_bell_function(lr_vertices()[0]);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateInput);
  }
}

TEST_CASE("half PR box, half all-zero vertex") {
  const std::array<double, 2> w{0.5, 0.5};
  const std::array<JointDistribution, 2> parts{pr_boxes()[0], lr_vertices()[0]};
  const JointDistribution q = mix(w, parts);
  const BellFunction t = optimize_bell_function(q);
  CHECK(log_objective(q, t) > 0);
  for (const auto& v : lr_vertices()) CHECK(lr_expectation(t, v) <= 1 + 1e-9);
  for (double v : t.t) CHECK(v > 0);
  CHECK(compute_m(t).m > 0);
}

TEST_CASE("compute_m") {
  BellFunction ones;
  ones.t.fill(1.0);
  try {
    compute_m(ones);
    FAIL("expected NoViolationPossible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoViolationPossible);
  }

  const BellFunction t = optimize_bell_function(testing::xor3_mle());
  const BellBound b = compute_m(t);
  CHECK(b.achieving_vertex >= 16);
  double best = -1;
  for (const auto& v : polytope_vertices()) best = std::max(best, expectation(v, t.t) - 1);
  CHECK(b.m == best);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10000; ++rep) CHECK(expectation(random_ns(rng), t.t) <= 1 + b.m + 1e-12);
}

TEST_CASE("single-trial bound holds for random non-signaling distributions") {
  const BellFunction t = optimize_bell_function(testing::xor3_mle());
  const double m = compute_m(t).m;
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 2000; ++rep) {
    const JointDistribution d = random_ns(rng);
    double worst = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) worst = std::max(worst, d.conditional(a, b, x, y));
    CHECK(worst <= single_trial_bound(expectation(d, t.t), m) + 1e-9);
  }
}

TEST_CASE("optimality certificate under feasible perturbations") {
  const JointDistribution q = testing::xor3_mle();
  const BellFunction t = optimize_bell_function(q);
  const double base = log_objective(q, t);
  const auto cells = free_cells();
  const auto lr = lr_vertices();

  // Constraints active at the optimum; moving inside their common null space keeps them tight.
  std::vector<int> active;
  for (int k = 0; k < 16; ++k)
    if (lr_expectation(t, lr[k]) > 1 - 1e-9) active.push_back(k);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(active.size()), 12);
  for (std::size_t r = 0; r < active.size(); ++r)
    for (int c = 0; c < 12; ++c) g(static_cast<Eigen::Index>(r), c) = lr[active[r]].p[cells[c]];
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  const Eigen::MatrixXd null = lu.kernel();

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  int tried = 0;
  for (int rep = 0; rep < 100; ++rep) {
    // Either slide along the active face or step strictly inward from it.
    Eigen::VectorXd dir(12);
    if (null.cols() > 0 && null.norm() > 0 && rep % 2 == 0) {
      Eigen::VectorXd c(null.cols());
      for (auto& v : c) v = n01(rng);
      dir = null * c;
    } else {
      dir.setZero();
      for (std::size_t r = 0; r < active.size(); ++r) dir -= u01(rng) * g.row(static_cast<Eigen::Index>(r)).transpose();
      for (auto& v : dir) v += 1e-3 * n01(rng);
    }
    dir /= dir.norm();
    for (double sign : {1.0, -1.0}) {
      BellFunction p = t;
      for (int c = 0; c < 12; ++c) p.t[cells[c]] += sign * 1e-6 * dir[c];
      if (max_lr_expectation(p) > 1 + 1e-12) continue;
      ++tried;
      CHECK(log_objective(q, p) - base <= 1e-10);
    }
  }
  CHECK(tried >= 100);
}

TEST_CASE("choose_vthresh") {
  const JointDistribution q = testing::xor3_mle();
  const BellFunction t = testing::xor3_bell_function();
  const ThresholdPlan p = choose_vthresh(t, q, testing::kXor3ProtocolTrials, 0.95);
  CHECK(std::exp(p.ln_vthresh) == doctest::Approx(testing::kXor3VThresh).epsilon(0.02));
  CHECK(p.z == doctest::Approx(1.6448536269514724).epsilon(1e-12));
  const double n = static_cast<double>(testing::kXor3ProtocolTrials);
  CHECK(p.ln_vthresh == doctest::Approx(n * p.mu - p.z * std::sqrt(n * p.sigma2)).epsilon(1e-14));

  const ThresholdPlan one = choose_vthresh(t, q, 1, 0.5);
  CHECK(one.z == 0.0);
  CHECK(one.ln_vthresh == doctest::Approx(one.mu).epsilon(1e-15));

  const JointDistribution lr = lr_vertices()[15];
  const ThresholdPlan clamped = choose_vthresh(t, lr, 1000, 0.95);
  CHECK(clamped.mu <= 0);
  CHECK(clamped.ln_vthresh == 0.0);
}

TEST_CASE("asymptotic rate") {
  const JointDistribution q = testing::xor3_mle();
  const BellFunction t = testing::xor3_bell_function();
  const double rate = asymptotic_rate(t, q, testing::kXor3M);
  CHECK(rate == doctest::Approx(1.19e-5).epsilon(0.02));
  CHECK(rate == doctest::Approx(choose_vthresh(t, q, 1, 0.5).mu * std::log2(std::exp(1.0)) / (2 * testing::kXor3M))
                    .epsilon(1e-12));

  const JointDistribution zero = lr_vertices()[0];
  CHECK(asymptotic_rate(t, zero, testing::kXor3M) == 0.0);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == 0.0);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(1e-12, 1 - 1e-12);
  for (int rep = 0; rep < 2000; ++rep) {
    const double p = u(rng);
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(two_tailed_p(10) == doctest::Approx(1.5239706946e-23).epsilon(1e-8));
}
