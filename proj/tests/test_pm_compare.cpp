#include <doctest.h>

#include <cmath>
#include <random>

#include "bellcert/error.hpp"
#include "bellcert/pm_compare.hpp"
#include "reference_data.hpp"

using namespace bellcert;

namespace {

double max_conditional(const JointDistribution& d) {
  double worst = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) worst = std::max(worst, d.conditional(a, b, x, y));
  return worst;
}

// p * PR_k + (1 - p) * (random LR mixture)
JointDistribution one_box_mixture(std::mt19937_64& rng, double p, int k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(17);
  std::vector<JointDistribution> parts;
  parts.push_back(pr_boxes()[k]);
  w[0] = p;
  double s = 0;
  for (int j = 1; j < 17; ++j) s += w[j] = std::pow(e(rng), 3);
  for (int j = 1; j < 17; ++j) w[j] *= (1 - p) / s;
  for (const auto& v : lr_vertices()) parts.push_back(v);
  return mix(w, parts);
}

}  // namespace

TEST_CASE("CHSH function") {
  const Table16 t = chsh_function();
  for (const auto& v : lr_vertices()) CHECK(expectation(v, t) <= 0.75 + 1e-15);
  CHECK(expectation(pr_boxes()[0], t) == 1.0);
  CHECK(std::abs(expectation(testing::xor3_mle(), t) - 0.750008165) <= 1e-8);
}

TEST_CASE("PR weight examples") {
  for (int k : {0, 7, 12}) {
    const PrDecomposition d = pr_weight(lr_vertices()[k]);
    CHECK(d.p <= 1e-12);
  }
  CHECK(pr_weight(pr_boxes()[0]).p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pr_weight(pr_boxes()[0]).pr_index == 0);
  CHECK(pr_weight(pr_boxes()[5]).pr_index == 5);

  const PrDecomposition s3 = pr_weight(testing::xor3_mle());
  CHECK(s3.p == doctest::Approx(3.266e-5).epsilon(0.02));
  CHECK(s3.pr_index == 0);
}

TEST_CASE("decompositions reconstruct the input and are minimal") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 1000; ++rep) {
    const double p = 0.3 * u(rng);
    const int k = static_cast<int>(rng() % 8);
    const JointDistribution d = one_box_mixture(rng, p, k);
    const PrDecomposition dec = pr_weight(d);
    CHECK(dec.p <= p + 1e-9);
    CHECK(dec.p >= -1e-12);
    double total = dec.p;
    for (double w : dec.lr_weights) {
      CHECK(w >= 0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    const JointDistribution back = reconstruct(dec);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(back.p[i] - d.p[i]) <= 1e-9);
  }
  const PrDecomposition s3 = pr_weight(testing::xor3_mle());
  const JointDistribution back = reconstruct(s3);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(back.p[i] - testing::xor3_mle().p[i]) <= 1e-9);
}

TEST_CASE("signaling input is rejected") {
  JointDistribution d = lr_vertices()[0];
  d.at(0, 0, 0, 0) = 0.2;
  d.at(1, 0, 0, 0) = 0.05;
  try {
    pr_weight(d);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("g bound") {
  CHECK(g_bound(1, 2) == 1.0);
  CHECK(g_bound(2, 2) == 0.5);
  CHECK(g_bound(4.0 / 3, 4.0 / 3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g_bound(100, 2) == 0.25);
  CHECK_THROWS_AS(g_bound(1, 1), Error);

  // CHSH rescaled so that the LR maximum is 1 and the NS maximum is 4/3.
  const Table16 c = chsh_function();
  std::mt19937_64 rng(72);
  std::exponential_distribution<double> e(1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> w(24);
    double s = 0;
    for (double& v : w) s += v = std::pow(e(rng), 3);
    for (double& v : w) v /= s;
    const JointDistribution d = mix(w, polytope_vertices());
    const double x = expectation(d, c) / 0.75;
    CHECK(max_conditional(d) <= g_bound(x, 4.0 / 3) + 1e-9);
  }
}

TEST_CASE("PM minimum trials") {
  CHECK(pm_min_trials({0.1, 1.0, {}, {}}) == 0.0);
  const double n = pm_min_trials({3.266e-5, 0.05, {}, {}});
  CHECK(n == doctest::Approx(8 * std::log(20.0) / (3.266e-5 * 3.266e-5)).epsilon(1e-15));
  CHECK(n >= 2.0e10);
  CHECK(n <= 2.6e10);
  CHECK(pm_min_trials({2 * 3.266e-5, 0.05, {}, {}}) == doctest::Approx(n / 4).epsilon(1e-14));
  // General form: 8 ln(1/eps) I_ns^2 / (J_m - 1)^2.
  CHECK(pm_min_trials({0.01, 0.05, 4.0 / 3, 1.02}) ==
        doctest::Approx(8 * std::log(20.0) * (16.0 / 9) / (0.02 * 0.02)).epsilon(1e-14));
  CHECK_THROWS_AS(pm_min_trials({0, 0.05, {}, {}}), Error);
}
