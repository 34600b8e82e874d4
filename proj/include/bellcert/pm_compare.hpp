#pragma once

#include <array>
#include <optional>

#include "bellcert/core.hpp"

namespace bellcert {

struct PmBoundInputs {
  double p = 0;
  double eps = 0;
  std::optional<double> i_ns;
  std::optional<double> j_m;
};

struct PrDecomposition {
  double p = 0;
  int pr_index = 0;
  std::array<double, 16> lr_weights{};
};

// 1 where (xy != 11 and a == b) or (xy == 11 and a != b), else 0.
Table16 chsh_function();

// Smallest PR weight over the 8 boxes of pr_boxes(); ties go to the lowest index.
PrDecomposition pr_weight(const JointDistribution& d);

JointDistribution reconstruct(const PrDecomposition& dec);

// 1 + (1 - x)/(2(i_ns - 1)), clamped to [1/4, 1].
double g_bound(double x, double i_ns);

double pm_min_trials(const PmBoundInputs& in);

}  // namespace bellcert
