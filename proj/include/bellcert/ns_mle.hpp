#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

struct MleConfig {
  double objective_tol = 1e-13;
  double feasibility_tol = 1e-9;
  std::int64_t max_iters = 1'000'000;
};

struct MleResult {
  JointDistribution q;
  // sum over cells of f(ab|xy) ln q(a,b,x,y), with q the joint (settings weight 1/4 included)
  double log_likelihood = 0;
  std::int64_t iterations = 0;
  bool converged = false;
  // Mixture weights over polytope_vertices() at the end of the mirror-ascent phase.
  std::array<double, 24> weights{};
};

struct MleOptions {
  // Starting point on the 24-vertex simplex; uniform when empty.
  std::vector<double> initial_weights;
  // Objective after every accepted iterate, when non-null.
  std::vector<double>* trace = nullptr;
  // Newton refinement in non-signaling coordinates after mirror ascent.
  bool polish = true;
};

// Conditional frequencies f[2x+y][2a+b]; throws EmptySettingCell if a setting pair has no counts.
std::array<std::array<double, 4>, 4> conditional_frequencies(const CountsTable& counts);

double log_likelihood(const std::array<std::array<double, 4>, 4>& f, const JointDistribution& q);

MleResult fit_nonsignaling(const CountsTable& counts, const MleConfig& cfg = {},
                           const MleOptions& opts = {});

}  // namespace bellcert
