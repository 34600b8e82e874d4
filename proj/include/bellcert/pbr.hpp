#pragma once

#include <cstdint>

#include "bellcert/core.hpp"
#include "bellcert/ns_mle.hpp"

namespace bellcert {

struct BellBound {
  double m = 0;
  // Index into polytope_vertices(): 0..15 LR vertices, 16..23 PR boxes.
  int achieving_vertex = -1;
};

struct ThresholdPlan {
  double ln_vthresh = 0;
  double mu = 0;
  double sigma2 = 0;
  double quantile = 0;
  double z = 0;
  std::int64_t n = 0;
};

struct PbrOptions {
  // Let t(0,0,x,y) float instead of pinning it to 1.
  bool free_00 = false;
};

// sum q ln t
double log_objective(const JointDistribution& q, const BellFunction& t);

// Maximum of E(T) over the 16 LR vertices.
double max_lr_expectation(const BellFunction& t);

BellFunction optimize_bell_function(const JointDistribution& q, const MleConfig& cfg = {},
                                    const PbrOptions& opts = {});

BellBound compute_m(const BellFunction& t);

ThresholdPlan choose_vthresh(const BellFunction& t, const JointDistribution& q, std::int64_t n,
                             double quantile);

double asymptotic_rate(const BellFunction& t, const JointDistribution& q, double m);

}  // namespace bellcert
