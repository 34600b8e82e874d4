#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

struct ProtocolParams {
  std::int64_t n = 0;
  double m = 0;
  double eps_p = 0;
  double ln_vthresh = 0;
};

struct ProtocolResult {
  bool passed = false;
  std::optional<std::int64_t> crossing_index;  // 1-based trial count at the crossing; 0 if v_thresh = 1
  double ln_v_final = 0;
  // Largest running log-product over all n trials, evaluated without freezing.
  double ln_v_max = 0;
  std::int64_t max_index = 0;
  std::int64_t trials_consumed = 0;
};

struct EntropyCertificate {
  double delta_log2 = 0;
  double entropy_bits = 0;
};

// n ln(1 + 1.5 m) - ln eps_p
double max_ln_vthresh(std::int64_t n, double m, double eps_p);

std::vector<std::string> validate_params(const ProtocolParams& params);

ProtocolResult run_protocol(std::span<const TrialRecord> stream, const BellFunction& t,
                            const ProtocolParams& params);

EntropyCertificate compute_delta(const ProtocolParams& params);

// Per-trial bound on the largest conditional outcome probability: 1 + (1 - E(T))/(2m).
double single_trial_bound(double expected_t, double m);

}  // namespace bellcert
