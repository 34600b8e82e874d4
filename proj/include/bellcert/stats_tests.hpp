#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "bellcert/core.hpp"

namespace bellcert {

struct TestReport {
  double statistic = 0;
  double p_value = 1;
  std::uint64_t n_effective = 0;
};

enum class Station { Alice, Bob };

// Count-based forms; the stream overloads count first and delegate.
TestReport settings_bias_test(std::uint64_t ones, std::uint64_t n);
TestReport settings_bias_test(std::span<const TrialRecord> stream, Station station);

TestReport settings_independence_test(const CountsTable& counts);
TestReport settings_independence_test(std::span<const TrialRecord> stream);

// Order: A with x=0 (y=0 vs y=1), A with x=1, B with y=0 (x=0 vs x=1), B with y=1.
std::array<TestReport, 4> signaling_tests(const CountsTable& counts);
std::array<TestReport, 4> signaling_tests(std::span<const TrialRecord> stream);

JointDistribution renormalize_uniform(const JointDistribution& freq);

}  // namespace bellcert
