#pragma once

// Trial generation on top of Philox4x64-10. Trial i of a run with seed s draws
// exactly one block, counter (i, 0, 0, 0) under key (s, kPhiloxKeyTag):
// word 0 -> x, word 1 -> y, word 2 -> outcome pair, word 3 -> mixture component.
// Any trial can therefore be regenerated on its own, and ranges can be produced
// in parallel with output identical to a sequential run.

#include <array>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "bellcert/bits.hpp"
#include "bellcert/core.hpp"

namespace bellcert {

using PhiloxBlock = std::array<std::uint64_t, 4>;

PhiloxBlock philox4x64_10(PhiloxBlock counter, std::array<std::uint64_t, 2> key);

inline constexpr std::uint64_t kPhiloxKeyTag = 0x62656c6c63657274ULL;  // "bellcert"

// Top 53 bits as a double in [0,1).
inline double uniform01(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53; }

struct MixtureSpec {
  std::vector<std::pair<double, JointDistribution>> components;
};

struct DriftSchedule {
  // Trials past the total length keep using the last segment.
  std::vector<std::pair<std::int64_t, JointDistribution>> segments;
};

using SimSpec = std::variant<MixtureSpec, DriftSchedule>;

MixtureSpec single(const JointDistribution& d);

TrialStream sample_stream(const SimSpec& spec, std::int64_t n, std::uint64_t seed,
                          unsigned threads = 1);

TrialStream biased_settings_stream(const JointDistribution& dist, double px1, double py1,
                                   std::int64_t n, std::uint64_t seed);

// Same trials as sample_stream(spec, n, seed), tallied without storing them.
CountsTable sample_counts(const SimSpec& spec, std::int64_t n, std::uint64_t seed,
                          unsigned threads = 1);

// Seed bits for development runs only. Block (j, 1, 0, 0) supplies bits [256j, 256j+256),
// word k bit b landing at 256j + 64k + b.
BitString dev_seed_bits(std::int64_t nbits, std::uint64_t seed);

}  // namespace bellcert
