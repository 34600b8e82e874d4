#include "bellcert/stats_tests.hpp"

#include <cmath>
#include <string>

#include "bellcert/normal.hpp"

namespace bellcert {

namespace {

TestReport report(double z, std::uint64_t n) { return {z, two_tailed_p(z), n}; }

// Pooled two-proportion z statistic for k1/n1 against k2/n2.
TestReport two_proportion(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw Error(ErrorKind::EmptyCell, "a setting pair has no trials");
  const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  const double var = pooled * (1 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
  const double z = var > 0 ? (p1 - p2) / std::sqrt(var) : 0.0;
  return report(z, n1 + n2);
}

}  // namespace

TestReport settings_bias_test(std::uint64_t ones, std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidParams, "bias test needs a nonempty stream");
  const double nd = static_cast<double>(n);
  const double z = (static_cast<double>(ones) - nd / 2) / (std::sqrt(nd) / 2);
  return report(z, n);
}

TestReport settings_bias_test(std::span<const TrialRecord> stream, Station station) {
  std::uint64_t ones = 0;
  for (TrialRecord r : stream) ones += station == Station::Alice ? r.x() : r.y();
  return settings_bias_test(ones, stream.size());
}

TestReport settings_independence_test(const CountsTable& c) {
  if (c.n_total == 0) throw Error(ErrorKind::InvalidParams, "independence test needs a nonempty stream");
  const double n = static_cast<double>(c.n_total);
  const double n11 = static_cast<double>(c.setting_total(1, 1));
  const double px = static_cast<double>(c.setting_total(1, 0) + c.setting_total(1, 1)) / n;
  const double py = static_cast<double>(c.setting_total(0, 1) + c.setting_total(1, 1)) / n;
  const double var = n * px * (1 - px) * py * (1 - py);
  if (!(var > 0)) throw Error(ErrorKind::DegenerateMargin, "a station's setting never varies");
  return report((n11 - n * px * py) / std::sqrt(var), c.n_total);
}

TestReport settings_independence_test(std::span<const TrialRecord> stream) {
  return settings_independence_test(counts_from_stream(stream));
}

std::array<TestReport, 4> signaling_tests(const CountsTable& c) {
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      if (c.setting_total(x, y) == 0)
        throw Error(ErrorKind::EmptyCell,
                    "no trials with x=" + std::to_string(x) + ", y=" + std::to_string(y));
  auto a_hits = [&](int x, int y) { return c.at(1, 0, x, y) + c.at(1, 1, x, y); };
  auto b_hits = [&](int x, int y) { return c.at(0, 1, x, y) + c.at(1, 1, x, y); };
  std::array<TestReport, 4> out;
  for (int x = 0; x < 2; ++x)
    out[x] = two_proportion(a_hits(x, 0), c.setting_total(x, 0), a_hits(x, 1), c.setting_total(x, 1));
  for (int y = 0; y < 2; ++y)
    out[2 + y] = two_proportion(b_hits(0, y), c.setting_total(0, y), b_hits(1, y), c.setting_total(1, y));
  return out;
}

std::array<TestReport, 4> signaling_tests(std::span<const TrialRecord> stream) {
  return signaling_tests(counts_from_stream(stream));
}

JointDistribution renormalize_uniform(const JointDistribution& freq) {
  JointDistribution out;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double w = freq.setting_weight(x, y);
      if (!(w > 0))
        throw Error(ErrorKind::EmptyCell,
                    "F(x,y) = 0 at x=" + std::to_string(x) + ", y=" + std::to_string(y));
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out.at(a, b, x, y) = 0.25 * freq(a, b, x, y) / w;
    }
  return out;
}

}  // namespace bellcert
