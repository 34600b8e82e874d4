#include "bellcert/entropy.hpp"

#include <cmath>
#include <numbers>

namespace bellcert {

namespace {

// Neumaier's variant of compensated summation.
struct CompensatedSum {
  double sum = 0, comp = 0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

double max_ln_vthresh(std::int64_t n, double m, double eps_p) {
  return static_cast<double>(n) * std::log1p(1.5 * m) - std::log(eps_p);
}

std::vector<std::string> validate_params(const ProtocolParams& p) {
  std::vector<std::string> v;
  if (p.n < 1) v.push_back("n >= 1");
  if (!(p.m > 0)) v.push_back("m > 0");
  if (!(p.eps_p > 0 && p.eps_p < 1)) v.push_back("0 < eps_p < 1");
  if (!(p.ln_vthresh >= 0)) v.push_back("v_thresh >= 1");
  if (p.n >= 1 && p.m > 0 && p.eps_p > 0 && p.eps_p < 1 &&
      !(p.ln_vthresh <= max_ln_vthresh(p.n, p.m, p.eps_p)))
    v.push_back("v_thresh <= (1 + 1.5 m)^n / eps_p");
  return v;
}

ProtocolResult run_protocol(std::span<const TrialRecord> stream, const BellFunction& t,
                            const ProtocolParams& params) {
  if (params.n < 0 || stream.size() < static_cast<std::size_t>(params.n))
    throw Error(ErrorKind::StreamTooShort, "stream has " + std::to_string(stream.size()) +
                                               " trials, protocol needs " + std::to_string(params.n));
  std::array<double, 16> lnt{};
  for (int byte = 0; byte < 16; ++byte) {
    const double v = t.t[TrialRecord::from_byte(static_cast<std::uint8_t>(byte)).cell()];
    if (!(v > 0)) throw Error(ErrorKind::InvalidParams, "Bell function entries must be positive");
    lnt[byte] = std::log(v);
  }

  ProtocolResult r;
  r.trials_consumed = params.n;
  CompensatedSum frozen, free_run;
  bool crossed = false;
  if (params.ln_vthresh <= 0) {
    crossed = true;
    r.crossing_index = 0;
  }
  double best = 0;
  std::int64_t best_at = 0;
  for (std::int64_t i = 0; i < params.n; ++i) {
    const double l = lnt[stream[static_cast<std::size_t>(i)].byte()];
    free_run.add(l);
    const double cur = free_run.value();
    if (cur > best) {
      best = cur;
      best_at = i + 1;
    }
    if (!crossed) {
      frozen.add(l);
      if (frozen.value() >= params.ln_vthresh) {
        crossed = true;
        r.crossing_index = i + 1;
      }
    }
  }
  r.passed = crossed;
  r.ln_v_final = frozen.value();
  r.ln_v_max = best;
  r.max_index = best_at;
  return r;
}

EntropyCertificate compute_delta(const ProtocolParams& params) {
  auto violations = validate_params(params);
  if (!violations.empty()) throw Error(ErrorKind::InvalidParams, "violated: " + violations.front());
  if (params.n > (std::int64_t{1} << 53))
    throw Error(ErrorKind::InvalidParams, "n exceeds 2^53");
  const double n = static_cast<double>(params.n);
  const double u = (std::log(params.eps_p) + params.ln_vthresh) / n;
  const double per_trial = std::log1p(-std::expm1(u) / (2 * params.m));
  EntropyCertificate c;
  c.delta_log2 = n * per_trial / std::numbers::ln2;
  c.entropy_bits = -c.delta_log2;
  return c;
}

double single_trial_bound(double expected_t, double m) { return 1 + (1 - expected_t) / (2 * m); }

}  // namespace bellcert
