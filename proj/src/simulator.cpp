#include "bellcert/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace bellcert {

namespace {

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline PhiloxBlock philox_inline(PhiloxBlock c, std::uint64_t k0, std::uint64_t k1) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kW0;
      k1 += kW1;
    }
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * c[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * c[2];
    c = {static_cast<std::uint64_t>(p1 >> 64) ^ c[1] ^ k0, static_cast<std::uint64_t>(p1),
         static_cast<std::uint64_t>(p0 >> 64) ^ c[3] ^ k1, static_cast<std::uint64_t>(p0)};
  }
  return c;
}

using Cumulative = std::array<std::array<double, 4>, 4>;  // [2x+y][2a+b]

Cumulative cumulative_conditionals(const JointDistribution& d) {
  Cumulative c{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      double acc = 0;
      for (int ab = 0; ab < 4; ++ab) {
        acc += d.conditional(ab >> 1, ab & 1, x, y);
        c[2 * x + y][ab] = acc;
      }
      c[2 * x + y][3] = 2.0;  // absorb rounding so every u lands somewhere
    }
  return c;
}

class Sampler {
 public:
  Sampler(const SimSpec& spec, double px1, double py1) : px1_(px1), py1_(py1) {
    if (!(px1 > 0 && px1 < 1) || !(py1 > 0 && py1 < 1))
      throw Error(ErrorKind::InvalidParams, "setting biases must lie in (0,1)");
    if (const auto* mix = std::get_if<MixtureSpec>(&spec)) {
      if (mix->components.empty()) throw Error(ErrorKind::InvalidParams, "empty mixture");
      double total = 0;
      for (const auto& [w, d] : mix->components) {
        if (!(w >= 0)) throw Error(ErrorKind::InvalidParams, "negative mixture weight");
        total += w;
        weight_cum_.push_back(total);
        tables_.push_back(cumulative_conditionals(d));
      }
      if (std::abs(total - 1) > 1e-12)
        throw Error(ErrorKind::InvalidParams, "mixture weights must sum to 1");
      weight_cum_.back() = 2.0;
    } else {
      const auto& sched = std::get<DriftSchedule>(spec);
      if (sched.segments.empty()) throw Error(ErrorKind::InvalidParams, "empty drift schedule");
      std::int64_t end = 0;
      for (const auto& [len, d] : sched.segments) {
        if (len < 1) throw Error(ErrorKind::InvalidParams, "drift segment lengths must be >= 1");
        end += len;
        segment_end_.push_back(end);
        tables_.push_back(cumulative_conditionals(d));
      }
    }
  }

  TrialRecord draw(std::int64_t i, std::uint64_t seed) const {
    const PhiloxBlock r = philox_inline({static_cast<std::uint64_t>(i), 0, 0, 0}, seed, kPhiloxKeyTag);
    const int x = uniform01(r[0]) < px1_;
    const int y = uniform01(r[1]) < py1_;
    std::size_t comp = 0;
    if (!segment_end_.empty()) {
      comp = static_cast<std::size_t>(
          std::upper_bound(segment_end_.begin(), segment_end_.end(), i) - segment_end_.begin());
      comp = std::min(comp, tables_.size() - 1);
    } else if (tables_.size() > 1) {
      const double u = uniform01(r[3]);
      while (u >= weight_cum_[comp]) ++comp;
    }
    const auto& cum = tables_[comp][2 * x + y];
    const double u = uniform01(r[2]);
    int ab = 0;
    while (u >= cum[ab]) ++ab;
    return TrialRecord(x, y, ab >> 1, ab & 1);
  }

 private:
  double px1_, py1_;
  std::vector<Cumulative> tables_;
  std::vector<double> weight_cum_;
  std::vector<std::int64_t> segment_end_;
};

template <class Body>
void for_ranges(std::int64_t n, unsigned threads, Body body) {
  const unsigned k = static_cast<unsigned>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(n, 1)));
  if (k <= 1) {
    body(0, std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t per = (n + k - 1) / k;
  for (unsigned t = 0; t < k; ++t) {
    const std::int64_t b = t * per, e = std::min(n, b + per);
    if (b < e) pool.emplace_back(body, t, b, e);
  }
  for (auto& th : pool) th.join();
}

TrialStream generate(const Sampler& s, std::int64_t n, std::uint64_t seed, unsigned threads) {
  if (n < 1) throw Error(ErrorKind::InvalidParams, "n must be positive");
  TrialStream out(static_cast<std::size_t>(n));
  for_ranges(n, threads, [&](unsigned, std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) out[static_cast<std::size_t>(i)] = s.draw(i, seed);
  });
  return out;
}

}  // namespace

PhiloxBlock philox4x64_10(PhiloxBlock counter, std::array<std::uint64_t, 2> key) {
  return philox_inline(counter, key[0], key[1]);
}

MixtureSpec single(const JointDistribution& d) { return MixtureSpec{{{1.0, d}}}; }

TrialStream sample_stream(const SimSpec& spec, std::int64_t n, std::uint64_t seed, unsigned threads) {
  return generate(Sampler(spec, 0.5, 0.5), n, seed, threads);
}

TrialStream biased_settings_stream(const JointDistribution& dist, double px1, double py1,
                                   std::int64_t n, std::uint64_t seed) {
  return generate(Sampler(single(dist), px1, py1), n, seed, 1);
}

CountsTable sample_counts(const SimSpec& spec, std::int64_t n, std::uint64_t seed, unsigned threads) {
  if (n < 0) throw Error(ErrorKind::InvalidParams, "n must be nonnegative");
  const Sampler s(spec, 0.5, 0.5);
  std::vector<std::array<std::uint64_t, 16>> partial(std::max(1u, threads));
  for_ranges(n, threads, [&](unsigned t, std::int64_t b, std::int64_t e) {
    std::array<std::uint64_t, 16> hist{};
    for (std::int64_t i = b; i < e; ++i) ++hist[s.draw(i, seed).byte()];
    partial[t] = hist;
  });
  CountsTable c;
  for (const auto& hist : partial)
    for (int byte = 0; byte < 16; ++byte) {
      const TrialRecord r = TrialRecord::from_byte(static_cast<std::uint8_t>(byte));
      c.counts[2 * r.x() + r.y()][2 * r.a() + r.b()] += hist[byte];
    }
  c.n_total = static_cast<std::uint64_t>(n);
  return c;
}

BitString dev_seed_bits(std::int64_t nbits, std::uint64_t seed) {
  BitString s(static_cast<std::size_t>(nbits));
  for (std::int64_t j = 0; 256 * j < nbits; ++j) {
    const PhiloxBlock r = philox_inline({static_cast<std::uint64_t>(j), 1, 0, 0}, seed, kPhiloxKeyTag);
    for (int k = 0; k < 256 && 256 * j + k < nbits; ++k)
      s.set(static_cast<std::size_t>(256 * j + k), (r[k >> 6] >> (k & 63)) & 1);
  }
  return s;
}

}  // namespace bellcert
