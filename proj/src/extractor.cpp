#include "bellcert/extractor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>

#include "bellcert/error.hpp"
#include "bellcert/gf2.hpp"

namespace bellcert {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

u128 read_bits128(const BitString& s, std::size_t pos, int len) {
  if (len <= 64) return s.get_word(pos, static_cast<unsigned>(len));
  u128 lo = s.get_word(pos, 64);
  u128 hi = s.get_word(pos + 64, static_cast<unsigned>(len - 64));
  return lo | (hi << 64);
}

unsigned thread_budget(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BELLCERT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Horner evaluation of sum_j c_j alpha^j followed by the mask inner product.
bool rsh_bit(const std::vector<u128>& chunks, const Gf2Field& field, u128 alpha, u128 mask) {
  const Gf2ScaledMul times_alpha(field, alpha);
  u128 acc = 0;
  for (auto it = chunks.rbegin(); it != chunks.rend(); ++it) acc = times_alpha(acc) ^ *it;
  const u128 v = acc & mask;
  const auto lo = static_cast<std::uint64_t>(v), hi = static_cast<std::uint64_t>(v >> 64);
  return (std::popcount(lo) + std::popcount(hi)) & 1;
}

std::vector<u128> input_chunks(const BitString& input, int l) {
  const std::size_t k = (input.size() + l - 1) / l;
  std::vector<u128> chunks(k);
  for (std::size_t j = 0; j < k; ++j) chunks[j] = read_bits128(input, j * l, l);
  return chunks;
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::uint64_t next_prime_above(std::uint64_t n) {
  std::uint64_t c = n + 1;
  while (!is_prime(c)) ++c;
  return c;
}

std::int64_t max_output_bits(double delta_log2, double kappa, double eps_ext) {
  if (!(delta_log2 < 0) || !(kappa > 0) || !(eps_ext > 0)) return 0;
  const double rhs = -delta_log2 + std::log2(kappa) + 5 * std::log2(eps_ext) - 11;
  auto fits = [rhs](std::int64_t t) {
    return static_cast<double>(t) + 4 * std::log2(static_cast<double>(t)) <= rhs;
  };
  if (!fits(1)) return 0;
  std::int64_t lo = 1, hi = static_cast<std::int64_t>(std::floor(rhs)) + 1;
  while (lo + 1 < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::int64_t design_blocks(std::int64_t t, std::int64_t w) {
  constexpr double e = std::numbers::e;
  const double td = static_cast<double>(t), wd = static_cast<double>(w);
  if (td <= e || wd <= e) return 2;
  const double ratio = (std::log2(td - e) - std::log2(wd - e)) / (std::log2(e) - std::log2(e - 1));
  return std::max<std::int64_t>(2, 1 + static_cast<std::int64_t>(std::ceil(ratio)));
}

ExtractorPlan plan(std::int64_t q, std::int64_t t, double eps) {
  if (q < 1 || t < 1 || !(eps > 0 && eps < 1))
    throw Error(ErrorKind::InvalidParams, "plan needs q, t >= 1 and 0 < eps < 1");
  ExtractorPlan p;
  p.q = q;
  p.t = t;
  p.eps = eps;
  const double lg = 2 + std::log2(static_cast<double>(q)) + 2 * std::log2(static_cast<double>(t)) -
                    2 * std::log2(eps);
  p.l = static_cast<int>(std::ceil(lg));
  if (p.l > 128) throw Error(ErrorKind::InvalidParams, "field degree " + std::to_string(p.l) + " exceeds 128");
  p.w = static_cast<std::int64_t>(next_prime_above(2 * static_cast<std::uint64_t>(p.l)));
  p.blocks = design_blocks(t, p.w);
  p.d = p.w * p.w * p.blocks;
  return p;
}

ExtractorPlan plan_for_certificate(std::int64_t q, std::int64_t t, double delta_log2, double kappa,
                                   double eps_ext) {
  ExtractorPlan p = plan(q, t, eps_ext / 2);
  p.sigma = -delta_log2 - 1 + std::log2(kappa) + std::log2(eps_ext);
  return p;
}

bool one_bit_extract(const BitString& input, const BitString& subseed, int l) {
  if (l < 1 || l > 128) throw Error(ErrorKind::InvalidParams, "l must lie in [1,128]");
  if (subseed.size() < 2 * static_cast<std::size_t>(l))
    throw Error(ErrorKind::LengthMismatch, "subseed shorter than 2l bits");
  const Gf2Field field(l);
  return rsh_bit(input_chunks(input, l), field, read_bits128(subseed, 0, l),
                 read_bits128(subseed, static_cast<std::size_t>(l), l));
}

BitString extract(const BitString& input, const BitString& seed, const ExtractorPlan& plan,
                  const WeakDesign& design, unsigned threads) {
  if (static_cast<std::int64_t>(input.size()) != plan.q)
    throw Error(ErrorKind::LengthMismatch, "input has " + std::to_string(input.size()) +
                                               " bits, plan expects " + std::to_string(plan.q));
  if (static_cast<std::int64_t>(seed.size()) != plan.d)
    throw Error(ErrorKind::LengthMismatch, "seed has " + std::to_string(seed.size()) +
                                               " bits, plan expects " + std::to_string(plan.d));
  if (design.t != plan.t || design.w != plan.w || design.d != plan.d ||
      static_cast<std::int64_t>(design.sets.size()) != plan.t)
    throw Error(ErrorKind::LengthMismatch, "weak design does not match the plan");
  if (2 * plan.l > plan.w) throw Error(ErrorKind::LengthMismatch, "subsets narrower than 2l");

  const Gf2Field field(plan.l);
  const auto chunks = input_chunks(input, plan.l);
  const auto t = static_cast<std::size_t>(plan.t);
  std::vector<std::uint8_t> out(t, 0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& set = design.sets[i];
      u128 alpha = 0, mask = 0;
      for (int k = 0; k < plan.l; ++k) {
        alpha |= static_cast<u128>(seed.get(set[k])) << k;
        mask |= static_cast<u128>(seed.get(set[plan.l + k])) << k;
      }
      out[i] = rsh_bit(chunks, field, alpha, mask);
    }
  };

  const unsigned nthreads = std::min<std::size_t>(thread_budget(threads), t);
  if (nthreads <= 1) {
    work(0, t);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (t + nthreads - 1) / nthreads;
    for (unsigned k = 0; k < nthreads; ++k) {
      const std::size_t b = k * per, e = std::min(t, b + per);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  BitString result(t);
  for (std::size_t i = 0; i < t; ++i) result.set(i, out[i]);
  return result;
}

}  // namespace bellcert
