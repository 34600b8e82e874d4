#include <doctest.h>

#include <bitset>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include "bellcert/entropy.hpp"
#include "bellcert/error.hpp"
#include "bellcert/extractor.hpp"
#include "bellcert/gf2.hpp"
#include "reference_data.hpp"

using namespace bellcert;

namespace {

BitString random_bits(std::size_t n, std::mt19937_64& rng) {
  BitString b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, rng() & 1);
  return b;
}

// Brute-force GF(16) with modulus x^4 + x + 1: log/antilog tables from repeated doubling.
struct Gf16 {
  int exp[30]{};
  int log[16]{};
  Gf16() {
    int v = 1;
    for (int i = 0; i < 15; ++i) {
      exp[i] = exp[i + 15] = v;
      log[v] = i;
      v <<= 1;
      if (v & 16) v ^= 0b10011;
    }
  }
  int mul(int a, int b) const { return (a == 0 || b == 0) ? 0 : exp[log[a] + log[b]]; }
};

// Reference one-bit extractor over any l <= 128 using bitset polynomial arithmetic:
// sum_j c_j alpha^j with explicit powers, then the parity of the masked result.
bool reference_rsh(const BitString& input, const BitString& subseed, int l) {
  using Poly = std::bitset<260>;
  Poly f;
  f[l] = true;
  for (int e : irreducible_terms(l)) f[e] = true;
  auto reduce = [&](Poly a) {
    for (int d = 259; d >= l; --d)
      if (a[d]) a ^= f << (d - l);
    return a;
  };
  auto mulmod = [&](const Poly& a, const Poly& b) {
    Poly r;
    for (int i = 0; i < l; ++i)
      if (b[i]) r ^= a << i;
    return reduce(r);
  };
  Poly alpha, mask;
  for (int k = 0; k < l; ++k) {
    alpha[k] = subseed.get(static_cast<std::size_t>(k));
    mask[k] = subseed.get(static_cast<std::size_t>(l + k));
  }
  Poly power;
  power[0] = true;
  Poly acc;
  for (std::size_t j = 0; j * l < input.size(); ++j) {
    Poly c;
    for (int k = 0; k < l; ++k) {
      const std::size_t pos = j * l + static_cast<std::size_t>(k);
      c[k] = pos < input.size() && input.get(pos);
    }
    acc ^= mulmod(c, power);
    power = mulmod(power, alpha);
  }
  return ((acc & mask).count() & 1) != 0;
}

BitString subseed_of(const BitString& seed, const std::vector<std::uint32_t>& set) {
  BitString s(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) s.set(k, seed.get(set[k]));
  return s;
}

}  // namespace

TEST_CASE("max_output_bits") {
  CHECK(max_output_bits(-5, 1, 0.5) == 0);
  CHECK(max_output_bits(-12, 1, 1) == 1);
  CHECK(max_output_bits(-11.999, 1, 1) == 0);

  const ProtocolParams p{testing::kXor3ProtocolTrials, testing::kXor3M, testing::kXor3EpsP,
                         std::log(testing::kXor3VThresh)};
  const EntropyCertificate c = compute_delta(p);
  const std::int64_t t = max_output_bits(c.delta_log2, testing::kXor3Kappa, testing::kXor3EpsExt);
  CHECK(t >= 256);

  // Brute-force the defining inequality around the returned value.
  for (double dl : {-40.0, -100.5, -375.97, -1000.0})
    for (double kappa : {0.01, 0.33, 1.0})
      for (double eps : {1e-6, 3.5e-5, 0.01}) {
        const double rhs = -dl + std::log2(kappa) + 5 * std::log2(eps) - 11;
        const std::int64_t got = max_output_bits(dl, kappa, eps);
        std::int64_t want = 0;
        for (std::int64_t tt = 1; tt < 2000; ++tt)
          if (tt + 4 * std::log2(static_cast<double>(tt)) <= rhs) want = tt;
        CHECK(got == want);
      }
}

TEST_CASE("max_output_bits is monotone") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 2000; ++rep) {
    const double dl = -1000 * u(rng), kappa = std::pow(10.0, -4 * u(rng)), eps = std::pow(10.0, -8 * u(rng));
    const std::int64_t base = max_output_bits(dl, kappa, eps);
    CHECK(max_output_bits(dl - 10 * u(rng), kappa, eps) >= base);
    CHECK(max_output_bits(dl, std::min(1.0, kappa * (1 + u(rng))), eps) >= base);
    CHECK(max_output_bits(dl, kappa, std::min(1.0, eps * (1 + u(rng)))) >= base);
  }
}

TEST_CASE("plan reproduces the published seed length") {
  const ExtractorPlan p = plan(264'322'430, 256, 1.7665e-5);
  CHECK(p.l == 78);
  CHECK(p.w == 157);
  CHECK(p.blocks == 3);
  CHECK(p.d == 73'947);
  CHECK(is_prime(static_cast<std::uint64_t>(p.w)));
}

TEST_CASE("plan invariants and clamps") {
  const ExtractorPlan small = plan(8, 2, 0.5);
  CHECK(small.blocks == 2);
  CHECK(small.d == small.w * small.w * 2);

  std::int64_t previous_w = 0;
  int previous_l = 0;
  for (double eps = 0.4; eps > 1e-9; eps /= 2) {
    const ExtractorPlan p = plan(100'000, 64, eps);
    CHECK(is_prime(static_cast<std::uint64_t>(p.w)));
    CHECK(p.w > 2 * p.l);
    CHECK(p.l == static_cast<int>(std::ceil(std::log2(4.0 * 100'000 * 64 * 64 / (eps * eps)))));
    if (previous_l) {
      CHECK(p.l - previous_l <= 2);
      CHECK(p.w >= previous_w);
    }
    // smallest prime above 2l
    for (std::int64_t k = 2 * p.l + 1; k < p.w; ++k) CHECK_FALSE(is_prime(static_cast<std::uint64_t>(k)));
    previous_l = p.l;
    previous_w = p.w;
  }
}

TEST_CASE("primality") {
  std::vector<bool> sieve(100'000, true);
  sieve[0] = sieve[1] = false;
  for (std::size_t i = 2; i * i < sieve.size(); ++i)
    if (sieve[i])
      for (std::size_t j = i * i; j < sieve.size(); j += i) sieve[j] = false;
  for (std::uint64_t n = 0; n < sieve.size(); ++n) CHECK(is_prime(n) == sieve[n]);
  CHECK(is_prime(18446744073709551557ULL));
  CHECK_FALSE(is_prime(3215031751ULL));  // strong pseudoprime to bases 2, 3, 5, 7
  CHECK(next_prime_above(156) == 157);
  CHECK(next_prime_above(157) == 163);
}

TEST_CASE("weak design examples") {
  const WeakDesign one = build_weak_design(1, 7);
  REQUIRE(one.sets.size() == 1);
  CHECK(one.sets[0].size() == 7);

  const WeakDesign three = build_weak_design(3, 5);
  REQUIRE(three.sets.size() == 3);
  CHECK(three.d == 50);
  for (const auto& s : three.sets) {
    CHECK(s.size() == 5);
    for (auto v : s) CHECK(v < 50);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < i; ++j) {
      int common = 0;
      for (auto a : three.sets[i])
        for (auto b : three.sets[j]) common += a == b;
      sum += std::pow(2.0, common);
    }
    CHECK(sum <= 3);
  }

  CHECK_THROWS_AS(build_weak_design(4, 9), Error);
  try {
    build_weak_design(4, 9);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidPrime);
  }
}

TEST_CASE("full-size design") {
  const WeakDesign d = build_weak_design(256, 157);
  CHECK(d.d == 73'947);
  REQUIRE(d.sets.size() == 256);
  std::vector<std::set<std::uint32_t>> sets;
  for (const auto& s : d.sets) {
    CHECK(s.size() == 157);
    sets.emplace_back(s.begin(), s.end());
    CHECK(sets.back().size() == 157);
    CHECK(*sets.back().rbegin() < 73'947u);
  }
  const auto sums = overlap_sums(d);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < i; ++j) {
      int common = 0;
      for (auto v : sets[i]) common += static_cast<int>(sets[j].count(v));
      sum += std::pow(2.0, common);
    }
    CHECK(sum == sums[i]);
    CHECK(sum <= 256);
  }
}

TEST_CASE("design span matches the plan for random (t, w)") {
  std::mt19937_64 rng(42);
  std::vector<std::int64_t> primes;
  for (std::int64_t p = 5; p < 400; ++p)
    if (is_prime(static_cast<std::uint64_t>(p))) primes.push_back(p);
  for (int rep = 0; rep < 100; ++rep) {
    const std::int64_t w = primes[rng() % primes.size()];
    const std::int64_t t = 1 + static_cast<std::int64_t>(rng() % 600);
    CAPTURE(t);
    CAPTURE(w);
    const WeakDesign d = build_weak_design(t, w);
    CHECK(d.d == w * w * design_blocks(t, w));
    CHECK(static_cast<std::int64_t>(d.sets.size()) == t);
    const auto sums = overlap_sums(d);
    for (std::int64_t i = 0; i < t; ++i) {
      CHECK(static_cast<std::int64_t>(d.sets[i].size()) == w);
      CHECK(sums[i] <= static_cast<double>(t));
      for (auto v : d.sets[i]) CHECK(static_cast<std::int64_t>(v) < d.d);
      // Set i lives in one block: a column index a and row p(a) per point.
      const std::int64_t block = d.sets[i][0] / (w * w);
      for (std::int64_t a = 0; a < w; ++a) {
        const std::int64_t local = d.sets[i][a] - block * w * w;
        CHECK(local / w == a);
      }
    }
  }
}

TEST_CASE("one-bit extractor basics") {
  std::mt19937_64 rng(43);
  const BitString zero(40);
  for (int rep = 0; rep < 50; ++rep) CHECK_FALSE(one_bit_extract(zero, random_bits(16, rng), 8));

  // A single chunk is a constant polynomial: the evaluation point is irrelevant.
  for (int rep = 0; rep < 100; ++rep) {
    const BitString c0 = random_bits(8, rng);
    BitString seed = random_bits(20, rng);
    int parity = 0;
    for (int k = 0; k < 8; ++k) parity ^= c0.get(k) & seed.get(8 + k);
    CHECK(one_bit_extract(c0, seed, 8) == (parity != 0));
    for (int k = 0; k < 8; ++k) seed.set(k, rng() & 1);
    CHECK(one_bit_extract(c0, seed, 8) == (parity != 0));
  }

  CHECK_THROWS_AS(one_bit_extract(zero, BitString(15), 8), Error);
}

TEST_CASE("one-bit extractor against brute-force GF(16)") {
  REQUIRE(irreducible_terms(4) == std::vector<int>{1, 0});
  const Gf16 gf;
  for (int input = 0; input < 256; ++input)
    for (int alpha = 0; alpha < 16; ++alpha)
      for (int mask = 0; mask < 16; ++mask) {
        const int c0 = input & 15, c1 = input >> 4;
        const int value = c0 ^ gf.mul(c1, alpha);
        const bool want = __builtin_popcount(value & mask) & 1;
        BitString in(8), seed(8);
        for (int k = 0; k < 8; ++k) in.set(k, (input >> k) & 1);
        for (int k = 0; k < 4; ++k) {
          seed.set(k, (alpha >> k) & 1);
          seed.set(4 + k, (mask >> k) & 1);
        }
        CHECK(one_bit_extract(in, seed, 4) == want);
      }
}

TEST_CASE("one-bit extractor against the bitset reference") {
  std::mt19937_64 rng(44);
  for (int l : {3, 5, 16, 31, 64, 78, 100, 128})
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t q = 1 + rng() % 700;
      const BitString in = random_bits(q, rng), seed = random_bits(2 * l + 3, rng);
      CHECK(one_bit_extract(in, seed, l) == reference_rsh(in, seed, l));
    }
}

TEST_CASE("extract composition") {
  std::mt19937_64 rng(45);
  const ExtractorPlan p = plan(64, 4, 0.25);
  REQUIRE(p.l == 16);
  const WeakDesign design = build_weak_design(p.t, p.w);
  BitString input(64), seed(static_cast<std::size_t>(p.d));
  for (std::size_t i = 0; i < 64; ++i) input.set(i, (0x9E3779B97F4A7C15ULL >> i) & 1);
  for (std::size_t i = 0; i < seed.size(); ++i) seed.set(i, ((i * 2654435761u) >> 7) & 1);

  const BitString out = extract(input, seed, p, design, 1);
  REQUIRE(out.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const bool oracle = reference_rsh(input, subseed_of(seed, design.sets[i]), p.l);
    CHECK(out.get(i) == oracle);
    CHECK(out.get(i) == one_bit_extract(input, subseed_of(seed, design.sets[i]), p.l));
  }
  // Frozen from the reference evaluation above.
  CHECK(out.to_hex() == "50");

  // Seed bits outside every design set do not matter.
  std::vector<bool> used(seed.size(), false);
  for (const auto& s : design.sets)
    for (std::size_t k = 0; k < 2 * static_cast<std::size_t>(p.l); ++k) used[s[k]] = true;
  BitString scrambled = seed;
  for (std::size_t i = 0; i < seed.size(); ++i)
    if (!used[i]) scrambled.set(i, rng() & 1);
  CHECK(extract(input, scrambled, p, design, 1) == out);

  // t = 1 is the one-bit extractor on S_0.
  const ExtractorPlan p1 = plan(64, 1, 0.25);
  const WeakDesign d1 = build_weak_design(1, p1.w);
  const BitString s1 = random_bits(static_cast<std::size_t>(p1.d), rng);
  CHECK(extract(input, s1, p1, d1, 1).get(0) == one_bit_extract(input, subseed_of(s1, d1.sets[0]), p1.l));

  CHECK_THROWS_AS(extract(BitString(63), seed, p, design, 1), Error);
  CHECK_THROWS_AS(extract(input, BitString(seed.size() - 1), p, design, 1), Error);
}

TEST_CASE("extract is deterministic across thread counts") {
  std::mt19937_64 rng(46);
  const ExtractorPlan p = plan(20'000, 96, 1e-3);
  const WeakDesign design = build_weak_design(p.t, p.w);
  const BitString input = random_bits(20'000, rng), seed = random_bits(static_cast<std::size_t>(p.d), rng);
  const BitString one = extract(input, seed, p, design, 1);
  CHECK(extract(input, seed, p, design, 1) == one);
  CHECK(extract(input, seed, p, design, 3) == one);
  CHECK(extract(input, seed, p, design, 8) == one);
  for (std::size_t i = 0; i < 96; i += 17)
    CHECK(one.get(i) == reference_rsh(input, subseed_of(seed, design.sets[i]), p.l));
}
