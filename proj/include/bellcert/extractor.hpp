#pragma once

#include <cstdint>
#include <vector>

#include "bellcert/bits.hpp"

namespace bellcert {

struct ExtractorPlan {
  std::int64_t q = 0;  // input bits
  std::int64_t t = 0;  // output bits
  double eps = 0;      // per-extractor error
  double sigma = 0;    // min-entropy parameter; 0 when planned without a certificate
  int l = 0;           // GF(2^l) of the one-bit extractor
  std::int64_t w = 0;  // prime subset size
  std::int64_t blocks = 0;
  std::int64_t d = 0;  // seed bits
};

struct WeakDesign {
  std::int64_t t = 0;
  std::int64_t w = 0;
  std::int64_t blocks = 0;
  std::int64_t d = 0;
  // sets[i][a] = seed index of the point (a, p_i(a)); size w each, ordered by a.
  std::vector<std::vector<std::uint32_t>> sets;
};

// Largest t with t + 4 log2 t <= -log2(delta) + log2(kappa) + 5 log2(eps_ext) - 11, or 0.
std::int64_t max_output_bits(double delta_log2, double kappa, double eps_ext);

bool is_prime(std::uint64_t n);
std::uint64_t next_prime_above(std::uint64_t n);

// max{2, 1 + ceil((log2(t-e) - log2(w-e)) / (log2 e - log2(e-1)))}
std::int64_t design_blocks(std::int64_t t, std::int64_t w);

ExtractorPlan plan(std::int64_t q, std::int64_t t, double eps);

// Plan for the protocol's composition: eps = eps_ext/2, sigma = -log2(2 delta/(kappa eps_ext)).
ExtractorPlan plan_for_certificate(std::int64_t q, std::int64_t t, double delta_log2, double kappa,
                                   double eps_ext);

WeakDesign build_weak_design(std::int64_t t, std::int64_t w);

// For each i, sum over j < i of 2^{|S_i ∩ S_j|}, by direct set intersection.
std::vector<double> overlap_sums(const WeakDesign& design);

bool one_bit_extract(const BitString& input, const BitString& subseed, int l);

// threads = 0 reads BELLCERT_THREADS (default: hardware concurrency).
BitString extract(const BitString& input, const BitString& seed, const ExtractorPlan& plan,
                  const WeakDesign& design, unsigned threads = 0);

}  // namespace bellcert
