#include <algorithm>
#include <cmath>
#include <string>

#include "bellcert/error.hpp"
#include "bellcert/extractor.hpp"

namespace bellcert {

namespace {

// Coefficients of the k-th polynomial over GF(w): base-w digits of k, least significant first.
std::vector<std::uint64_t> poly_coeffs(std::uint64_t k, std::uint64_t w) {
  std::vector<std::uint64_t> c;
  do {
    c.push_back(k % w);
    k /= w;
  } while (k != 0);
  return c;
}

std::vector<std::uint32_t> poly_values(std::uint64_t k, std::uint64_t w) {
  const auto c = poly_coeffs(k, w);
  std::vector<std::uint32_t> v(w);
  for (std::uint64_t a = 0; a < w; ++a) {
    std::uint64_t acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = (acc * a + *it) % w;
    v[a] = static_cast<std::uint32_t>(acc);
  }
  return v;
}

}  // namespace

// Greedy block construction: block b takes polynomials 0, 1, 2, ... over GF(w) for as
// long as every new set keeps sum_{j<i} 2^{|S_i ∩ S_j|} <= t - 1. Sets in different
// blocks are disjoint, so each earlier-block set contributes exactly 1.
WeakDesign build_weak_design(std::int64_t t, std::int64_t w) {
  if (w < 2 || w > (1 << 16) || !is_prime(static_cast<std::uint64_t>(w)))
    throw Error(ErrorKind::InvalidPrime, std::to_string(w) + " is not a usable prime");
  if (t < 1) throw Error(ErrorKind::InvalidParams, "t must be positive");

  WeakDesign d;
  d.t = t;
  d.w = w;
  d.blocks = design_blocks(t, w);
  d.d = w * w * d.blocks;
  const auto uw = static_cast<std::uint64_t>(w);

  std::int64_t earlier = 0;
  std::int64_t block = 0;
  while (static_cast<std::int64_t>(d.sets.size()) < t) {
    if (block >= d.blocks)
      throw Error(ErrorKind::InvalidParams, "greedy design needs more than " +
                                                std::to_string(d.blocks) + " blocks for t=" +
                                                std::to_string(t) + ", w=" + std::to_string(w));
    std::vector<std::vector<std::uint32_t>> in_block;
    for (std::uint64_t k = 0; static_cast<std::int64_t>(d.sets.size()) < t; ++k) {
      auto vals = poly_values(k, uw);
      double load = static_cast<double>(earlier);
      for (const auto& other : in_block) {
        int common = 0;
        for (std::uint64_t a = 0; a < uw; ++a) common += (vals[a] == other[a]);
        load += std::ldexp(1.0, common);
      }
      if (load > static_cast<double>(t - 1)) break;
      std::vector<std::uint32_t> set(uw);
      const std::uint64_t base = static_cast<std::uint64_t>(block) * uw * uw;
      for (std::uint64_t a = 0; a < uw; ++a) set[a] = static_cast<std::uint32_t>(base + a * uw + vals[a]);
      d.sets.push_back(std::move(set));
      in_block.push_back(std::move(vals));
    }
    earlier += static_cast<std::int64_t>(in_block.size());
    ++block;
  }
  return d;
}

std::vector<double> overlap_sums(const WeakDesign& design) {
  std::vector<std::vector<std::uint32_t>> sorted = design.sets;
  for (auto& s : sorted) std::sort(s.begin(), s.end());
  std::vector<double> out(sorted.size(), 0.0);
  std::vector<std::uint32_t> tmp;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      tmp.clear();
      std::set_intersection(sorted[i].begin(), sorted[i].end(), sorted[j].begin(), sorted[j].end(),
                            std::back_inserter(tmp));
      out[i] += std::ldexp(1.0, static_cast<int>(tmp.size()));
    }
  return out;
}

}  // namespace bellcert
