#include "bellcert/gf2.hpp"

#include <bit>
#include <string>

#include "bellcert/error.hpp"

namespace bellcert {

namespace {

// For degree l (row l-1): the smallest-k trinomial x^l + x^k + 1, written {k, 0, 0}; when no
// trinomial exists, the pentanomial x^l + x^k3 + x^k2 + x^k1 + 1 with (k3, k2, k1)
// lexicographically smallest, written {k3, k2, k1}. Degree 1 is x + 1.
constexpr int kLowTerms[128][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {1, 0, 0},
    {2, 0, 0}, {1, 0, 0}, {1, 0, 0}, {4, 3, 1},
    {1, 0, 0}, {3, 0, 0}, {2, 0, 0}, {3, 0, 0},
    {4, 3, 1}, {5, 0, 0}, {1, 0, 0}, {5, 3, 1},
    {3, 0, 0}, {3, 0, 0}, {5, 2, 1}, {3, 0, 0},
    {2, 0, 0}, {1, 0, 0}, {5, 0, 0}, {4, 3, 1},
    {3, 0, 0}, {4, 3, 1}, {5, 2, 1}, {1, 0, 0},
    {2, 0, 0}, {1, 0, 0}, {3, 0, 0}, {7, 3, 2},
    {10, 0, 0}, {7, 0, 0}, {2, 0, 0}, {9, 0, 0},
    {6, 4, 1}, {6, 5, 1}, {4, 0, 0}, {5, 4, 3},
    {3, 0, 0}, {7, 0, 0}, {6, 4, 3}, {5, 0, 0},
    {4, 3, 1}, {1, 0, 0}, {5, 0, 0}, {5, 3, 2},
    {9, 0, 0}, {4, 3, 2}, {6, 3, 1}, {3, 0, 0},
    {6, 2, 1}, {9, 0, 0}, {7, 0, 0}, {7, 4, 2},
    {4, 0, 0}, {19, 0, 0}, {7, 4, 2}, {1, 0, 0},
    {5, 2, 1}, {29, 0, 0}, {1, 0, 0}, {4, 3, 1},
    {18, 0, 0}, {3, 0, 0}, {5, 2, 1}, {9, 0, 0},
    {6, 5, 2}, {5, 3, 1}, {6, 0, 0}, {10, 9, 3},
    {25, 0, 0}, {35, 0, 0}, {6, 3, 1}, {21, 0, 0},
    {6, 5, 2}, {6, 5, 3}, {9, 0, 0}, {9, 4, 2},
    {4, 0, 0}, {8, 3, 1}, {7, 4, 2}, {5, 0, 0},
    {8, 2, 1}, {21, 0, 0}, {13, 0, 0}, {7, 6, 2},
    {38, 0, 0}, {27, 0, 0}, {8, 5, 1}, {21, 0, 0},
    {2, 0, 0}, {21, 0, 0}, {11, 0, 0}, {10, 9, 6},
    {6, 0, 0}, {11, 0, 0}, {6, 3, 1}, {15, 0, 0},
    {7, 6, 1}, {29, 0, 0}, {9, 0, 0}, {4, 3, 1},
    {4, 0, 0}, {15, 0, 0}, {9, 7, 4}, {17, 0, 0},
    {5, 4, 2}, {33, 0, 0}, {10, 0, 0}, {5, 4, 3},
    {9, 0, 0}, {5, 3, 2}, {8, 7, 5}, {4, 2, 1},
    {5, 2, 1}, {33, 0, 0}, {8, 0, 0}, {4, 3, 1},
    {18, 0, 0}, {6, 2, 1}, {2, 0, 0}, {19, 0, 0},
    {7, 6, 5}, {21, 0, 0}, {1, 0, 0}, {7, 2, 1},
};

}  // namespace

std::vector<int> irreducible_terms(int l) {
  if (l < 1 || l > 128)
    throw Error(ErrorKind::InvalidParams, "no fixed modulus for GF(2^" + std::to_string(l) + ")");
  std::vector<int> terms;
  for (int k : kLowTerms[l - 1])
    if (k > 0) terms.push_back(k);
  terms.push_back(0);
  return terms;
}

Gf2Field::Gf2Field(int l) : l_(l), low_(0) {
  for (int k : irreducible_terms(l)) low_ |= u128{1} << k;
  mask_ = (l == 128) ? ~u128{0} : ((u128{1} << l) - 1);
}

u128 Gf2Field::mul(u128 a, u128 b) const {
  u128 r = 0;
  a &= mask_;
  b &= mask_;
  while (b != 0) {
    if (b & 1) r ^= a;
    b >>= 1;
    a = mul_x(a);
  }
  return r;
}

u128 Gf2Field::pow(u128 a, unsigned __int128 e) const {
  u128 r = 1;
  while (e != 0) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

Gf2ScaledMul::Gf2ScaledMul(const Gf2Field& field, u128 alpha)
    : nbytes_((field.degree() + 7) / 8), table_(static_cast<std::size_t>(nbytes_) * 256, 0) {
  const int l = field.degree();
  std::vector<u128> basis(static_cast<std::size_t>(nbytes_) * 8, 0);
  u128 cur = alpha & field.element_mask();
  for (int k = 0; k < l; ++k) {
    basis[k] = cur;
    cur = field.mul_x(cur);
  }
  for (int p = 0; p < nbytes_; ++p) {
    u128* row = table_.data() + 256 * p;
    for (unsigned v = 1; v < 256; ++v) row[v] = row[v & (v - 1)] ^ basis[8 * p + std::countr_zero(v)];
  }
}

}  // namespace bellcert
