#pragma once

// GF(2^l) for 1 <= l <= 128. Elements are polynomials over GF(2) stored in the
// low l bits of an unsigned __int128, bit k holding the coefficient of x^k.

#include <vector>

namespace bellcert {

using u128 = unsigned __int128;

class Gf2Field {
 public:
  explicit Gf2Field(int l);

  int degree() const { return l_; }
  // The modulus minus its leading term x^l.
  u128 modulus_low() const { return low_; }
  u128 element_mask() const { return mask_; }

  u128 mul_x(u128 a) const {
    const bool carry = (a >> (l_ - 1)) & 1;
    a = (a << 1) & mask_;
    return carry ? a ^ low_ : a;
  }
  u128 mul(u128 a, u128 b) const;
  u128 pow(u128 a, unsigned __int128 e) const;

 private:
  int l_;
  u128 low_;
  u128 mask_;
};

// Exponents of the fixed modulus x^l + ... + 1, highest first, leading term excluded.
std::vector<int> irreducible_terms(int l);

// Multiplication by a fixed element through byte-indexed tables.
class Gf2ScaledMul {
 public:
  Gf2ScaledMul(const Gf2Field& field, u128 alpha);

  u128 operator()(u128 v) const {
    u128 r = 0;
    const u128* row = table_.data();
    for (int p = 0; p < nbytes_; ++p, row += 256) r ^= row[static_cast<unsigned>(v >> (8 * p)) & 0xff];
    return r;
  }

 private:
  int nbytes_;
  std::vector<u128> table_;
};

}  // namespace bellcert
