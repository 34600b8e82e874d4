#pragma once

// Trials, distributions over the 16 results (a,b,x,y), and the 24 extreme
// points of the two-party, two-setting, two-outcome non-signaling polytope.
//
// Outcome "+" (detection) is 1 and "0" (nondetection) is 0 everywhere.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bellcert/error.hpp"

namespace bellcert {

constexpr int cell_index(int a, int b, int x, int y) { return a * 8 + b * 4 + x * 2 + y; }

using Table16 = std::array<double, 16>;

// One trial packed into a byte: bit0 = x, bit1 = y, bit2 = a, bit3 = b.
// A vector of records has exactly the layout of a BTF1 payload.
class TrialRecord {
 public:
  constexpr TrialRecord() = default;
  constexpr TrialRecord(int x, int y, int a, int b)
      : bits_(static_cast<std::uint8_t>((x & 1) | (y & 1) << 1 | (a & 1) << 2 | (b & 1) << 3)) {}

  static constexpr TrialRecord from_byte(std::uint8_t byte) {
    TrialRecord r;
    r.bits_ = byte & 0x0f;
    return r;
  }

  constexpr int x() const { return bits_ & 1; }
  constexpr int y() const { return (bits_ >> 1) & 1; }
  constexpr int a() const { return (bits_ >> 2) & 1; }
  constexpr int b() const { return (bits_ >> 3) & 1; }
  constexpr std::uint8_t byte() const { return bits_; }
  constexpr int cell() const { return cell_index(a(), b(), x(), y()); }

  friend constexpr bool operator==(TrialRecord, TrialRecord) = default;

 private:
  std::uint8_t bits_ = 0;
};
static_assert(sizeof(TrialRecord) == 1);

using TrialStream = std::vector<TrialRecord>;

struct CountsTable {
  // counts[2x+y][2a+b]
  std::array<std::array<std::uint64_t, 4>, 4> counts{};
  std::uint64_t n_total = 0;

  std::uint64_t at(int a, int b, int x, int y) const { return counts[2 * x + y][2 * a + b]; }
  std::uint64_t setting_total(int x, int y) const;
  void add(TrialRecord r) {
    ++counts[2 * r.x() + r.y()][2 * r.a() + r.b()];
    ++n_total;
  }
  void set(int a, int b, int x, int y, std::uint64_t v);
  CountsTable& operator+=(const CountsTable& other);
  friend bool operator==(const CountsTable&, const CountsTable&) = default;
};

struct JointDistribution {
  Table16 p{};

  double operator()(int a, int b, int x, int y) const { return p[cell_index(a, b, x, y)]; }
  double& at(int a, int b, int x, int y) { return p[cell_index(a, b, x, y)]; }

  double setting_weight(int x, int y) const;
  // p(a,b|x,y); throws EmptyCell when p(x,y) = 0.
  double conditional(int a, int b, int x, int y) const;
  double marginal_a(int a, int x, int y) const;
  double marginal_b(int b, int x, int y) const;

  // Throws InvalidParams when an entry is negative or the total is off by more than tol.
  void validate(double tol = 1e-12) const;

  static JointDistribution from_counts(const CountsTable& c);
  // Uniform settings, cond[2x+y][2a+b] = p(ab|xy).
  static JointDistribution from_conditionals(const std::array<std::array<double, 4>, 4>& cond);
};

struct BellFunction {
  Table16 t{};
  double operator()(int a, int b, int x, int y) const { return t[cell_index(a, b, x, y)]; }
  double& at(int a, int b, int x, int y) { return t[cell_index(a, b, x, y)]; }
};

double expectation(const JointDistribution& d, const Table16& f);

CountsTable counts_from_stream(std::span<const TrialRecord> stream);

// Vertex k has lambda = (a0,a1,b0,b1) with k = a0<<3 | a1<<2 | b0<<1 | b1.
std::array<JointDistribution, 16> lr_vertices();

// Box k: s = k>>1 picks the anticorrelated setting pair (x*,y*) = (1^(s>>1), 1^(s&1)),
// flip = k&1 flips the outputs of station B. Box 0 is the canonical box with (x*,y*) = (1,1).
std::array<JointDistribution, 8> pr_boxes();

// 16 LR vertices followed by the 8 PR boxes.
const std::array<JointDistribution, 24>& polytope_vertices();

bool is_nonsignaling(const JointDistribution& d, double tol);

double tv_distance(const JointDistribution& d1, const JointDistribution& d2);

JointDistribution mix(std::span<const double> weights, std::span<const JointDistribution> dists);

}  // namespace bellcert
