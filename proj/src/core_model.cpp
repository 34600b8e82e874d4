#include "bellcert/core.hpp"

#include <cmath>
#include <string>

namespace bellcert {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::EmptySettingCell: return "EmptySettingCell";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NoViolationPossible: return "NoViolationPossible";
    case ErrorKind::StreamTooShort: return "StreamTooShort";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidPrime: return "InvalidPrime";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateMargin: return "DegenerateMargin";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::Abort: return "Abort";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

std::uint64_t CountsTable::setting_total(int x, int y) const {
  const auto& row = counts[2 * x + y];
  return row[0] + row[1] + row[2] + row[3];
}

void CountsTable::set(int a, int b, int x, int y, std::uint64_t v) {
  auto& slot = counts[2 * x + y][2 * a + b];
  n_total = n_total - slot + v;
  slot = v;
}

CountsTable& CountsTable::operator+=(const CountsTable& other) {
  for (int s = 0; s < 4; ++s)
    for (int o = 0; o < 4; ++o) counts[s][o] += other.counts[s][o];
  n_total += other.n_total;
  return *this;
}

double JointDistribution::setting_weight(int x, int y) const {
  double s = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) s += (*this)(a, b, x, y);
  return s;
}

double JointDistribution::conditional(int a, int b, int x, int y) const {
  double w = setting_weight(x, y);
  if (!(w > 0))
    throw Error(ErrorKind::EmptyCell,
                "p(x,y) = 0 at x=" + std::to_string(x) + ", y=" + std::to_string(y));
  return (*this)(a, b, x, y) / w;
}

double JointDistribution::marginal_a(int a, int x, int y) const {
  return conditional(a, 0, x, y) + conditional(a, 1, x, y);
}

double JointDistribution::marginal_b(int b, int x, int y) const {
  return conditional(0, b, x, y) + conditional(1, b, x, y);
}

void JointDistribution::validate(double tol) const {
  double s = 0;
  for (double v : p) {
    if (!(v >= 0)) throw Error(ErrorKind::InvalidParams, "negative or NaN probability");
    s += v;
  }
  if (std::abs(s - 1.0) > tol)
    throw Error(ErrorKind::InvalidParams, "probabilities sum to " + std::to_string(s));
}

JointDistribution JointDistribution::from_counts(const CountsTable& c) {
  JointDistribution d;
  if (c.n_total == 0) return d;
  const double n = static_cast<double>(c.n_total);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) d.at(a, b, x, y) = static_cast<double>(c.at(a, b, x, y)) / n;
  return d;
}

JointDistribution JointDistribution::from_conditionals(
    const std::array<std::array<double, 4>, 4>& cond) {
  JointDistribution d;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) d.at(a, b, x, y) = 0.25 * cond[2 * x + y][2 * a + b];
  return d;
}

double expectation(const JointDistribution& d, const Table16& f) {
  double s = 0;
  for (int i = 0; i < 16; ++i) s += d.p[i] * f[i];
  return s;
}

CountsTable counts_from_stream(std::span<const TrialRecord> stream) {
  std::array<std::uint64_t, 16> hist{};
  for (TrialRecord r : stream) ++hist[r.byte()];
  CountsTable c;
  for (int byte = 0; byte < 16; ++byte) {
    TrialRecord r = TrialRecord::from_byte(static_cast<std::uint8_t>(byte));
    c.counts[2 * r.x() + r.y()][2 * r.a() + r.b()] += hist[byte];
  }
  c.n_total = stream.size();
  return c;
}

std::array<JointDistribution, 16> lr_vertices() {
  std::array<JointDistribution, 16> out{};
  for (int k = 0; k < 16; ++k) {
    const int ax[2] = {(k >> 3) & 1, (k >> 2) & 1};
    const int by[2] = {(k >> 1) & 1, k & 1};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) out[k].at(ax[x], by[y], x, y) = 0.25;
  }
  return out;
}

std::array<JointDistribution, 8> pr_boxes() {
  std::array<JointDistribution, 8> out{};
  for (int k = 0; k < 8; ++k) {
    const int s = k >> 1, flip = k & 1;
    const int xs = 1 ^ (s >> 1), ys = 1 ^ (s & 1);
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const int parity = ((x == xs && y == ys) ? 1 : 0) ^ flip;
        for (int a = 0; a < 2; ++a) out[k].at(a, a ^ parity, x, y) = 0.125;
      }
  }
  return out;
}

const std::array<JointDistribution, 24>& polytope_vertices() {
  static const std::array<JointDistribution, 24> all = [] {
    std::array<JointDistribution, 24> v{};
    auto lr = lr_vertices();
    auto pr = pr_boxes();
    for (int k = 0; k < 16; ++k) v[k] = lr[k];
    for (int k = 0; k < 8; ++k) v[16 + k] = pr[k];
    return v;
  }();
  return all;
}

bool is_nonsignaling(const JointDistribution& d, double tol) {
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a)
      if (std::abs(d.marginal_a(a, x, 0) - d.marginal_a(a, x, 1)) > tol) return false;
  for (int y = 0; y < 2; ++y)
    for (int b = 0; b < 2; ++b)
      if (std::abs(d.marginal_b(b, 0, y) - d.marginal_b(b, 1, y)) > tol) return false;
  return true;
}

double tv_distance(const JointDistribution& d1, const JointDistribution& d2) {
  double s = 0;
  for (int i = 0; i < 16; ++i) s += std::abs(d1.p[i] - d2.p[i]);
  return 0.5 * s;
}

JointDistribution mix(std::span<const double> weights, std::span<const JointDistribution> dists) {
  if (weights.size() != dists.size())
    throw Error(ErrorKind::LengthMismatch, "weights and distributions differ in length");
  JointDistribution out;
  for (std::size_t k = 0; k < weights.size(); ++k)
    for (int i = 0; i < 16; ++i) out.p[i] += weights[k] * dists[k].p[i];
  return out;
}

}  // namespace bellcert
