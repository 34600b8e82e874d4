#include "bellcert/trial_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace bellcert {

namespace {

constexpr char kMagic[8] = {'B', 'E', 'L', 'L', 'T', 'R', 'L', '1'};

std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

std::uint64_t BitString::get_word(std::size_t pos, unsigned len) const {
  if (len == 0 || pos >= n_) return 0;
  const std::size_t w = pos >> 6;
  const unsigned off = pos & 63;
  std::uint64_t v = words_[w] >> off;
  if (off != 0 && off + len > 64 && w + 1 < words_.size()) v |= words_[w + 1] << (64 - off);
  if (len < 64) v &= (std::uint64_t{1} << len) - 1;
  if (pos + len > n_) {
    const std::size_t valid = n_ - pos;
    v &= (std::uint64_t{1} << valid) - 1;
  }
  return v;
}

std::vector<std::uint8_t> BitString::to_bytes_msb() const {
  std::vector<std::uint8_t> out((n_ + 7) / 8, 0);
  for (std::size_t i = 0; i < n_; ++i)
    if (get(i)) out[i >> 3] |= static_cast<std::uint8_t>(0x80 >> (i & 7));
  return out;
}

BitString BitString::from_bytes_msb(std::span<const std::uint8_t> bytes, std::size_t nbits) {
  if (bytes.size() < (nbits + 7) / 8)
    throw Error(ErrorKind::LengthMismatch, "bit payload shorter than its declared length");
  BitString s(nbits);
  for (std::size_t i = 0; i < nbits; ++i) s.set(i, (bytes[i >> 3] >> (7 - (i & 7))) & 1);
  return s;
}

std::string BitString::to_hex() const {
  static const char* digits = "0123456789ABCDEF";
  std::string out;
  for (std::uint8_t byte : to_bytes_msb()) {
    out.push_back(digits[byte >> 4]);
    out.push_back(digits[byte & 15]);
  }
  return out;
}

BitString outcome_bits(std::span<const TrialRecord> trials) {
  BitString s(2 * trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].a()) s.set(2 * i, true);
    if (trials[i].b()) s.set(2 * i + 1, true);
  }
  return s;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorKind::Io, "read failed for " + path.string());
  return data;
}

TrialStream read_btf(const std::filesystem::path& path) {
  auto data = read_file(path);
  if (data.size() < 16 || std::memcmp(data.data(), kMagic, 8) != 0)
    throw Error(ErrorKind::Parse, path.string() + ": missing BELLTRL1 header");
  const std::uint64_t n = load_le64(data.data() + 8);
  if (data.size() - 16 != n)
    throw Error(ErrorKind::Parse, path.string() + ": header declares " + std::to_string(n) +
                                      " trials but payload holds " + std::to_string(data.size() - 16));
  TrialStream out(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint8_t byte = data[16 + i];
    if (byte & 0xf0)
      throw Error(ErrorKind::Parse, path.string() + ": trial " + std::to_string(i) +
                                        " has nonzero reserved bits");
    out[i] = TrialRecord::from_byte(byte);
  }
  return out;
}

void write_btf(const std::filesystem::path& path, const TrialStream& trials) {
  std::vector<std::uint8_t> bytes(16 + trials.size());
  std::memcpy(bytes.data(), kMagic, 8);
  store_le64(bytes.data() + 8, trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) bytes[16 + i] = trials[i].byte();
  write_all(path, bytes);
}

TrialStream read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x,y,a,b")
    throw Error(ErrorKind::Parse, path.string() + ": expected header x,y,a,b");
  TrialStream out;
  std::uint64_t index = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    int v[4];
    bool ok = line.size() == 7;
    for (int k = 0; ok && k < 4; ++k) {
      const char c = line[2 * k];
      ok = (c == '0' || c == '1') && (k == 3 || line[2 * k + 1] == ',');
      v[k] = c - '0';
    }
    if (!ok)
      throw Error(ErrorKind::Parse,
                  path.string() + ": malformed trial " + std::to_string(index) + ": '" + line + "'");
    out.emplace_back(v[0], v[1], v[2], v[3]);
    ++index;
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const TrialStream& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "x,y,a,b\n";
  for (TrialRecord r : trials) out << r.x() << ',' << r.y() << ',' << r.a() << ',' << r.b() << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TrialStream read_trials(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char head[8] = {};
  in.read(head, 8);
  if (in.gcount() == 8 && std::memcmp(head, kMagic, 8) == 0) return read_btf(path);
  return read_csv(path);
}

BitString read_bits(const std::filesystem::path& path) {
  auto data = read_file(path);
  if (data.size() < 8) throw Error(ErrorKind::Parse, path.string() + ": missing bit-count header");
  const std::uint64_t n = load_le64(data.data());
  if (data.size() - 8 != (n + 7) / 8)
    throw Error(ErrorKind::Parse, path.string() + ": payload size does not match bit count");
  return BitString::from_bytes_msb(std::span(data).subspan(8), n);
}

void write_bits(const std::filesystem::path& path, const BitString& bits) {
  auto payload = bits.to_bytes_msb();
  std::vector<std::uint8_t> bytes(8 + payload.size());
  store_le64(bytes.data(), bits.size());
  std::memcpy(bytes.data() + 8, payload.data(), payload.size());
  write_all(path, bytes);
}

}  // namespace bellcert
