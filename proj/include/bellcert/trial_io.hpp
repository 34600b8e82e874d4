#pragma once

// BTF1 trial files: magic "BELLTRL1", u64 LE trial count, one byte per trial
// (b0=x, b1=y, b2=a, b3=b, high nibble zero). CSV alternative with header x,y,a,b.
// Bit files: u64 LE bit count followed by MSB-first packed bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bellcert/bits.hpp"
#include "bellcert/core.hpp"

namespace bellcert {

TrialStream read_btf(const std::filesystem::path& path);
void write_btf(const std::filesystem::path& path, const TrialStream& trials);

TrialStream read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const TrialStream& trials);

// Dispatch on content: BTF1 magic, otherwise CSV.
TrialStream read_trials(const std::filesystem::path& path);

BitString read_bits(const std::filesystem::path& path);
void write_bits(const std::filesystem::path& path, const BitString& bits);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace bellcert
