#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spde {

// FNV-1a 64-bit content hash (artifact fingerprinting).
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);  // 16 lowercase hex digits

// Shortest round-trip decimal form of a double ("nan", "inf", "-inf" for
// non-finite values).  Used for every number written to CSV/JSON artifacts
// so outputs are bit-stable across runs and thread counts.
std::string format_double(double v);

// CSV with a header row; every cell through format_double, '\n' endings.
std::string csv_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Flat little-endian f64 payload (and its inverse) for field snapshots.
std::string f64_bytes(const std::vector<double>& values);
std::vector<double> f64_from_bytes(const std::string& bytes);

}  // namespace spde
