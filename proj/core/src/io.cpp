#include "spde/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spde/errors.hpp"

namespace spde {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_table(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw invalid_spec("csv row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw numeric_error("cannot open for writing: " + path);
  f.write(content.data(), std::streamsize(content.size()));
  if (!f) throw numeric_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw invalid_spec("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {
std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
  return r;
}
}  // namespace

std::string f64_bytes(const std::vector<double>& values) {
  std::string out(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &values[i], 8);
    bits = to_le(bits);
    std::memcpy(out.data() + i * 8, &bits, 8);
  }
  return out;
}

std::vector<double> f64_from_bytes(const std::string& bytes) {
  if (bytes.size() % 8 != 0)
    throw invalid_spec("f64 payload length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, bytes.data() + i * 8, 8);
    bits = to_le(bits);
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

}  // namespace spde
