#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/io.hpp"

using namespace spde;

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64(std::string("")) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ULL);
  CHECK(hash_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
  CHECK(hash_hex(0x1ULL) == "0000000000000001");
}

TEST_CASE("format_double: shortest text that round-trips") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");

  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::ldexp(mant(eng), expo(eng));
    const double back = std::strtod(format_double(v).c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("csv tables are exact strings") {
  const auto s = csv_table({"t", "sup"}, {{0.0, 1.5}, {0.25, 2.0}});
  CHECK(s == "t,sup\n0,1.5\n0.25,2\n");
  CHECK_THROWS_AS(csv_table({"a"}, {{1.0, 2.0}}), invalid_spec);
}

TEST_CASE("f64 payloads round-trip bitwise") {
  std::vector<double> vals{0.0, -0.0, 1.5, -2.25e-300,
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::infinity()};
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> unif(-1e6, 1e6);
  for (int k = 0; k < 100; ++k) vals.push_back(unif(eng));

  const std::string bytes = f64_bytes(vals);
  CHECK(bytes.size() == 8 * vals.size());
  const auto back = f64_from_bytes(bytes);
  REQUIRE(back.size() == vals.size());
  CHECK(std::memcmp(back.data(), vals.data(), bytes.size()) == 0);

  CHECK_THROWS_AS(f64_from_bytes(std::string(9, 'x')), invalid_spec);
}

TEST_CASE("text files write and read back") {
  const std::string path = "io_test_scratch.txt";
  write_text_file(path, "line1\nline2\n");
  CHECK(read_text_file(path) == "line1\nline2\n");
  CHECK_THROWS_AS(read_text_file("definitely_missing_file.txt"),
                  invalid_spec);
  std::remove(path.c_str());
}
