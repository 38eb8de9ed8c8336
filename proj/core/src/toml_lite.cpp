#include "spde/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "spde/errors.hpp"
#include "spde/io.hpp"

namespace spde {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw invalid_spec("config line " + std::to_string(line) + ": " + what);
}

bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  int line;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  void skip_ws() {
    while (!done() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
};

TomlValue parse_scalar(Cursor& c);

TomlValue parse_string(Cursor& c) {
  TomlValue v;
  v.kind = TomlValue::Kind::string;
  v.line = c.line;
  ++c.i;  // opening quote
  while (true) {
    if (c.done()) fail(c.line, "unterminated string");
    char ch = c.s[c.i++];
    if (ch == '"') break;
    if (ch == '\\') {
      if (c.done()) fail(c.line, "dangling escape");
      char e = c.s[c.i++];
      switch (e) {
        case '"': v.str += '"'; break;
        case '\\': v.str += '\\'; break;
        case 'n': v.str += '\n'; break;
        case 't': v.str += '\t'; break;
        default: fail(c.line, std::string("unsupported escape \\") + e);
      }
    } else {
      v.str += ch;
    }
  }
  return v;
}

TomlValue parse_array(Cursor& c) {
  TomlValue v;
  v.kind = TomlValue::Kind::array;
  v.line = c.line;
  ++c.i;  // '['
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.i;
    return v;
  }
  while (true) {
    c.skip_ws();
    if (c.done()) fail(c.line, "unterminated array");
    v.arr.push_back(parse_scalar(c));
    c.skip_ws();
    if (c.done()) fail(c.line, "unterminated array");
    char ch = c.s[c.i++];
    if (ch == ']') break;
    if (ch != ',') fail(c.line, "expected ',' or ']' in array");
  }
  return v;
}

TomlValue parse_scalar(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing value");
  char ch = c.peek();
  if (ch == '"') return parse_string(c);
  if (ch == '[') return parse_array(c);

  std::size_t start = c.i;
  while (!c.done() && c.s[c.i] != ',' && c.s[c.i] != ']' && c.s[c.i] != '#' &&
         c.s[c.i] != ' ' && c.s[c.i] != '\t')
    ++c.i;
  std::string tok = c.s.substr(start, c.i - start);
  if (tok.empty()) fail(c.line, "missing value");

  TomlValue v;
  v.line = c.line;
  if (tok == "true" || tok == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.flag = (tok == "true");
    return v;
  }
  v.kind = TomlValue::Kind::number;
  if (tok == "inf" || tok == "+inf") {
    v.num = std::numeric_limits<double>::infinity();
    return v;
  }
  if (tok == "-inf") {
    v.num = -std::numeric_limits<double>::infinity();
    return v;
  }
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v.num);
  if (res.ec != std::errc{} || res.ptr != last)
    fail(c.line, "malformed number '" + tok + "'");
  return v;
}

const char* kind_name(TomlValue::Kind k) {
  switch (k) {
    case TomlValue::Kind::string: return "string";
    case TomlValue::Kind::number: return "number";
    case TomlValue::Kind::boolean: return "boolean";
    case TomlValue::Kind::array: return "array";
  }
  return "?";
}

}  // namespace

void TomlTable::set(const std::string& key, TomlValue v) {
  kv_[key] = std::move(v);
}

bool TomlTable::has(const std::string& key) const { return kv_.count(key) > 0; }

const TomlValue& TomlTable::at(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw invalid_spec("config: missing key '" + key + "'");
  return it->second;
}

std::vector<std::string> TomlTable::keys() const {
  std::vector<std::string> out;
  out.reserve(kv_.size());
  for (const auto& [k, v] : kv_) out.push_back(k);
  return out;
}

namespace {
[[noreturn]] void type_fail(const std::string& key, const TomlValue& v,
                            const char* want) {
  throw invalid_spec("config line " + std::to_string(v.line) + ": key '" +
                     key + "' must be a " + want + ", got " +
                     kind_name(v.kind));
}
}  // namespace

std::string TomlTable::get_string(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != TomlValue::Kind::string) type_fail(key, v, "string");
  return v.str;
}

double TomlTable::get_number(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != TomlValue::Kind::number) type_fail(key, v, "number");
  return v.num;
}

long long TomlTable::get_integer(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != TomlValue::Kind::number) type_fail(key, v, "number");
  if (std::floor(v.num) != v.num || std::abs(v.num) > 9.0e15)
    throw invalid_spec("config line " + std::to_string(v.line) + ": key '" +
                       key + "' must be an integer");
  return static_cast<long long>(v.num);
}

bool TomlTable::get_bool(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != TomlValue::Kind::boolean) type_fail(key, v, "boolean");
  return v.flag;
}

std::vector<double> TomlTable::get_number_array(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != TomlValue::Kind::array) type_fail(key, v, "array");
  std::vector<double> out;
  out.reserve(v.arr.size());
  for (const auto& e : v.arr) {
    if (e.kind != TomlValue::Kind::number)
      type_fail(key, e, "number array element");
    out.push_back(e.num);
  }
  return out;
}

std::string TomlTable::get_string_or(const std::string& key,
                                     const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double TomlTable::get_number_or(const std::string& key, double fallback) const {
  return has(key) ? get_number(key) : fallback;
}
long long TomlTable::get_integer_or(const std::string& key,
                                    long long fallback) const {
  return has(key) ? get_integer(key) : fallback;
}
bool TomlTable::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}
std::vector<double> TomlTable::get_number_array_or(
    const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? get_number_array(key) : fallback;
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string prefix;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    Cursor c{line, 0, line_no};
    c.skip_ws();
    if (c.done() || c.peek() == '#') {
      if (pos > text.size()) break;
      continue;
    }

    if (c.peek() == '[') {
      std::size_t close = line.find(']', c.i);
      if (close == std::string::npos) fail(line_no, "unterminated [table]");
      std::string name = line.substr(c.i + 1, close - c.i - 1);
      if (name.empty()) fail(line_no, "empty table name");
      for (char ch : name)
        if (!is_bare_char(ch)) fail(line_no, "invalid table name");
      Cursor rest{line, close + 1, line_no};
      rest.skip_ws();
      if (!rest.done() && rest.peek() != '#')
        fail(line_no, "trailing characters after [table]");
      prefix = name + ".";
      if (pos > text.size()) break;
      continue;
    }

    // key = value
    std::size_t kstart = c.i;
    while (!c.done() && is_bare_char(c.peek())) ++c.i;
    std::string key = line.substr(kstart, c.i - kstart);
    if (key.empty()) fail(line_no, "expected a key");
    c.skip_ws();
    if (c.done() || c.peek() != '=') fail(line_no, "expected '=' after key");
    ++c.i;
    TomlValue v = parse_scalar(c);
    c.skip_ws();
    if (!c.done() && c.peek() != '#')
      fail(line_no, "trailing characters after value");
    v.line = line_no;
    table.set(prefix + key, std::move(v));
    if (pos > text.size()) break;
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  return parse_toml(read_text_file(path));
}

}  // namespace spde
