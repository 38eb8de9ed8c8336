#pragma once

#include <map>
#include <string>
#include <vector>

namespace spde {

// TOML-compatible subset: [table] headers (dotted names allowed), bare keys,
// strings, numbers, booleans, single-line arrays, # comments.  Keys are
// flattened to "table.key".  All diagnostics carry line numbers.
struct TomlValue {
  enum class Kind { string, number, boolean, array };
  Kind kind = Kind::number;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<TomlValue> arr;
  int line = 0;
};

class TomlTable {
 public:
  void set(const std::string& key, TomlValue v);
  bool has(const std::string& key) const;
  const TomlValue& at(const std::string& key) const;  // throws if missing
  std::vector<std::string> keys() const;              // sorted

  // Typed access; a type mismatch names the key and line.  The *_or forms
  // return the fallback when the key is absent.
  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  long long get_integer(const std::string& key) const;  // rejects fractions
  bool get_bool(const std::string& key) const;
  std::vector<double> get_number_array(const std::string& key) const;

  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;
  double get_number_or(const std::string& key, double fallback) const;
  long long get_integer_or(const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_number_array_or(
      const std::string& key, const std::vector<double>& fallback) const;

 private:
  std::map<std::string, TomlValue> kv_;
};

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

}  // namespace spde
