#ifndef CLIPTRAP_IO_KEYVALUE_HPP
#define CLIPTRAP_IO_KEYVALUE_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cliptrap/errors.hpp"

namespace cliptrap::io {

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// Parses a full-string floating point number. Accepts "inf".
inline std::optional<double> parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  if (s == "inf" || s == "+inf" || s == "infinity") return HUGE_VAL;
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

// Flat "key = value" document. '#' starts a comment; blank lines ignored.
// Later assignments override earlier ones, which is how command-line
// overrides are layered on top of a file.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw InputError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key = trim(std::string_view(body).substr(0, eq));
      if (key.empty()) {
        throw InputError(source + ":" + std::to_string(lineno) + ": empty key");
      }
      cfg.set(key, trim(std::string_view(body).substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Applies "key=value" assignment strings.
  void apply_overrides(const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw InputError("override '" + a + "' is not of the form key=value");
      }
      set(trim(std::string_view(a).substr(0, eq)), trim(std::string_view(a).substr(eq + 1)));
    }
  }

  void merge(const KeyValueConfig& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw InputError("missing config key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const auto v = parse_double(get_string(key));
    if (!v) throw InputError("config key '" + key + "' is not a number: '" + get_string(key) + "'");
    return *v;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::optional<double> find_double(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return get_double(key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& s = get_string(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw InputError("config key '" + key + "' is not a boolean: '" + s + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = parse_double(item);
      if (!v) throw InputError("config key '" + key + "' has a non-numeric entry '" + trim(item) + "'");
      out.push_back(*v);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cliptrap::io

#endif
