#pragma once

// Flat-file run configuration: one `section.key = value` per line, `#`
// starts a comment, no nesting.  Values stay strings until a typed getter
// asks for them, so the raw text can be echoed verbatim into manifests.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_num(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto* last = t.data() + t.size();
  const auto res = std::from_chars(t.data(), last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  return out;
}

}  // namespace detail

struct Config {
  std::map<std::string, std::string> kv;
  std::string text;  // raw source

  static Config parse(const std::string& text,
                      const std::string& origin = "<config>") {
    Config c;
    c.text = text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const size_t hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected `key = value`");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty key");
      for (char ch : key)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' &&
            ch != '_' && ch != '-')
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": bad key character in '" + key + "'");
      if (!c.kv.emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  const std::string& str(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing key: " + key);
    return it->second;
  }
  std::string str(const std::string& key, const std::string& def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
  }

  double num(const std::string& key) const {
    return detail::parse_num(key, str(key));
  }
  double num(const std::string& key, double def) const {
    return has(key) ? num(key) : def;
  }

  long integer(const std::string& key) const {
    const double v = num(key);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
      throw ConfigError("expected an integer for " + key);
    return l;
  }
  long integer(const std::string& key, long def) const {
    return has(key) ? integer(key) : def;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string t = detail::trim(str(key));
    std::uint64_t out = 0;
    const auto* last = t.data() + t.size();
    const auto res = std::from_chars(t.data(), last, out);
    if (res.ec != std::errc{} || res.ptr != last)
      throw ConfigError("bad unsigned integer for " + key);
    return out;
  }
  std::uint64_t u64(const std::string& key, std::uint64_t def) const {
    return has(key) ? u64(key) : def;
  }

  // comma-separated numbers
  std::vector<double> num_list(const std::string& key) const {
    std::vector<double> out;
    std::string item;
    std::istringstream in(str(key));
    while (std::getline(in, item, ','))
      out.push_back(detail::parse_num(key, item));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
  }
  std::vector<double> num_list(const std::string& key,
                               std::vector<double> def) const {
    return has(key) ? num_list(key) : std::move(def);
  }

  void set(const std::string& key, const std::string& value) {
    kv[key] = value;
  }
};

}  // namespace gexp
