#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tgadv/util/error.hpp"

namespace tgadv {

/// Flat `key=value` text: one entry per line, `#` comments, dotted keys.
using KeyValues = std::map<std::string, std::string>;

inline auto trim(std::string s) -> std::string {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline auto parse_key_values(std::istream& in, const std::string& origin = "<stream>")
    -> KeyValues {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline auto read_key_values(const std::filesystem::path& path) -> KeyValues {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

inline void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

inline auto parse_bool(const std::string& s) -> bool {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InputError("not a boolean: '" + s + "'");
}

inline auto parse_double(const std::string& s) -> double {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

inline auto parse_int(const std::string& s) -> long long {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw InputError("not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw InputError("not an integer: '" + s + "'");
  return v;
}

}  // namespace tgadv
