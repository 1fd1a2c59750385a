/*******************************************************************************
* Copyright 2026 The dphase Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/


#pragma once

// Experiment configuration files:
//
//   # comment
//   task = norm
//   seed = 7
//   [model]
//   p = 2
//   weight = power_clipped(0.5)
//
// Keys before the first section belong to the "" section. Every key must be
// read by the task; leftovers are reported as unknown.

#include <dphase/core.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dphase {

/// Configuration problem located at file:line.
class ConfigError : public InputError {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : InputError(where + ": " + what) {}
};

class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(std::istream& is, const std::string& source) {
    Config c;
    c.source_ = source;
    std::string line, section;
    int number = 0;
    while (std::getline(is, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3)
          throw ConfigError(source + ":" + std::to_string(number), "malformed section header");
        section = trim(t.substr(1, t.size() - 2));
        c.sections_.insert(section);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(source + ":" + std::to_string(number), "expected key = value");
      const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(number), "empty key");
      auto& sec = c.data_[section];
      if (sec.count(key))
        throw ConfigError(source + ":" + std::to_string(number),
                          "duplicate key '" + qualified(section, key) + "'");
      sec[key] = {value, number};
    }
    return c;
  }

  static Config parse_string(const std::string& text, const std::string& source) {
    std::istringstream is(text);
    return parse(is, source);
  }

  static Config load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path, "cannot open config file");
    return parse(is, path);
  }

  const std::string& source() const { return source_; }

  bool has(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    return s != data_.end() && s->second.count(key);
  }

  std::string where(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    if (s != data_.end()) {
      auto k = s->second.find(key);
      if (k != s->second.end()) return source_ + ":" + std::to_string(k->second.line);
    }
    return source_;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const {
    throw ConfigError(where(section, key), qualified(section, key) + ": " + what);
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    if (s == data_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    used_.insert({section, key});
    return k->second.value;
  }

  std::string string(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) throw ConfigError(source_, "missing key '" + qualified(section, key) + "'");
    return *v;
  }

  std::string string(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
    return get(section, key).value_or(fallback);
  }

  double number(const std::string& section, const std::string& key) const {
    return to_number(section, key, string(section, key));
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    return v ? to_number(section, key, *v) : fallback;
  }

  long long integer(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    long long out = 0;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || end != v->data() + v->size())
      fail(section, key, "expected an integer, got '" + *v + "'");
    return out;
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    fail(section, key, "expected true or false, got '" + *v + "'");
  }

  /// Whitespace- or comma-separated numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              std::vector<double> fallback = {}) const {
    auto v = get(section, key);
    if (!v) return fallback;
    std::string s = *v;
    for (char& ch : s)
      if (ch == ',') ch = ' ';
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(to_number(section, key, tok));
    if (out.empty()) fail(section, key, "expected a list of numbers");
    return out;
  }

  /// Keys that were never read, as "file:line: key" messages.
  void require_all_used() const {
    for (const auto& [section, keys] : data_)
      for (const auto& [key, e] : keys)
        if (!used_.count({section, key}))
          throw ConfigError(source_ + ":" + std::to_string(e.line),
                            "unknown key '" + qualified(section, key) + "'");
  }

  /// Canonical text of every entry, sorted, for report echoes.
  std::map<std::string, std::string> flat() const {
    std::map<std::string, std::string> out;
    for (const auto& [section, keys] : data_)
      for (const auto& [key, e] : keys) out[qualified(section, key)] = e.value;
    return out;
  }

  /// Overrides (or adds) a value, e.g. from command-line flags.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = {value, 0};
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  double to_number(const std::string& section, const std::string& key, const std::string& v) const {
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out))
      fail(section, key, "expected a number, got '" + v + "'");
    return out;
  }

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::set<std::string> sections_;
  mutable std::set<std::pair<std::string, std::string>> used_;
};

}  // namespace dphase
