#pragma once

#include <charconv>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushrl {

class KvFile;

struct KvParseResult {
  std::vector<std::string> errors;  // "line N: message"
  bool ok() const { return errors.empty(); }
};

// Line-oriented `key = value` text format with `#` comments. Nesting is by
// dotted keys. Every file format in this project (layouts, trajectories,
// experiment configs) is a kv file with a schema_version entry.
class KvFile {
 public:
  static constexpr int kSchemaVersion = 1;

  static KvFile parse(const std::string& text, KvParseResult& result) {
    KvFile out;
    result.errors.clear();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        result.errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
        continue;
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        result.errors.push_back("line " + std::to_string(lineno) + ": empty key");
        continue;
      }
      if (out.entries_.count(key)) {
        result.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        continue;
      }
      out.entries_[key] = value;
    }
    return out;
  }

  // Convenience parse that throws on malformed text.
  static KvFile parse_or_throw(const std::string& text) {
    KvParseResult res;
    KvFile f = parse(text, res);
    if (!res.ok()) throw std::runtime_error("kv parse: " + res.errors.front());
    return f;
  }

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set_double(const std::string& key, double v) { set(key, format_double(v)); }
  void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }
  void set_doubles(const std::string& key, const std::vector<double>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) {
      if (i) s += " ";
      s += format_double(vs[i]);
    }
    set(key, s);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw std::runtime_error("missing required key '" + key + "'");
    return *v;
  }

  double require_double(const std::string& key) const { return to_double(require(key), key); }
  long long require_int(const std::string& key) const { return to_int(require(key), key); }

  double get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? to_double(*v, key) : fallback;
  }
  long long get_int(const std::string& key, long long fallback) const {
    auto v = get(key);
    return v ? to_int(*v, key) : fallback;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
  }

  std::vector<double> require_doubles(const std::string& key, size_t n) const {
    const auto vs = split_doubles(require(key), key);
    if (vs.size() != n)
      throw std::runtime_error("key '" + key + "': expected " + std::to_string(n) +
                               " numbers, got " + std::to_string(vs.size()));
    return vs;
  }

  // Keys present in the file but never read; used to reject unknown keys.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  std::string serialize(const std::string& header_comment = "") const {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // %.17g round-trips doubles exactly through the text format.
  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  static double to_double(const std::string& s, const std::string& key) {
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("key '" + key + "': '" + s + "' is not a number");
    }
  }

  static long long to_int(const std::string& s, const std::string& key) {
    try {
      size_t pos = 0;
      const long long v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("key '" + key + "': '" + s + "' is not an integer");
    }
  }

  static std::vector<double> split_doubles(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(to_double(tok, key));
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace pushrl
