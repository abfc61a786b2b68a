#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pushrl/kv.hpp"
#include "pushrl/rng.hpp"

namespace pushrl {

inline constexpr const char* kCodeVersion = "0.1.0";

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-temp-rename so consumers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

// Fixed float formatting for CSV bodies: enough digits to be useful, stable
// across runs.
inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header) {
    append_row(header);
  }

  void append_row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

// Run manifest: config snapshot, derived RNG streams, wall-clock timings,
// and a checksum for every file the run emitted.
class RunManifest {
 public:
  RunManifest(const std::string& command, const KvFile& config_snapshot,
              const std::vector<std::uint64_t>& master_seeds) {
    j_["schema_version"] = 1;
    j_["code_version"] = kCodeVersion;
    j_["command"] = command;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_snapshot.entries()) cfg[k] = v;
    j_["config"] = cfg;
    j_["master_seeds"] = master_seeds;
    nlohmann::json streams = nlohmann::json::object();
    for (const auto seed : master_seeds) {
      nlohmann::json s = nlohmann::json::object();
      s["agent_init"] = derive_seed(seed, 1);
      s["env"] = derive_seed(seed, 2);
      s["resets"] = derive_seed(seed, 3);
      s["actions"] = derive_seed(seed, 4);
      s["her"] = derive_seed(seed, 5);
      s["batches"] = derive_seed(seed, 6);
      streams[std::to_string(seed)] = s;
    }
    j_["rng_streams"] = streams;
    j_["timings_seconds"] = nlohmann::json::object();
    j_["outputs"] = nlohmann::json::array();
  }

  // Writes through the atomic path and records the checksum of what landed.
  void emit_output(const std::filesystem::path& path, const std::string& content) {
    atomic_write_file(path, content);
    nlohmann::json o;
    o["path"] = path.string();
    o["fnv1a64"] = fnv1a64_hex(content);
    o["bytes"] = content.size();
    j_["outputs"].push_back(o);
  }

  void add_timing(const std::string& name, double seconds) {
    j_["timings_seconds"][name] = seconds;
  }

  void set(const std::string& key, const nlohmann::json& value) { j_[key] = value; }

  void write(const std::filesystem::path& path) const {
    atomic_write_file(path, j_.dump(2) + "\n");
  }

  const nlohmann::json& json() const { return j_; }

 private:
  nlohmann::json j_;
};

}  // namespace pushrl
