#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dqpt/errors.hpp"
#include "dqpt/membrane.hpp"
#include "dqpt/spectrum.hpp"

namespace dqpt::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// key = value configuration with [sections]
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Flat configuration. Keys are stored as "section.key"; keys before the
/// first section header have no prefix. Every value read through a getter
/// (defaults included) is recorded in the resolved view, which is what gets
/// hashed and echoed into sidecars.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<string>") {
    Config c;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      std::string line = trim(raw);
      if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (c.values_.count(full)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
      c.values_[full] = value;
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  // Adds a value that did not come from the file (e.g. a command-line
  // override) to the resolved view.
  void record(const std::string& key, std::string value) const { resolved_[key] = std::move(value); }

  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      if (!fallback) throw ConfigError("missing config key '" + key + "'");
      resolved_[key] = *fallback;
      return *fallback;
    }
    resolved_[key] = it->second;
    return it->second;
  }

  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      resolved_[key] = format_double(*fallback);
      return *fallback;
    }
    return to_double(key, get_string(key));
  }

  long long get_int(const std::string& key, std::optional<long long> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      resolved_[key] = std::to_string(*fallback);
      return *fallback;
    }
    return to_int(key, get_string(key));
  }

  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      resolved_[key] = *fallback ? "true" : "false";
      return *fallback;
    }
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_doubles(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      std::string joined;
      for (std::size_t i = 0; i < fallback->size(); ++i) joined += (i ? ", " : "") + format_double((*fallback)[i]);
      resolved_[key] = joined;
      return *fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
  }

  std::vector<long long> get_ints(const std::string& key, std::optional<std::vector<long long>> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      std::string joined;
      for (std::size_t i = 0; i < fallback->size(); ++i) joined += (i ? ", " : "") + std::to_string((*fallback)[i]);
      resolved_[key] = joined;
      return *fallback;
    }
    std::vector<long long> out;
    for (const auto& item : split_list(get_string(key))) out.push_back(to_int(key, item));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

  /// Keys present in the file but never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!resolved_.count(k)) out.push_back(k);
    return out;
  }

  /// Sorted "key=value" lines of the resolved view.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : resolved_) out += k + "=" + v + "\n";
    return out;
  }

  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  static long long to_int(const std::string& key, const std::string& v) {
    // Accept integral values written in floating notation, e.g. 1e6.
    const double d = to_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 9.0e15)
      throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long long>(d);
  }

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

/// 64-bit FNV-1a as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const Config& config) { return fnv1a_hex(config.canonical()); }

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Writes through a temporary file and renames, so a failed run leaves no
/// partial output behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_number(double v) { return Config::format_double(v); }

/// Column-major table rendered as CSV with '#' metadata lines first.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::string render() const {
    if (header.size() != columns.size()) throw InternalError("csv: header/column count mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
      if (c.size() != rows) throw InternalError("csv: ragged columns");
    std::string out;
    for (const auto& [k, v] : metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += ",";
        out += format_number(columns[c][r]);
      }
      out += "\n";
    }
    return out;
  }
};

inline void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Spectrum and membrane serialization
// ---------------------------------------------------------------------------

inline json spectrum_meta(const ModeSpectrum& s) {
  return json{{"kind", std::string(to_string(s.kind()))},
              {"alpha", s.alpha()},
              {"beta", s.beta()},
              {"size", s.size()},
              {"period_hint", s.period_hint()}};
}

inline json spectrum_to_json(const ModeSpectrum& s) {
  json j = spectrum_meta(s);
  j["frequencies"] = s.frequencies();
  j["couplings"] = s.couplings();
  return j;
}

inline ModeSpectrum spectrum_from_json(const json& j) {
  try {
    const auto kind = spectrum_kind_from_string(j.at("kind").get<std::string>());
    auto w = j.at("frequencies").get<std::vector<double>>();
    auto g = j.at("couplings").get<std::vector<double>>();
    if (j.contains("size") && j.at("size").get<std::size_t>() != w.size())
      throw ConfigError("spectrum json: size does not match the frequency list");
    return ModeSpectrum(kind, j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("period_hint").get<double>(),
                        std::move(w), std::move(g));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spectrum json: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("spectrum json: ") + e.what());
  }
}

inline ModeSpectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read spectrum file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("spectrum file '" + path.string() + "': " + e.what());
  }
  return spectrum_from_json(j);
}

/// Membrane constants from a config section. `preset = hbn` fills the h-BN
/// values; explicit keys override them. `fundamental_hz` solves for R.
inline MembraneParams membrane_params_from_config(const Config& c, const std::string& section = "membrane") {
  auto key = [&](const char* k) { return section.empty() ? std::string(k) : section + "." + k; };
  MembraneParams p;
  const std::string preset = c.get_string(key("preset"), std::string("hbn"));
  if (preset == "hbn") {
    p = MembraneParams::hbn(1e-6);
  } else if (preset != "none") {
    throw ConfigError("membrane preset must be 'hbn' or 'none', got '" + preset + "'");
  }
  if (c.has(key("thickness")) || preset == "none") p.thickness = c.get_double(key("thickness"));
  if (c.has(key("young_modulus")) || preset == "none") p.young_modulus = c.get_double(key("young_modulus"));
  if (c.has(key("density_2d")) || preset == "none") p.density_2d = c.get_double(key("density_2d"));
  if (c.has(key("strain_rule"))) p.strain_rule = c.get_double(key("strain_rule"));
  if (c.has(key("strain"))) {
    p.strain = c.get_double(key("strain"));
    p.strain_rule.reset();
  }
  if (!p.strain_rule && !(p.strain > 0.0)) throw ConfigError("membrane: set either strain or strain_rule");
  p.gradient = c.get_double(key("gradient"), 1e5);
  p.g_factor = c.get_double(key("g_factor"), constants::electron_g);
  p.poisson_ratio = c.get_double(key("poisson_ratio"), 0.0);
  if (c.has(key("fundamental_hz"))) {
    p = solve_radius_for_fundamental(p, c.get_double(key("fundamental_hz")));
  } else {
    p.radius = c.get_double(key("radius"));
  }
  return p;
}

inline json membrane_params_to_json(const MembraneParams& p) {
  json j{{"radius", p.radius},
         {"thickness", p.thickness},
         {"young_modulus", p.young_modulus},
         {"density_2d", p.density_2d},
         {"strain", p.effective_strain()},
         {"gradient", p.gradient},
         {"g_factor", p.g_factor},
         {"bohr_magneton", p.bohr_magneton},
         {"poisson_ratio", p.poisson_ratio}};
  j["strain_rule"] = p.strain_rule ? json(*p.strain_rule) : json(nullptr);
  j["fundamental_target_hz"] = p.fundamental_target ? json(*p.fundamental_target) : json(nullptr);
  return j;
}

}  // namespace dqpt::io
