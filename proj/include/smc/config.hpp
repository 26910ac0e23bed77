#pragma once

// Flat INI-style configuration with unit-suffixed keys.
//
// Every physical quantity carries its unit in the key name, e.g.
//
//   [scenario]
//   X0_mm = 600
//   T0_C  = 25
//   F_max_kN = 4400
//
// Values are converted to SI when the file is parsed. Lookups name the base
// key ("X0") and the expected dimension; a key stored with a unit of another
// dimension is reported as an error instead of being silently converted.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smc {

/// Error raised for malformed or missing configuration. The message always
/// names the offending file and key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Dimension {
  none,
  length,
  area,
  time,
  velocity,
  temperature,
  pressure,
  viscosity,
  force,
  density,
  rate,
  conductivity,
  conductance,
  specific_heat,
  friction_coefficient,
  angle,
};

const char* dimension_name(Dimension d);

struct UnitInfo {
  double factor;  // multiply to convert to SI
  Dimension dim;
};

/// Looks up a unit suffix ("mm", "bar", "kPas", ...). Returns nullopt for
/// unknown suffixes.
std::optional<UnitInfo> find_unit(const std::string& suffix);

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& base) const;

  /// SI value of `base` in `section`. Throws ConfigError if missing or if the
  /// stored unit does not match `dim`.
  double quantity(const std::string& section, const std::string& base, Dimension dim) const;
  double quantity_or(const std::string& section, const std::string& base, Dimension dim,
                     double fallback) const;
  std::vector<double> quantity_list(const std::string& section, const std::string& base,
                                    Dimension dim) const;

  std::string text(const std::string& section, const std::string& base) const;
  std::string text_or(const std::string& section, const std::string& base,
                      const std::string& fallback) const;
  long integer_or(const std::string& section, const std::string& base, long fallback) const;
  bool flag_or(const std::string& section, const std::string& base, bool fallback) const;

  /// Keys present in a section, as written in the file.
  std::vector<std::string> keys(const std::string& section) const;

  const std::string& origin() const { return origin_; }
  /// Directory of the file this config came from; used to resolve relative
  /// paths referenced by the config.
  std::filesystem::path base_dir() const;

 private:
  struct Entry {
    std::string raw_key;
    std::string raw_value;
    std::optional<UnitInfo> unit;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& base) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace smc
