#include "smc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace smc {

namespace {

struct UnitRow {
  const char* suffix;
  double factor;
  Dimension dim;
};

constexpr UnitRow kUnits[] = {
    {"m", 1.0, Dimension::length},
    {"cm", 1e-2, Dimension::length},
    {"mm", 1e-3, Dimension::length},
    {"um", 1e-6, Dimension::length},
    {"m2", 1.0, Dimension::area},
    {"mm2", 1e-6, Dimension::area},
    {"s", 1.0, Dimension::time},
    {"ms", 1e-3, Dimension::time},
    {"min", 60.0, Dimension::time},
    {"m_per_s", 1.0, Dimension::velocity},
    {"mm_per_s", 1e-3, Dimension::velocity},
    {"C", 1.0, Dimension::temperature},
    {"Pa", 1.0, Dimension::pressure},
    {"kPa", 1e3, Dimension::pressure},
    {"MPa", 1e6, Dimension::pressure},
    {"GPa", 1e9, Dimension::pressure},
    {"bar", 1e5, Dimension::pressure},
    {"Pas", 1.0, Dimension::viscosity},
    {"kPas", 1e3, Dimension::viscosity},
    {"MPas", 1e6, Dimension::viscosity},
    {"N", 1.0, Dimension::force},
    {"kN", 1e3, Dimension::force},
    {"MN", 1e6, Dimension::force},
    {"kg_per_m3", 1.0, Dimension::density},
    {"1_per_s", 1.0, Dimension::rate},
    {"W_per_mC", 1.0, Dimension::conductivity},
    {"W_per_mK", 1.0, Dimension::conductivity},
    {"W_per_m2C", 1.0, Dimension::conductance},
    {"W_per_m2K", 1.0, Dimension::conductance},
    {"J_per_kgC", 1.0, Dimension::specific_heat},
    {"J_per_kgK", 1.0, Dimension::specific_heat},
    {"Ns_per_m3", 1.0, Dimension::friction_coefficient},
    {"MNs_per_m3", 1e6, Dimension::friction_coefficient},
    {"rad", 1.0, Dimension::angle},
    {"deg", 3.14159265358979323846 / 180.0, Dimension::angle},
};

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Splits "F_max_kN" into ("F_max", kN). The leftmost split with a known unit
// wins, so multi-token units such as "mm_per_s" are preferred over "s".
std::pair<std::string, std::optional<UnitInfo>> split_key(const std::string& key) {
  for (std::size_t pos = key.find('_'); pos != std::string::npos; pos = key.find('_', pos + 1)) {
    if (pos == 0) continue;
    if (auto unit = find_unit(key.substr(pos + 1))) return {key.substr(0, pos), unit};
  }
  return {key, std::nullopt};
}

}  // namespace

const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::none: return "dimensionless";
    case Dimension::length: return "length";
    case Dimension::area: return "area";
    case Dimension::time: return "time";
    case Dimension::velocity: return "velocity";
    case Dimension::temperature: return "temperature";
    case Dimension::pressure: return "pressure";
    case Dimension::viscosity: return "viscosity";
    case Dimension::force: return "force";
    case Dimension::density: return "density";
    case Dimension::rate: return "rate";
    case Dimension::conductivity: return "conductivity";
    case Dimension::conductance: return "conductance";
    case Dimension::specific_heat: return "specific heat";
    case Dimension::friction_coefficient: return "friction coefficient";
    case Dimension::angle: return "angle";
  }
  return "?";
}

std::optional<UnitInfo> find_unit(const std::string& suffix) {
  for (const auto& row : kUnits) {
    if (suffix == row.suffix) return UnitInfo{row.factor, row.dim};
  }
  return std::nullopt;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto [base, unit] = split_key(key);
    auto& sec = cfg.sections_[section];
    if (sec.count(base))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key [" + section +
                        "] " + base);
    sec[base] = Entry{key, value, unit, lineno};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::filesystem::path Config::base_dir() const {
  std::filesystem::path p(origin_);
  return p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& base) const {
  return find(section, base) != nullptr;
}

const Config::Entry* Config::find(const std::string& section, const std::string& base) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto e = s->second.find(base);
  return e == s->second.end() ? nullptr : &e->second;
}

void Config::fail(const std::string& section, const std::string& key, const std::string& what) const {
  throw ConfigError(origin_ + ": [" + section + "] " + key + ": " + what);
}

double Config::quantity(const std::string& section, const std::string& base, Dimension dim) const {
  auto values = quantity_list(section, base, dim);
  if (values.size() != 1) fail(section, base, "expected a single value");
  return values.front();
}

double Config::quantity_or(const std::string& section, const std::string& base, Dimension dim,
                           double fallback) const {
  return has(section, base) ? quantity(section, base, dim) : fallback;
}

std::vector<double> Config::quantity_list(const std::string& section, const std::string& base,
                                          Dimension dim) const {
  const Entry* e = find(section, base);
  if (!e) fail(section, base, std::string("missing required key (") + dimension_name(dim) + ")");
  double factor = 1.0;
  if (dim == Dimension::none) {
    if (e->unit) fail(section, e->raw_key, "expected a dimensionless value without unit suffix");
  } else {
    if (!e->unit)
      fail(section, e->raw_key,
           std::string("missing unit suffix, expected a ") + dimension_name(dim) + " unit");
    if (e->unit->dim != dim)
      fail(section, e->raw_key,
           std::string("unit has dimension ") + dimension_name(e->unit->dim) + ", expected " +
               dimension_name(dim));
    factor = e->unit->factor;
  }
  std::vector<double> out;
  std::stringstream ss(e->raw_value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_double(item, v)) fail(section, e->raw_key, "not a number: '" + trim(item) + "'");
    out.push_back(v * factor);
  }
  if (out.empty()) fail(section, e->raw_key, "empty value");
  return out;
}

std::string Config::text(const std::string& section, const std::string& base) const {
  const Entry* e = find(section, base);
  if (!e) fail(section, base, "missing required key");
  return e->raw_value;
}

std::string Config::text_or(const std::string& section, const std::string& base,
                            const std::string& fallback) const {
  const Entry* e = find(section, base);
  return e ? e->raw_value : fallback;
}

long Config::integer_or(const std::string& section, const std::string& base, long fallback) const {
  const Entry* e = find(section, base);
  if (!e) return fallback;
  long v = 0;
  const std::string t = trim(e->raw_value);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) fail(section, e->raw_key, "not an integer");
  return v;
}

bool Config::flag_or(const std::string& section, const std::string& base, bool fallback) const {
  const Entry* e = find(section, base);
  if (!e) return fallback;
  std::string v = e->raw_value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(section, e->raw_key, "expected true/false");
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto s = sections_.find(section);
  if (s == sections_.end()) return out;
  for (const auto& [base, e] : s->second) out.push_back(e.raw_key);
  return out;
}

}  // namespace smc
