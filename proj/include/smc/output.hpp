#pragma once

// CSV and SVG emission of run results.

#include "smc/macro1d.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace smc::output {

/// Nine significant digits, shortest "%g"-style form.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const Table& table);
/// Parses a header row and numeric rows. Throws std::runtime_error naming the
/// file and line on malformed input.
Table read_csv(const std::filesystem::path& path);

/// Columns t_s, h_mm, hdot_mm_per_s, F_N.
Table force_table(const macro1d::SimulationOutput& out);
/// Columns t_s and one x<pos>mm_bar column per sensor.
Table sensors_table(const macro1d::SimulationOutput& out);
/// Columns t_s, Axx, Ayy at the charge midpoint.
Table orientation_table(const macro1d::SimulationOutput& out);
/// Sensor column name, e.g. "x32mm_bar".
std::string sensor_column(double x);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

/// Self-contained SVG line plot; identical input gives identical bytes.
std::string render_svg(const Plot& plot);

/// force.csv, sensors.csv and orientation.csv in `dir`. Returns the paths.
std::vector<std::filesystem::path> write_simulation(const macro1d::SimulationOutput& out,
                                                    const std::filesystem::path& dir);

/// force.svg, sensors.svg, orientation.svg. Empty series are skipped with a
/// line in `notices`.
std::vector<std::filesystem::path> emit_plots(const macro1d::SimulationOutput& out,
                                              const std::filesystem::path& dir,
                                              std::vector<std::string>* notices = nullptr);

/// MANIFEST: status line followed by one written file name per line.
std::filesystem::path write_manifest(const std::filesystem::path& dir,
                                     const std::vector<std::filesystem::path>& files,
                                     const std::string& status);

}  // namespace smc::output
