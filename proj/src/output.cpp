#include "smc/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smc::output {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_csv(const fs::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  Table t;
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " columns, got " +
                               std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::runtime_error(path.string() + ": empty file");
  return t;
}

std::string sensor_column(double x) { return "x" + format_number(x * 1e3) + "mm_bar"; }

Table force_table(const macro1d::SimulationOutput& out) {
  Table t{{"t_s", "h_mm", "hdot_mm_per_s", "F_N"}, {}};
  for (const auto& s : out.samples) t.rows.push_back({s.t, s.h * 1e3, s.hdot * 1e3, s.F});
  return t;
}

Table sensors_table(const macro1d::SimulationOutput& out) {
  Table t{{"t_s"}, {}};
  for (double x : out.sensor_x) t.header.push_back(sensor_column(x));
  for (const auto& s : out.samples) {
    std::vector<double> row{s.t};
    for (double p : s.sensors) row.push_back(p * 1e-5);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table orientation_table(const macro1d::SimulationOutput& out) {
  Table t{{"t_s", "Axx", "Ayy"}, {}};
  for (const auto& s : out.samples) t.rows.push_back({s.t, s.Axx_mid, s.Ayy_mid});
  return t;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Tick positions at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
    out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return out;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  const double W = 720, H = 440, left = 80, right = 170, top = 40, bottom = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(plot.title) << "</text>\n";
  o << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw)
    << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(xmin, xmax)) {
    o << "<line x1=\"" << fixed(X(t)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\"" << fixed(X(t))
      << "\" y2=\"" << fixed(top + ph + 5) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fixed(X(t)) << "\" y=\"" << fixed(top + ph + 19) << "\" text-anchor=\"middle\">"
      << format_number(t) << "</text>\n";
  }
  for (double t : ticks(ymin, ymax)) {
    o << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(Y(t)) << "\" x2=\"" << fixed(left)
      << "\" y2=\"" << fixed(Y(t)) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(Y(t) + 4) << "\" text-anchor=\"end\">"
      << format_number(t) << "</text>\n";
  }
  o << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(H - 14) << "\" text-anchor=\"middle\">"
    << escape(plot.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << fixed(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fixed(top + ph / 2) << ")\">" << escape(plot.ylabel) << "</text>\n";
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      o << (first ? "" : " ") << fixed(X(s.x[i])) << ',' << fixed(Y(s.y[i]));
      first = false;
    }
    o << "\"/>\n";
    const double ly = top + 10 + 18 * double(k);
    o << "<line x1=\"" << fixed(W - right + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\""
      << fixed(W - right + 36) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << fixed(W - right + 42) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<fs::path> write_simulation(const macro1d::SimulationOutput& out, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> files{dir / "force.csv", dir / "sensors.csv", dir / "orientation.csv"};
  write_csv(files[0], force_table(out));
  write_csv(files[1], sensors_table(out));
  write_csv(files[2], orientation_table(out));
  return files;
}

std::vector<fs::path> emit_plots(const macro1d::SimulationOutput& out, const fs::path& dir,
                                 std::vector<std::string>* notices) {
  std::vector<fs::path> files;
  if (out.samples.empty()) {
    if (notices) notices->push_back("no samples: plots skipped");
    return files;
  }
  fs::create_directories(dir);
  std::vector<double> t, F, Axx, Ayy;
  for (const auto& s : out.samples) {
    t.push_back(s.t);
    F.push_back(s.F * 1e-3);
    Axx.push_back(s.Axx_mid);
    Ayy.push_back(s.Ayy_mid);
  }
  std::vector<Plot> plots;
  plots.push_back({"Compression force", "time (s)", "force (kN)", {{"F", t, F}}});
  Plot sensors{"Sensor pressures", "time (s)", "pressure (bar)", {}};
  for (std::size_t k = 0; k < out.sensor_x.size(); ++k) {
    Series s{format_number(out.sensor_x[k] * 1e3) + " mm", t, {}};
    for (const auto& sample : out.samples) s.y.push_back(sample.sensors[k] * 1e-5);
    sensors.series.push_back(std::move(s));
  }
  plots.push_back(std::move(sensors));
  plots.push_back({"Orientation at charge midpoint", "time (s)", "component (-)",
                   {{"Axx", t, Axx}, {"Ayy", t, Ayy}}});
  const char* names[] = {"force.svg", "sensors.svg", "orientation.svg"};
  for (std::size_t k = 0; k < plots.size(); ++k) {
    if (plots[k].series.empty()) {
      if (notices) notices->push_back(std::string(names[k]) + ": empty series, skipped");
      continue;
    }
    const fs::path p = dir / names[k];
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error(p.string() + ": cannot open for writing");
    f << render_svg(plots[k]);
    files.push_back(p);
  }
  return files;
}

fs::path write_manifest(const fs::path& dir, const std::vector<fs::path>& files, const std::string& status) {
  fs::create_directories(dir);
  const fs::path p = dir / "MANIFEST";
  std::ofstream f(p);
  if (!f) throw std::runtime_error(p.string() + ": cannot open for writing");
  f << "status: " << status << '\n';
  for (const auto& file : files) f << file.filename().string() << '\n';
  return p;
}

}  // namespace smc::output
