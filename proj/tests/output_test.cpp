#include "smc/output.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace smc::output;
namespace fs = std::filesystem;

namespace {

smc::macro1d::SimulationOutput fake_run(int n, int sensors) {
  smc::macro1d::SimulationOutput out;
  for (int k = 0; k < sensors; ++k) out.sensor_x.push_back(0.032 + 0.1 * k);
  for (int i = 0; i < n; ++i) {
    smc::macro1d::OutputSample s;
    s.t = 0.05 * i;
    s.h = 0.018 - 1e-3 * s.t;
    s.hdot = -1e-3;
    s.F = 1e3 * i * i;
    s.Axx_mid = 0.5 + 0.01 * i;
    s.Ayy_mid = 0.5 - 0.01 * i;
    for (int k = 0; k < sensors; ++k) s.sensors.push_back(1e5 * (i + k));
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace

TEST_SUITE("output") {

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1234567891234.0) == "1.23456789e+12");
  CHECK(format_number(-2.5e-7) == "-2.5e-07");
  CHECK(sensor_column(0.032) == "x32mm_bar");
  CHECK(sensor_column(0.0325) == "x32.5mm_bar");
}

TEST_CASE("CSV round trip keeps nine significant digits") {
  const auto dir = testing::scratch_dir("csv");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Table t{{"a", "b", "c"}, {}};
  for (int i = 0; i < 200; ++i) t.rows.push_back({u(rng), u(rng) * 1e9, u(rng) * 1e-12});
  write_csv(dir / "t.csv", t);
  const auto back = read_csv(dir / "t.csv");
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::stod(format_number(t.rows[i][j])) == back.rows[i][j]);
      CHECK(std::abs(back.rows[i][j] - t.rows[i][j]) <= 5e-9 * std::abs(t.rows[i][j]));
    }
  write_csv(dir / "u.csv", back);
  CHECK(testing::read_file(dir / "t.csv") == testing::read_file(dir / "u.csv"));
}

TEST_CASE("CSV errors name file and line") {
  const auto dir = testing::scratch_dir("csv_err");
  testing::write_file(dir / "a.csv", "x,y\n1,2\n\n3\n");
  CHECK_THROWS_WITH(read_csv(dir / "a.csv"), doctest::Contains("a.csv:4"));
  testing::write_file(dir / "b.csv", "x,y\n1,2\n1,abc\n");
  CHECK_THROWS_WITH(read_csv(dir / "b.csv"), doctest::Contains("b.csv:3: not a number: 'abc'"));
  testing::write_file(dir / "c.csv", "x\n1.5x\n");
  CHECK_THROWS_WITH(read_csv(dir / "c.csv"), doctest::Contains("c.csv:2"));
  testing::write_file(dir / "d.csv", "");
  CHECK_THROWS_WITH(read_csv(dir / "d.csv"), doctest::Contains("empty"));
  CHECK_THROWS(read_csv(dir / "missing.csv"));
}

TEST_CASE("simulation tables") {
  const auto run = fake_run(5, 3);
  const auto f = force_table(run);
  CHECK(f.header == std::vector<std::string>{"t_s", "h_mm", "hdot_mm_per_s", "F_N"});
  CHECK(f.rows[2][1] == doctest::Approx(17.9));
  CHECK(f.rows[2][2] == doctest::Approx(-1.0));
  const auto s = sensors_table(run);
  CHECK(s.header == std::vector<std::string>{"t_s", "x32mm_bar", "x132mm_bar", "x232mm_bar"});
  CHECK(s.rows[4][3] == doctest::Approx(6.0));
  const auto dir = testing::scratch_dir("sim");
  const auto files = write_simulation(run, dir);
  CHECK(files.size() == 3);
  const auto back = read_csv(dir / "sensors.csv");
  CHECK(back.rows.size() == 5);
}

TEST_CASE("SVG output is deterministic") {
  const auto run = fake_run(40, 2);
  const auto a = testing::scratch_dir("svg_a");
  const auto b = testing::scratch_dir("svg_b");
  const auto fa = emit_plots(run, a);
  const auto fb = emit_plots(run, b);
  REQUIRE(fa.size() == 3);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const auto text = testing::read_file(fa[i]);
    CHECK(text == testing::read_file(fb[i]));
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("nan") == std::string::npos);
  }
  Plot p{"a < b & c", "x", "y", {{"s", {0, 1, 2}, {1, NAN, 3}}}};
  const auto svg = render_svg(p);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg == render_svg(p));
  CHECK(render_svg(Plot{"flat", "x", "y", {{"c", {0, 1}, {2, 2}}}}).find("nan") == std::string::npos);
}

TEST_CASE("empty series are skipped with a notice") {
  const auto dir = testing::scratch_dir("svg_empty");
  std::vector<std::string> notices;
  const auto files = emit_plots(fake_run(10, 0), dir, &notices);
  CHECK(files.size() == 2);
  REQUIRE(notices.size() == 1);
  CHECK(notices[0].find("sensors.svg") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "sensors.svg"));
  notices.clear();
  CHECK(emit_plots(smc::macro1d::SimulationOutput{}, dir, &notices).empty());
  CHECK(notices.size() == 1);
}

TEST_CASE("manifest lists the status and files") {
  const auto dir = testing::scratch_dir("manifest");
  const auto p = write_manifest(dir, {dir / "force.csv", dir / "x.svg"}, "ok");
  CHECK(testing::read_file(p) == "status: ok\nforce.csv\nx.svg\n");
}

}
