#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "lwqos/csv.hpp"
#include "lwqos/experiment.hpp"
#include "lwqos/svg.hpp"

using namespace lwqos;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string golden(const std::string& name) {
  return slurp(std::string(LWQOS_SOURCE_DIR "/tests/golden/") + name);
}

Scenario g_g1() { return load_scenario(LWQOS_SOURCE_DIR "/scenarios/g_g1.toml"); }

}  // namespace

TEST_CASE("CSV headers match the golden files") {
  const Scenario sc = g_g1();
  CHECK(analyze_header(sc) + "\n" == golden("analyze_header_g_g1.txt"));
  CHECK(simulate_header(sc) + "\n" == golden("simulate_header_g_g1.txt"));
  CHECK(limits_table(sc.plan) == golden("limits_g_g1.csv"));
}

TEST_CASE("mixed SFs add one load column per SF in use") {
  Scenario sc = g_g1();
  sc.traffic.sf_mix = {SfDistribution{0.5, 0, 0, 0, 0, 0.5}, SfDistribution{0, 0, 0, 0, 0, 1}};
  const std::string h = analyze_header(sc);
  CHECK(h.find("load_G_sf7,pcol_G_sf7,load_G_sf12,pcol_G_sf12,load_G1_sf12") != std::string::npos);
  CHECK(h.find("G1_sf7") == std::string::npos);
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-5, 1e-2, 4);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == 1e-5);
  CHECK(g[1] == doctest::Approx(1e-4));
  CHECK(g[3] == 1e-2);
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), ValidationError);
}

TEST_CASE("analyze rows are ordered by lambda and bounded") {
  Scenario sc = load_scenario(LWQOS_SOURCE_DIR "/scenarios/g.toml");
  const auto grid = log_grid(1e-5, 2e-3, 10);
  const auto rows = analyze(sc, grid, {});
  REQUIRE(rows.size() == 10);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].lambda == grid[k]);
    // One server: both models are M/M/1 and agree up to roundoff.
    CHECK(rows[k].perf.latency_lower <= rows[k].perf.latency_upper * (1.0 + 1e-12));
    if (k > 0) CHECK(rows[k].perf.latency_lower >= rows[k - 1].perf.latency_lower);
  }
  const CsvTable t = parse_csv(analyze_csv(sc, rows));
  CHECK(t.rows.size() == 10);
  CHECK(t.number(0, t.column("t_tx_s")) == doctest::Approx(4.071424));
}

TEST_CASE("parallel analyze matches the serial reference") {
  const Scenario sc = load_scenario(LWQOS_SOURCE_DIR "/scenarios/eu868.toml");
  const auto grid = log_grid(1e-5, 5e-2, 16);
  RunFlags f;
  f.waiting = WaitingFormula::Classical;
  CHECK(analyze_csv(sc, analyze(sc, grid, f)) == analyze_csv(sc, analyze_serial(sc, grid, f)));
}

TEST_CASE("t_tx override feeds every analytic column") {
  const Scenario sc = load_scenario(LWQOS_SOURCE_DIR "/scenarios/g_g4_adc05.toml");
  RunFlags f;
  f.t_tx_override_s = 3.4247;
  const auto rows = analyze(sc, log_grid(0.02, 0.02, 1), f);
  CHECK(rows[0].perf.t_tx == 3.4247);
  CHECK(rows[0].perf.shaper_capacity == doctest::Approx(0.0146).epsilon(0.01));
  CHECK(rows[0].perf.effective_arrival == rows[0].perf.shaper_capacity);
}

TEST_CASE("comparing a file with itself gives zero error") {
  const Scenario sc = g_g1();
  const auto grid = log_grid(1e-5, 2e-3, 5);
  const std::string csv = analyze_csv(sc, analyze(sc, grid, {}));
  const CompareReport rep = compare(csv, csv);
  CHECK(rep.passed);
  for (const auto& row : rep.rows) {
    CHECK(row.latency_error == 0.0);
    for (double e : row.ratio_error) CHECK(e == 0.0);
  }
  CHECK(rep.text().find("# result: PASS") != std::string::npos);
  CHECK(rep.svg.find("<svg") != std::string::npos);
}

TEST_CASE("compare rejects mismatched grids") {
  const Scenario sc = g_g1();
  const std::string a = analyze_csv(sc, analyze(sc, log_grid(1e-5, 2e-3, 5), {}));
  const std::string b = analyze_csv(sc, analyze(sc, log_grid(1e-5, 3e-3, 5), {}));
  const std::string c = analyze_csv(sc, analyze(sc, log_grid(1e-5, 2e-3, 4), {}));
  CHECK_THROWS(compare(a, b));
  CHECK_THROWS(compare(a, c));
}

TEST_CASE("simulated CSV is byte-identical for the same seed") {
  const Scenario sc = g_g1();
  RunFlags f;
  f.seed = 21;
  f.replications = 2;
  f.target_packets = 500;
  const auto grid = log_grid(1e-4, 1e-3, 2);
  const std::string a = simulate_csv(sc, simulate(sc, grid, f));
  const std::string b = simulate_csv(sc, simulate(sc, grid, f));
  CHECK(a == b);
  f.seed = 22;
  CHECK(simulate_csv(sc, simulate(sc, grid, f)) != a);
}

TEST_CASE("analytic and simulated files compare in either order") {
  const Scenario sc = load_scenario(LWQOS_SOURCE_DIR "/scenarios/g.toml");
  const auto grid = log_grid(1e-4, 5e-4, 2);
  RunFlags f;
  f.waiting = WaitingFormula::Classical;
  f.replications = 2;
  f.target_packets = 2000;
  const std::string an = analyze_csv(sc, analyze(sc, grid, f));
  const std::string si = simulate_csv(sc, simulate(sc, grid, f));
  const CompareReport x = compare(an, si);
  const CompareReport y = compare(si, an);
  REQUIRE(x.rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(x.rows[k].latency_error == y.rows[k].latency_error);
    CHECK(x.rows[k].ratio_error == y.rows[k].ratio_error);
  }
}

TEST_CASE("manifest round-trips through JSON") {
  RunManifest m;
  m.scenario_path = "scenarios/g.toml";
  m.scenario_text = write_scenario(g_g1());
  m.command = "simulate";
  m.grid = {1e-5, 0.1 + 0.2};
  m.flags.waiting = WaitingFormula::Classical;
  m.flags.collision = CollisionFormula::Verbatim;
  m.flags.seed = 0xFFFFFFFFFFFFFFFFull;
  m.flags.replications = 8;
  m.flags.t_tx_override_s = 3.4247;
  m.timestamp = "2026-01-01T00:00:00Z";
  const RunManifest back = RunManifest::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.to_json() == m.to_json());
  CHECK(back.grid == m.grid);
  CHECK(back.flags.seed == m.flags.seed);
  CHECK(back.flags.waiting == WaitingFormula::Classical);
  CHECK(parse_scenario(back.scenario_text) == g_g1());
}

TEST_CASE("formula names") {
  CHECK(parse_waiting_formula(to_string(WaitingFormula::Paper)) == WaitingFormula::Paper);
  CHECK(parse_collision_formula("verbatim") == CollisionFormula::Verbatim);
  CHECK_THROWS_AS(parse_waiting_formula("exact"), ValidationError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1e-300, 4.071424, 123456789.125, -2.5}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  const CsvTable t = parse_csv("a,b\n1,inf\n");
  CHECK(std::isinf(t.number(0, t.column("b"))));
  CHECK(t.column("c") == -1);
}

TEST_CASE("charts skip non-finite points") {
  const std::string svg = render_line_chart(
      {"t", "x", "y", true, false},
      {{"s", {1.0, 10.0, 100.0}, {1.0, std::numeric_limits<double>::infinity(), 3.0}, false, true}});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("inf") == std::string::npos);
}
