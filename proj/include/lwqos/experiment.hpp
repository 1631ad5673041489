#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lwqos/bandplan.hpp"
#include "lwqos/collision.hpp"
#include "lwqos/queueing.hpp"
#include "lwqos/sweep.hpp"

namespace lwqos {

/// Options shared by the batch commands.
struct RunFlags {
  WaitingFormula waiting = WaitingFormula::Paper;
  CollisionFormula collision = CollisionFormula::Complement;
  double t_tx_override_s = 0.0;
  std::uint64_t seed = 1;
  int replications = 1;
  int queue_truncation = 1000;
  double target_packets = 20000.0;  // per simulation run
  double duration_s = 0.0;          // > 0 pins every run to this duration
  RxLockout lockout{};
};

/// `steps` log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int steps);

double scenario_airtime(const Scenario& scenario, const RunFlags& flags);

struct AnalyzeRow {
  double lambda = 0.0;
  PerfReport perf;
  LoadMatrix loads;
  std::vector<std::array<double, kNumSf>> pcol;
};

/// Analytic model over a lambda grid, grid points evaluated with OpenMP.
std::vector<AnalyzeRow> analyze(const Scenario& scenario, std::span<const double> grid,
                                const RunFlags& flags);
std::vector<AnalyzeRow> analyze_serial(const Scenario& scenario, std::span<const double> grid,
                                       const RunFlags& flags);

std::string analyze_header(const Scenario& scenario);
std::string analyze_csv(const Scenario& scenario, std::span<const AnalyzeRow> rows);

/// Simulator sweep over the grid with scenario.traffic.devices devices.
std::vector<SweepPoint> simulate(const Scenario& scenario, std::span<const double> grid,
                                 const RunFlags& flags);

std::string simulate_header(const Scenario& scenario);
std::string simulate_csv(const Scenario& scenario, std::span<const SweepPoint> points);

/// Low-load and saturation service-ratio limits, one line per band.
std::string limits_table(const BandPlan& plan);

struct CompareTolerances {
  double latency_band = 0.10;  // envelope expansion [(1-x) lower, (1+x) upper]
  double service_ratio = 0.03;
  double collision = 0.02;
  double collision_max_load = 0.5;
};

struct CompareRow {
  double lambda = 0.0;
  double latency_error = 0.0;  // relative distance outside the reference envelope
  std::vector<double> ratio_error;
  std::vector<double> collision_error;  // NaN where not compared
  bool ok = true;
};

struct CompareReport {
  std::vector<std::string> bands;
  std::vector<CompareRow> rows;
  std::vector<std::string> notes;
  bool passed = true;
  std::string svg;

  std::string text() const;
};

/// Compares two result files (analytic or simulated, in either order).
/// `scenario` supplies SF weights when a band mixes several SFs.
CompareReport compare(std::string_view csv_a, std::string_view csv_b,
                      const CompareTolerances& tolerances = {},
                      const Scenario* scenario = nullptr);

/// SVG figures for an analytic run: latency, service ratios, collisions.
std::string latency_svg(const Scenario& scenario, std::span<const AnalyzeRow> rows);
std::string service_ratio_svg(const Scenario& scenario, std::span<const AnalyzeRow> rows);
std::string collision_svg(const Scenario& scenario, std::span<const AnalyzeRow> rows);

/// Everything needed to reproduce a run's outputs.
struct RunManifest {
  std::string scenario_path;
  std::string scenario_text;  // normalized scenario as loaded
  std::string command;
  std::vector<double> grid;
  RunFlags flags;
  std::string version = LWQOS_VERSION;
  std::string timestamp;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string_view to_string(WaitingFormula formula);
std::string_view to_string(CollisionFormula formula);
WaitingFormula parse_waiting_formula(std::string_view text);
CollisionFormula parse_collision_formula(std::string_view text);

}  // namespace lwqos
