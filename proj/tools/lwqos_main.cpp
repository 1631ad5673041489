// lwqos: analytic and simulated LoRaWAN uplink QoS under duty cycling.
//
//   lwqos analyze  --scenario s.toml --lambda-min 1e-5 --lambda-max 1e-2 --out out/
//   lwqos simulate --scenario s.toml --replications 8 --seed 7 --out out/
//   lwqos compare  out/analyze.csv out/simulate.csv --out out/
//   lwqos limits   --scenario s.toml
//
// Exit codes: 0 success, 1 tolerance violation (compare), 2 input error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lwqos/bandplan.hpp"
#include "lwqos/experiment.hpp"

namespace fs = std::filesystem;
using namespace lwqos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitInput = 2;

struct CommonArgs {
  std::string scenario_path;
  std::string bands;
  double lambda_min = 1e-5;
  double lambda_max = 1e-2;
  int lambda_steps = 10;
  std::string waiting = "paper";
  std::string collision = "complement";
  double t_tx_override_s = 0.0;
  std::uint64_t seed = 1;
  int replications = 1;
  std::string out_dir = ".";
  double packets = 20000.0;
  double duration_s = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool grid) {
  cmd->add_option("--scenario", args.scenario_path, "Scenario file (TOML)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--bands", args.bands, "Comma-separated subset of sub-bands, e.g. G,G1");
  if (grid) {
    cmd->add_option("--lambda-min", args.lambda_min, "Smallest arrival rate [1/s]");
    cmd->add_option("--lambda-max", args.lambda_max, "Largest arrival rate [1/s]");
    cmd->add_option("--lambda-steps", args.lambda_steps, "Log-spaced grid points");
  }
  cmd->add_option("--waiting-formula", args.waiting, "paper|classical")
      ->check(CLI::IsMember({"paper", "classical"}));
  cmd->add_option("--collision-formula", args.collision, "complement|verbatim")
      ->check(CLI::IsMember({"complement", "verbatim"}));
  cmd->add_option("--t-tx-override-s", args.t_tx_override_s,
                  "Replace the computed time-on-air [s]");
  cmd->add_option("--seed", args.seed, "Master seed");
  cmd->add_option("--replications", args.replications, "Simulation replications per point");
  cmd->add_option("--out", args.out_dir, "Output directory");
}

Scenario load(const CommonArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  if (!args.bands.empty()) {
    std::vector<std::string> names;
    std::stringstream ss(args.bands);
    for (std::string name; std::getline(ss, name, ',');) names.push_back(name);
    sc = sc.subset(names);
  }
  return sc;
}

RunFlags flags_from(const CommonArgs& args) {
  RunFlags f;
  f.waiting = parse_waiting_formula(args.waiting);
  f.collision = parse_collision_formula(args.collision);
  f.t_tx_override_s = args.t_tx_override_s;
  f.seed = args.seed;
  f.replications = args.replications;
  f.target_packets = args.packets;
  f.duration_s = args.duration_s;
  return f;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_manifest(const fs::path& dir, const std::string& command, const CommonArgs& args,
                    const Scenario& sc, const std::vector<double>& grid, const RunFlags& flags) {
  RunManifest m;
  m.scenario_path = args.scenario_path;
  m.scenario_text = write_scenario(sc);
  m.command = command;
  m.grid = grid;
  m.flags = flags;
  m.timestamp = utc_timestamp();
  write_file(dir / (command + "_manifest.json"), m.to_json().dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoRaWAN uplink QoS under duty cycling: analytic models and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LWQOS_VERSION);

  CommonArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Evaluate the analytic models over a grid");
  add_common(analyze_cmd, analyze_args, true);

  CommonArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the discrete-event simulator over a grid");
  add_common(sim_cmd, sim_args, true);
  sim_cmd->add_option("--packets", sim_args.packets, "Target generated packets per run");
  sim_cmd->add_option("--duration-s", sim_args.duration_s, "Fixed run duration [s]");

  std::string cmp_a;
  std::string cmp_b;
  std::string cmp_scenario;
  std::string cmp_out = ".";
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two result CSVs and plot them");
  cmp_cmd->add_option("reference", cmp_a, "Analytic (or reference) CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmp_cmd->add_option("candidate", cmp_b, "Simulated (or candidate) CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmp_cmd->add_option("--scenario", cmp_scenario, "Scenario, for SF weights");
  cmp_cmd->add_option("--out", cmp_out, "Output directory");

  CommonArgs limits_args;
  auto* limits_cmd = app.add_subcommand("limits", "Print low-load and saturation service ratios");
  limits_cmd->add_option("--scenario", limits_args.scenario_path, "Scenario file (TOML)")
      ->required()
      ->check(CLI::ExistingFile);
  limits_cmd->add_option("--bands", limits_args.bands, "Comma-separated subset of sub-bands");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*analyze_cmd) {
      const Scenario sc = load(analyze_args);
      const RunFlags flags = flags_from(analyze_args);
      const auto grid = log_grid(analyze_args.lambda_min, analyze_args.lambda_max,
                                 analyze_args.lambda_steps);
      const auto rows = analyze(sc, grid, flags);
      const fs::path dir(analyze_args.out_dir);
      fs::create_directories(dir);
      write_file(dir / "analyze.csv", analyze_csv(sc, rows));
      write_file(dir / "analyze_latency.svg", latency_svg(sc, rows));
      write_file(dir / "analyze_service_ratios.svg", service_ratio_svg(sc, rows));
      write_file(dir / "analyze_collisions.svg", collision_svg(sc, rows));
      write_manifest(dir, "analyze", analyze_args, sc, grid, flags);
      for (const auto& row : rows) {
        for (const auto& w : row.perf.warnings) std::cerr << "warning: " << w << '\n';
      }
      std::cout << "wrote " << (dir / "analyze.csv").string() << '\n';
      return kExitOk;
    }
    if (*sim_cmd) {
      const Scenario sc = load(sim_args);
      const RunFlags flags = flags_from(sim_args);
      const auto grid = log_grid(sim_args.lambda_min, sim_args.lambda_max, sim_args.lambda_steps);
      const auto points = simulate(sc, grid, flags);
      const fs::path dir(sim_args.out_dir);
      fs::create_directories(dir);
      write_file(dir / "simulate.csv", simulate_csv(sc, points));
      write_manifest(dir, "simulate", sim_args, sc, grid, flags);
      for (const auto& pt : points) {
        if (!pt.audits_passed) {
          std::cerr << "warning: duty-cycle audit failed at lambda " << pt.lambda << '\n';
        }
      }
      std::cout << "wrote " << (dir / "simulate.csv").string() << '\n';
      return kExitOk;
    }
    if (*cmp_cmd) {
      auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
      };
      std::optional<Scenario> sc;
      if (!cmp_scenario.empty()) sc = load_scenario(cmp_scenario);
      const CompareReport rep =
          compare(slurp(cmp_a), slurp(cmp_b), {}, sc ? &*sc : nullptr);
      const fs::path dir(cmp_out);
      fs::create_directories(dir);
      write_file(dir / "compare.csv", rep.text());
      write_file(dir / "compare.svg", rep.svg);
      std::cout << rep.text();
      return rep.passed ? kExitOk : kExitTolerance;
    }
    if (*limits_cmd) {
      std::cout << limits_table(load(limits_args).plan);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}
