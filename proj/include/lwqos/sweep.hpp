#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lwqos/simulator.hpp"

namespace lwqos {

struct SweepOptions {
  int replications = 1;
  std::uint64_t seed = 1;
  /// When > 0, each run's duration is chosen so the devices generate about
  /// this many packets (and at least `min_relaxations` queue relaxation
  /// times). Otherwise the base config's duration is used as is.
  double target_packets = 0.0;
  double min_relaxations = 200.0;
  double warmup_fraction = 0.1;
  double max_duration = 5.0e9;
};

struct SweepPoint {
  double lambda = 0.0;
  std::vector<SimReport> replications;
  std::vector<std::uint64_t> seeds;
  double mean_latency = 0.0;
  double latency_ci95 = 0.0;  // across replications, Student t
  std::vector<double> service_ratios;
  std::vector<double> collision_rate;
  bool audits_passed = true;
};

/// Config for one grid point: lambda applied, duration sized per options.
SimConfig sweep_config(const SimConfig& base, double lambda, const SweepOptions& options);

/// Runs replications x |lambdas| simulations, in parallel with OpenMP. Run k
/// (k = lambda_index * replications + replication) uses
/// derive_seed(options.seed, k).
std::vector<SweepPoint> sweep(const SimConfig& base, std::span<const double> lambdas,
                              const SweepOptions& options);

/// Same contract, single thread. Reference for the parallel version.
std::vector<SweepPoint> sweep_serial(const SimConfig& base, std::span<const double> lambdas,
                                     const SweepOptions& options);

/// Mean and 95% half-width (Student t) of a sample. Half-width is NaN for n < 2.
std::pair<double, double> mean_ci95(std::span<const double> values);

}  // namespace lwqos
