#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lwqos/bandplan.hpp"
#include "lwqos/queueing.hpp"

namespace lwqos {

/// Distribution of the sub-band holding period after a transmission.
/// Deterministic is the regulatory behaviour; Exponential is a test hook that
/// turns the M/D/c queue into an M/M/c one.
enum class HoldDistribution { Deterministic, Exponential };

struct SimConfig {
  Scenario scenario;
  double duration = 1.0e6;  // s
  double warmup = 0.0;      // s, excluded from statistics
  std::uint64_t seed = 1;
  RxLockout lockout{};
  double t_tx_override_s = 0.0;  // > 0 replaces the airtime of the radio SF
  HoldDistribution hold = HoldDistribution::Deterministic;
  /// Per-device arrival times that replace the Poisson source when nonempty.
  std::vector<std::vector<double>> scripted_arrivals;
  bool keep_transmissions = false;

  void validate() const;
};

struct Transmission {
  int device = 0;
  int band = 0;  // 0-based index into the band plan
  int channel = 0;
  int sf = 12;
  double start = 0.0;
  double end = 0.0;
  double generated = 0.0;
  bool collided = false;
};

/// Sliding-window airtime audit results. Excess values are the worst observed
/// airtime fraction minus the allowed fraction (negative means headroom).
struct DutyCycleAudit {
  bool performed = false;
  bool passed = true;
  double worst_regulatory_excess = -1.0;
  double worst_aggregated_excess = -1.0;
};

struct SimReport {
  double mean_latency = 0.0;  // s, transmission end minus generation
  double latency_ci95 = 0.0;  // half width, batch means
  double mean_wait = 0.0;     // latency minus own airtime
  std::vector<double> service_ratios;
  std::vector<double> collision_rate;  // per band
  std::vector<std::array<double, kNumSf>> collision_rate_sf;  // NaN where unused
  std::vector<std::array<std::uint64_t, kNumSf>> transmissions_sf;
  double overall_collision_rate = 0.0;
  double offered = 0.0;  // packets/s per device in the measurement window
  double carried = 0.0;
  std::uint64_t packets_generated = 0;
  std::uint64_t packets_transmitted = 0;
  std::uint64_t backlog_remaining = 0;
  std::uint64_t measured_packets = 0;
  std::uint64_t shaper_queued = 0;
  std::uint64_t duty_cycle_queued = 0;
  std::uint64_t dropped = 0;
  std::uint64_t max_backlog = 0;
  DutyCycleAudit audit;
  std::vector<Transmission> transmissions;  // only with keep_transmissions
};

/// Runs one deterministic simulation. Identical configs give identical reports.
SimReport run(const SimConfig& config);

/// Airtime used by the simulator for the given SF.
double simulator_airtime(const SimConfig& config, int sf);

/// SF assigned to each device: the band-averaged sf_mix split into exact
/// device quotas (largest remainder), lowest SF first.
std::vector<int> assign_spreading_factors(const Scenario& scenario);

}  // namespace lwqos
