#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "lwqos/bandplan.hpp"

namespace lwqos {

/// Raised when the steady-state solve cannot meet its residual tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline constexpr int kMaxServers = 16;

/// Heterogeneous multi-server queue: one server per sub-band.
struct QueueSpec {
  std::vector<double> service_rates;      // mu_i, 1/s
  std::vector<double> selection_weights;  // n_i
  double arrival_rate = 0.0;              // lambda, 1/s
  int queue_truncation = 1000;            // Q_max

  int servers() const { return static_cast<int>(service_rates.size()); }
  double total_rate() const;
  void validate() const;
};

/// CTMC generator over the jockeying-queue state space.
///
/// States 0 .. 2^c - 2 are the partially busy configurations, indexed by the
/// bitmask B of busy servers (B != all). States 2^c - 1 + q, q = 0..Q_max, have
/// every server busy and q packets waiting. Per-server queues that differ by at
/// most one collapse into a single central queue, so only the count is kept.
struct Generator {
  int servers = 0;
  int queue_truncation = 0;
  double arrival_rate = 0.0;
  double total_rate = 0.0;
  /// Row = source state; off-diagonal entries are rates, diagonal makes rows sum
  /// to zero.
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  std::uint32_t all_busy_mask() const { return (1u << servers) - 1u; }
  int partial_count() const { return static_cast<int>(all_busy_mask()); }
  int full_index(int queued) const { return partial_count() + queued; }
  int size() const { return partial_count() + queue_truncation + 1; }
};

struct SteadyState {
  std::vector<double> partial_states;  // indexed by busy mask
  std::vector<double> full_states;     // indexed by queue length 0..Q_max
  double p_busy_all = 0.0;
  std::vector<double> p_idle;          // per server
  double residual = 0.0;               // max-norm of pi * Q

  /// Flattened distribution in generator state order.
  std::vector<double> distribution() const;
};

Generator build_generator(const QueueSpec& spec);

/// Solves pi * Q = 0 using the block structure: the all-busy tail is a
/// birth-death chain with ratio lambda / sum(mu), so censoring on the
/// 2^c states with an empty queue is exact. The small block is solved with
/// the GTH elimination (subtraction free) or a sparse LU for large c.
SteadyState solve_steady_state(const Generator& gen);

/// Dense LU solve of the full generator. Kept as an independent reference for
/// small chains (c <= 3, Q_max <= 1000).
SteadyState solve_steady_state_dense(const Generator& gen);

/// max_j |sum_i pi_i Q_ij|
double generator_residual(const Generator& gen, std::span<const double> pi);

/// Probability an arrival to a symmetric M/M/c queue waits.
double erlang_c(int servers, double arrival, double per_server_rate);

enum class WaitingFormula { Paper, Classical };

/// Mean wait behind regulatory duty cycling, including the 1/2 factor that
/// maps an M/M/c wait onto an M/D/c wait.
///   Paper:     p_busy_all / ((sum_mu + lambda) * 2)
///   Classical: p_busy_all / ((sum_mu - lambda) * 2), +inf when unstable
double waiting_time(double p_busy_all, double total_rate, double arrival,
                    WaitingFormula formula = WaitingFormula::Paper);

struct ClampedValue {
  double value = 0.0;
  bool clamped = false;
};

/// mu_i * (1 - p_idle_i) / lambda, clamped to [0,1]. `clamped` flags a clamp.
ClampedValue service_ratio(double mu_i, double arrival, double p_idle_i);

struct ServiceRatioLimits {
  std::vector<double> low_load;    // n_i / sum n
  std::vector<double> saturation;  // delta_i / sum delta
};

ServiceRatioLimits service_ratio_limits(const BandPlan& plan);

/// Service-rate weighted mean of t_tx_i + t_w_i.
double mean_latency(std::span<const double> t_tx, std::span<const double> t_w,
                    std::span<const double> weights);

/// Receive-window lockout after each uplink (class A).
struct RxLockout {
  double receive_delay1 = 1.0;
  double rx2_offset = 1.0;
  double rx_window_duration = 0.0;

  /// Time from end of uplink until the second window has closed.
  double total() const { return receive_delay1 + 2.0 * rx_window_duration + rx2_offset; }
};

/// Service rate of the M/D/1 shaper modelling receive windows and aggregated
/// duty cycling: the slower of the two mechanisms.
double shaper_capacity(double aggregated_duty_cycle, double t_tx,
                       const RxLockout& lockout = {});

/// Mean M/D/1 wait rho / (2 mu (1 - rho)).
double md1_wait(double arrival, double capacity);

double shape_arrivals(double arrival, double capacity);

struct AnalyticOptions {
  WaitingFormula waiting = WaitingFormula::Paper;
  int queue_truncation = 1000;
  RxLockout lockout{};
};

struct PerfReport {
  double arrival = 0.0;            // offered lambda
  double effective_arrival = 0.0;  // after the shaper
  double shaper_capacity = 0.0;
  double shaper_wait = 0.0;
  double t_tx = 0.0;
  double p_busy_all_jockeying = 0.0;
  double p_busy_all_ordinary = 0.0;  // +inf-safe: 1 when unstable
  std::vector<double> t_w_lower;     // jockeying chain
  std::vector<double> t_w_upper;     // symmetric Erlang-C
  std::vector<double> service_ratios;
  double latency_lower = 0.0;
  double latency_upper = 0.0;
  std::vector<std::string> warnings;
};

/// Full analytic evaluation of one (plan, t_tx, lambda) point.
PerfReport evaluate(const BandPlan& plan, double t_tx, double arrival,
                    double aggregated_duty_cycle, const AnalyticOptions& options = {});

}  // namespace lwqos
