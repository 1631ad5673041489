#include "lwqos/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lwqos/airtime.hpp"

namespace lwqos {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double erlang_c(int servers, double arrival, double per_server_rate) {
  if (servers < 1) throw ValidationError("erlang_c: servers >= 1 violated");
  if (!(per_server_rate > 0.0)) throw ValidationError("erlang_c: mu > 0 violated");
  if (!(arrival >= 0.0)) throw ValidationError("erlang_c: lambda >= 0 violated");
  if (arrival >= servers * per_server_rate) {
    throw ValidationError("erlang_c: unstable queue (lambda >= c * mu)");
  }
  const double a = arrival / per_server_rate;
  // Erlang-B recursion, then the B -> C conversion.
  double b = 1.0;
  for (int k = 1; k <= servers; ++k) b = a * b / (k + a * b);
  return servers * b / (servers - a * (1.0 - b));
}

double waiting_time(double p_busy_all, double total_rate, double arrival,
                    WaitingFormula formula) {
  if (!(p_busy_all >= 0.0) || !(arrival >= 0.0)) {
    throw ValidationError("waiting_time: inputs must be nonnegative");
  }
  if (!(total_rate > 0.0)) throw ValidationError("waiting_time: total_rate > 0 violated");
  if (formula == WaitingFormula::Paper) {
    return p_busy_all / ((total_rate + arrival) * 2.0);
  }
  if (arrival >= total_rate) return kInf;
  return p_busy_all / ((total_rate - arrival) * 2.0);
}

ClampedValue service_ratio(double mu_i, double arrival, double p_idle_i) {
  if (!(arrival > 0.0)) {
    throw ValidationError("service_ratio: lambda > 0 required (use service_ratio_limits)");
  }
  const double raw = mu_i * (1.0 - p_idle_i) / arrival;
  const double value = std::clamp(raw, 0.0, 1.0);
  // Roundoff around the bounds is not worth a warning.
  constexpr double kSlack = 1e-9;
  return {value, raw < -kSlack || raw > 1.0 + kSlack};
}

ServiceRatioLimits service_ratio_limits(const BandPlan& plan) {
  plan.validate();
  const std::vector<double> n = plan.channel_counts();
  const std::vector<double> delta = plan.duty_cycles();
  const double n_sum = std::accumulate(n.begin(), n.end(), 0.0);
  const double delta_sum = std::accumulate(delta.begin(), delta.end(), 0.0);
  ServiceRatioLimits out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.low_load.push_back(n[i] / n_sum);
    out.saturation.push_back(delta[i] / delta_sum);
  }
  return out;
}

double mean_latency(std::span<const double> t_tx, std::span<const double> t_w,
                    std::span<const double> weights) {
  if (t_tx.size() != t_w.size() || t_tx.size() != weights.size() || t_tx.empty()) {
    throw ValidationError("mean_latency: lists must be nonempty and of equal length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < t_tx.size(); ++i) {
    if (!(weights[i] > 0.0)) throw ValidationError("mean_latency: weights > 0 violated");
    num += weights[i] * (t_tx[i] + t_w[i]);
    den += weights[i];
  }
  return num / den;
}

double shaper_capacity(double aggregated_duty_cycle, double t_tx, const RxLockout& lockout) {
  if (aggregated_duty_cycle == 0.0) {
    throw ValidationError(
        "shaper_capacity: aggregated duty cycle 0 disables the device, not a queue");
  }
  if (!(aggregated_duty_cycle > 0.0 && aggregated_duty_cycle <= 1.0)) {
    throw ValidationError("shaper_capacity: 0 < a <= 1 violated");
  }
  if (!(t_tx > 0.0)) throw ValidationError("shaper_capacity: t_tx > 0 violated");
  const double duty_rate = aggregated_duty_cycle / t_tx;
  const double lockout_total = lockout.total();
  if (lockout_total <= 0.0) return duty_rate;
  return std::min(duty_rate, 1.0 / lockout_total);
}

double md1_wait(double arrival, double capacity) {
  if (!(arrival >= 0.0) || !(capacity > 0.0)) {
    throw ValidationError("md1_wait: 0 <= lambda and mu > 0 required");
  }
  if (arrival >= capacity) throw ValidationError("md1_wait: unstable (lambda >= mu)");
  const double rho = arrival / capacity;
  return rho / (2.0 * capacity * (1.0 - rho));
}

double shape_arrivals(double arrival, double capacity) {
  if (!(arrival >= 0.0) || !(capacity >= 0.0)) {
    throw ValidationError("shape_arrivals: nonnegative inputs required");
  }
  return std::min(arrival, capacity);
}

PerfReport evaluate(const BandPlan& plan, double t_tx, double arrival,
                    double aggregated_duty_cycle, const AnalyticOptions& options) {
  plan.validate();
  const int c = plan.size();
  const std::vector<double> mu = service_rates(plan, t_tx);
  const double mu_sum = std::accumulate(mu.begin(), mu.end(), 0.0);

  PerfReport rep;
  rep.arrival = arrival;
  rep.t_tx = t_tx;
  rep.shaper_capacity = shaper_capacity(aggregated_duty_cycle, t_tx, options.lockout);
  rep.effective_arrival = shape_arrivals(arrival, rep.shaper_capacity);
  rep.shaper_wait = arrival < rep.shaper_capacity ? md1_wait(arrival, rep.shaper_capacity)
                                                  : kInf;
  const double lam = rep.effective_arrival;
  const bool stable = lam < mu_sum;

  if (lam == 0.0) {
    rep.service_ratios = service_ratio_limits(plan).low_load;
  } else {
    QueueSpec spec{mu, plan.channel_counts(), lam, options.queue_truncation};
    const SteadyState ss = solve_steady_state(build_generator(spec));
    rep.p_busy_all_jockeying = ss.p_busy_all;
    rep.p_busy_all_ordinary = stable ? erlang_c(c, lam, mu_sum / c) : 1.0;
    for (int i = 0; i < c; ++i) {
      const ClampedValue r = service_ratio(mu[i], lam, ss.p_idle[i]);
      if (r.clamped) {
        rep.warnings.push_back("service ratio of " + plan.sub_bands[i].name +
                               " clamped to [0,1]");
      }
      rep.service_ratios.push_back(r.value);
    }
  }

  const double tw_lower = waiting_time(rep.p_busy_all_jockeying, mu_sum, lam, options.waiting);
  const double tw_upper =
      stable ? waiting_time(rep.p_busy_all_ordinary, mu_sum, lam, options.waiting) : kInf;
  rep.t_w_lower.assign(c, tw_lower);
  rep.t_w_upper.assign(c, tw_upper);
  const std::vector<double> t_tx_per_band(c, t_tx);
  rep.latency_lower = mean_latency(t_tx_per_band, rep.t_w_lower, mu) + rep.shaper_wait;
  rep.latency_upper = mean_latency(t_tx_per_band, rep.t_w_upper, mu) + rep.shaper_wait;
  return rep;
}

}  // namespace lwqos
