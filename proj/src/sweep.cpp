#include "lwqos/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "lwqos/airtime.hpp"
#include "lwqos/rng.hpp"

namespace lwqos {

namespace {

SweepPoint aggregate(double lambda, std::vector<SimReport> reps,
                     std::vector<std::uint64_t> seeds) {
  SweepPoint pt;
  pt.lambda = lambda;
  const std::size_t c = reps.front().service_ratios.size();
  std::vector<double> latencies;
  pt.service_ratios.assign(c, 0.0);
  pt.collision_rate.assign(c, 0.0);
  for (const SimReport& r : reps) {
    latencies.push_back(r.mean_latency);
    for (std::size_t i = 0; i < c; ++i) {
      pt.service_ratios[i] += r.service_ratios[i] / static_cast<double>(reps.size());
      pt.collision_rate[i] += r.collision_rate[i] / static_cast<double>(reps.size());
    }
    pt.audits_passed = pt.audits_passed && r.audit.passed;
  }
  std::tie(pt.mean_latency, pt.latency_ci95) = mean_ci95(latencies);
  pt.replications = std::move(reps);
  pt.seeds = std::move(seeds);
  return pt;
}

template <typename RunAll>
std::vector<SweepPoint> sweep_impl(const SimConfig& base, std::span<const double> lambdas,
                                   const SweepOptions& options, RunAll run_all) {
  if (options.replications < 1) throw ValidationError("sweep: replications >= 1 violated");
  const int reps = options.replications;
  const int total = static_cast<int>(lambdas.size()) * reps;

  std::vector<SimConfig> configs(total);
  for (int k = 0; k < total; ++k) {
    configs[k] = sweep_config(base, lambdas[k / reps], options);
    configs[k].seed = derive_seed(options.seed, static_cast<std::uint64_t>(k));
  }
  std::vector<SimReport> reports(total);
  run_all(configs, reports);

  std::vector<SweepPoint> out;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    std::vector<SimReport> group;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < reps; ++r) {
      const std::size_t k = li * reps + r;
      group.push_back(std::move(reports[k]));
      seeds.push_back(configs[k].seed);
    }
    out.push_back(aggregate(lambdas[li], std::move(group), std::move(seeds)));
  }
  return out;
}

}  // namespace

std::pair<double, double> mean_ci95(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.empty()) return {std::nan(""), std::nan("")};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, std::nan("")};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const boost::math::students_t dist(n - 1.0);
  return {mean, boost::math::quantile(dist, 0.975) * std::sqrt(ss / (n - 1.0) / n)};
}

SimConfig sweep_config(const SimConfig& base, double lambda, const SweepOptions& options) {
  SimConfig cfg = base;
  cfg.scenario.traffic.lambda = lambda;
  if (options.target_packets > 0.0 && lambda > 0.0) {
    const Scenario& sc = cfg.scenario;
    const double t_tx = simulator_airtime(cfg, sc.radio.spreading_factor);
    double mu_sum = 0.0;
    double longest_hold = 0.0;
    for (const auto& b : sc.plan.sub_bands) {
      mu_sum += service_rate(t_tx, b.duty_cycle);
      longest_hold = std::max(longest_hold, holding_time(t_tx, b.duty_cycle));
    }
    const double a = sc.traffic.aggregated_duty_cycle;
    if (a > 0.0) mu_sum = std::min(mu_sum, a / t_tx);
    const double rho = std::min(lambda / mu_sum, 0.95);
    const double relax = longest_hold / ((1.0 - std::sqrt(rho)) * (1.0 - std::sqrt(rho)));
    const double by_packets = options.target_packets / (lambda * sc.traffic.devices);
    cfg.duration = std::min(options.max_duration,
                            std::max(by_packets, options.min_relaxations * relax));
    cfg.warmup = options.warmup_fraction * cfg.duration;
  }
  return cfg;
}

std::vector<SweepPoint> sweep(const SimConfig& base, std::span<const double> lambdas,
                              const SweepOptions& options) {
  return sweep_impl(base, lambdas, options,
                    [](const std::vector<SimConfig>& configs, std::vector<SimReport>& reports) {
                      const int n = static_cast<int>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
                      for (int k = 0; k < n; ++k) reports[k] = run(configs[k]);
                    });
}

std::vector<SweepPoint> sweep_serial(const SimConfig& base, std::span<const double> lambdas,
                                     const SweepOptions& options) {
  return sweep_impl(base, lambdas, options,
                    [](const std::vector<SimConfig>& configs, std::vector<SimReport>& reports) {
                      for (std::size_t k = 0; k < configs.size(); ++k) {
                        reports[k] = run(configs[k]);
                      }
                    });
}

}  // namespace lwqos
