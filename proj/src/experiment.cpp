#include "lwqos/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lwqos/airtime.hpp"
#include "lwqos/csv.hpp"
#include "lwqos/svg.hpp"

namespace lwqos {

namespace {

constexpr double kGridRelTol = 1e-9;

std::vector<int> mix_sfs(const SfDistribution& row) {
  std::vector<int> out;
  for (int j = 0; j < kNumSf; ++j) {
    if (row[j] > 0.0) out.push_back(kMinSf + j);
  }
  return out;
}

AnalyzeRow analyze_point(const Scenario& sc, double lambda, const RunFlags& flags) {
  AnalyzeRow row;
  row.lambda = lambda;
  const double t_tx = scenario_airtime(sc, flags);
  AnalyticOptions opts;
  opts.waiting = flags.waiting;
  opts.queue_truncation = flags.queue_truncation;
  opts.lockout = flags.lockout;
  row.perf = evaluate(sc.plan, t_tx, lambda, sc.traffic.aggregated_duty_cycle, opts);

  const auto t_tx_sf = airtime_per_sf(sc.radio, flags.t_tx_override_s);
  const auto mix = sc.resolved_sf_mix();
  const auto channels = sc.plan.channel_counts();
  row.loads = offered_load(row.perf.effective_arrival, row.perf.service_ratios, t_tx_sf,
                           sc.traffic.devices, mix, channels);
  row.pcol.resize(row.loads.load.size());
  for (std::size_t i = 0; i < row.loads.load.size(); ++i) {
    for (int j = 0; j < kNumSf; ++j) {
      row.pcol[i][j] = collision_probability(row.loads.load[i][j], flags.collision);
    }
  }
  return row;
}

// --------------------------------------------------------------- compare

struct Curve {
  bool analytic = false;
  std::vector<double> lambda;
  std::vector<double> lower;
  std::vector<double> upper;
  std::map<std::string, std::vector<double>> ratio;
  std::map<std::string, std::vector<double>> collision;
  std::map<std::string, std::vector<double>> max_load;
  std::vector<std::string> bands;
};

std::vector<std::string> band_names(const CsvTable& t) {
  std::vector<std::string> out;
  for (const auto& h : t.header) {
    if (h.rfind("r_", 0) == 0) out.push_back(h.substr(2));
  }
  return out;
}

Curve read_analytic(const CsvTable& t, const Scenario* sc, std::vector<std::string>& notes) {
  Curve cv;
  cv.analytic = true;
  cv.bands = band_names(t);
  const int c_lambda = t.column("lambda");
  const int c_lo = t.column("latency_lower_s");
  const int c_hi = t.column("latency_upper_s");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    cv.lambda.push_back(t.number(r, c_lambda));
    cv.lower.push_back(t.number(r, c_lo));
    cv.upper.push_back(t.number(r, c_hi));
  }
  for (std::size_t b = 0; b < cv.bands.size(); ++b) {
    const std::string& name = cv.bands[b];
    const int c_r = t.column("r_" + name);
    std::vector<std::pair<int, int>> sf_cols;  // (sf, pcol column)
    std::vector<int> load_cols;
    for (int sf = kMinSf; sf <= kMaxSf; ++sf) {
      const std::string suffix = name + "_sf" + std::to_string(sf);
      const int pc = t.column("pcol_" + suffix);
      if (pc >= 0) {
        sf_cols.emplace_back(sf, pc);
        load_cols.push_back(t.column("load_" + suffix));
      }
    }
    std::vector<double> weights;
    const SubBand* band = nullptr;
    if (sc != nullptr) {
      for (const auto& sb : sc->plan.sub_bands) {
        if (sb.name == name) band = &sb;
      }
    }
    if (band != nullptr) {
      const auto mix = sc->resolved_sf_mix()[band->id - 1];
      double total = 0.0;
      for (auto [sf, col] : sf_cols) total += mix[sf - kMinSf];
      for (auto [sf, col] : sf_cols) weights.push_back(mix[sf - kMinSf] / total);
    } else if (sf_cols.size() == 1) {
      weights.push_back(1.0);
    } else if (!sf_cols.empty()) {
      notes.push_back("band " + name +
                      " mixes several SFs; pass the scenario to compare its collisions");
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      cv.ratio[name].push_back(t.number(r, c_r));
      double col = std::nan("");
      double worst_load = 0.0;
      if (!weights.empty()) {
        col = 0.0;
        for (std::size_t k = 0; k < sf_cols.size(); ++k) {
          col += weights[k] * t.number(r, sf_cols[k].second);
        }
      }
      for (int lc : load_cols) worst_load = std::max(worst_load, t.number(r, lc));
      cv.collision[name].push_back(col);
      cv.max_load[name].push_back(worst_load);
    }
  }
  return cv;
}

Curve read_simulated(const CsvTable& t) {
  Curve cv;
  cv.bands = band_names(t);
  const int c_lambda = t.column("lambda");
  const int c_lat = t.column("mean_latency_s");
  std::vector<int> count;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double lam = t.number(r, c_lambda);
    std::size_t idx = cv.lambda.size();
    for (std::size_t k = 0; k < cv.lambda.size(); ++k) {
      if (cv.lambda[k] == lam) idx = k;
    }
    if (idx == cv.lambda.size()) {
      cv.lambda.push_back(lam);
      cv.lower.push_back(0.0);
      count.push_back(0);
      for (const auto& b : cv.bands) {
        cv.ratio[b].push_back(0.0);
        cv.collision[b].push_back(0.0);
      }
    }
    ++count[idx];
    cv.lower[idx] += t.number(r, c_lat);
    for (const auto& b : cv.bands) {
      cv.ratio[b][idx] += t.number(r, t.column("r_" + b));
      cv.collision[b][idx] += t.number(r, t.column("colrate_" + b));
    }
  }
  for (std::size_t k = 0; k < cv.lambda.size(); ++k) {
    cv.lower[k] /= count[k];
    for (const auto& b : cv.bands) {
      cv.ratio[b][k] /= count[k];
      cv.collision[b][k] /= count[k];
    }
  }
  cv.upper = cv.lower;
  return cv;
}

Curve read_curve(std::string_view text, const Scenario* sc, std::vector<std::string>& notes) {
  const CsvTable t = parse_csv(text);
  if (t.column("lambda") < 0) throw std::invalid_argument("compare: no lambda column");
  if (t.column("latency_lower_s") >= 0 && t.column("latency_upper_s") >= 0) {
    return read_analytic(t, sc, notes);
  }
  if (t.column("mean_latency_s") >= 0) return read_simulated(t);
  throw std::invalid_argument("compare: unrecognized CSV header");
}

double rel(double a, double ref) {
  if (a == ref) return 0.0;  // also inf == inf
  return std::abs(a - ref) / std::abs(ref);
}

}  // namespace

// ------------------------------------------------------------------ public

std::string_view to_string(WaitingFormula formula) {
  return formula == WaitingFormula::Paper ? "paper" : "classical";
}

std::string_view to_string(CollisionFormula formula) {
  return formula == CollisionFormula::Complement ? "complement" : "verbatim";
}

WaitingFormula parse_waiting_formula(std::string_view text) {
  if (text == "paper") return WaitingFormula::Paper;
  if (text == "classical") return WaitingFormula::Classical;
  throw ValidationError("waiting formula must be paper|classical");
}

CollisionFormula parse_collision_formula(std::string_view text) {
  if (text == "complement") return CollisionFormula::Complement;
  if (text == "verbatim") return CollisionFormula::Verbatim;
  throw ValidationError("collision formula must be complement|verbatim");
}

std::vector<double> log_grid(double lo, double hi, int steps) {
  if (!(lo > 0.0) || !(hi >= lo) || steps < 1) {
    throw ValidationError("lambda grid: need 0 < lambda_min <= lambda_max and steps >= 1");
  }
  if (steps == 1) return {lo};
  std::vector<double> out(steps);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < steps; ++k) {
    out[k] = std::exp(a + (b - a) * k / (steps - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

double scenario_airtime(const Scenario& scenario, const RunFlags& flags) {
  if (flags.t_tx_override_s > 0.0) return flags.t_tx_override_s;
  return time_on_air(scenario.radio).time_on_air;
}

std::vector<AnalyzeRow> analyze(const Scenario& scenario, std::span<const double> grid,
                                const RunFlags& flags) {
  scenario.validate();
  const int n = static_cast<int>(grid.size());
  std::vector<AnalyzeRow> rows(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < n; ++k) {
    try {
      rows[k] = analyze_point(scenario, grid[k], flags);
    } catch (...) {
#pragma omp critical(lwqos_analyze_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<AnalyzeRow> analyze_serial(const Scenario& scenario, std::span<const double> grid,
                                       const RunFlags& flags) {
  scenario.validate();
  std::vector<AnalyzeRow> rows;
  rows.reserve(grid.size());
  for (double lambda : grid) rows.push_back(analyze_point(scenario, lambda, flags));
  return rows;
}

std::string analyze_header(const Scenario& sc) {
  std::string h = "lambda,band_set,t_tx_s,latency_upper_s,latency_lower_s";
  for (const auto& b : sc.plan.sub_bands) h += ",r_" + b.name;
  const auto mix = sc.resolved_sf_mix();
  for (const auto& b : sc.plan.sub_bands) {
    for (int sf : mix_sfs(mix[b.id - 1])) {
      const std::string suffix = b.name + "_sf" + std::to_string(sf);
      h += ",load_" + suffix + ",pcol_" + suffix;
    }
  }
  h += ",lambda_eff";
  return h;
}

std::string analyze_csv(const Scenario& sc, std::span<const AnalyzeRow> rows) {
  std::ostringstream out;
  out << analyze_header(sc) << '\n';
  const auto mix = sc.resolved_sf_mix();
  const std::string label = sc.plan.label();
  for (const AnalyzeRow& row : rows) {
    out << format_number(row.lambda) << ',' << label << ',' << format_number(row.perf.t_tx)
        << ',' << format_number(row.perf.latency_upper) << ','
        << format_number(row.perf.latency_lower);
    for (double r : row.perf.service_ratios) out << ',' << format_number(r);
    for (std::size_t i = 0; i < sc.plan.sub_bands.size(); ++i) {
      for (int sf : mix_sfs(mix[i])) {
        const int j = sf - kMinSf;
        out << ',' << format_number(row.loads.load[i][j]) << ','
            << format_number(row.pcol[i][j]);
      }
    }
    out << ',' << format_number(row.perf.effective_arrival) << '\n';
  }
  return out.str();
}

std::vector<SweepPoint> simulate(const Scenario& scenario, std::span<const double> grid,
                                 const RunFlags& flags) {
  SimConfig base;
  base.scenario = scenario;
  base.lockout = flags.lockout;
  base.t_tx_override_s = flags.t_tx_override_s;
  SweepOptions opts;
  opts.replications = flags.replications;
  opts.seed = flags.seed;
  if (flags.duration_s > 0.0) {
    base.duration = flags.duration_s;
    base.warmup = 0.1 * flags.duration_s;
    opts.target_packets = 0.0;
  } else {
    opts.target_packets = flags.target_packets;
  }
  return sweep(base, grid, opts);
}

std::string simulate_header(const Scenario& sc) {
  std::string h = "lambda,seed,replication,mean_latency_s,latency_ci95_s";
  for (const auto& b : sc.plan.sub_bands) h += ",r_" + b.name + ",colrate_" + b.name;
  h += ",max_backlog,offered,carried";
  return h;
}

std::string simulate_csv(const Scenario& sc, std::span<const SweepPoint> points) {
  std::ostringstream out;
  out << simulate_header(sc) << '\n';
  for (const SweepPoint& pt : points) {
    for (std::size_t r = 0; r < pt.replications.size(); ++r) {
      const SimReport& rep = pt.replications[r];
      out << format_number(pt.lambda) << ',' << pt.seeds[r] << ',' << r << ','
          << format_number(rep.mean_latency) << ',' << format_number(rep.latency_ci95);
      for (std::size_t i = 0; i < rep.service_ratios.size(); ++i) {
        out << ',' << format_number(rep.service_ratios[i]) << ','
            << format_number(rep.collision_rate[i]);
      }
      out << ',' << rep.max_backlog << ',' << format_number(rep.offered) << ','
          << format_number(rep.carried) << '\n';
    }
  }
  return out.str();
}

std::string limits_table(const BandPlan& plan) {
  const ServiceRatioLimits lim = service_ratio_limits(plan);
  std::ostringstream out;
  out << "band,channels,duty_cycle,r_low_load,r_saturation\n";
  for (std::size_t i = 0; i < plan.sub_bands.size(); ++i) {
    const SubBand& b = plan.sub_bands[i];
    out << b.name << ',' << b.n_channels << ',' << format_number(b.duty_cycle) << ','
        << format_number(lim.low_load[i]) << ',' << format_number(lim.saturation[i]) << '\n';
  }
  return out.str();
}

CompareReport compare(std::string_view csv_a, std::string_view csv_b,
                      const CompareTolerances& tol, const Scenario* scenario) {
  CompareReport rep;
  Curve a = read_curve(csv_a, scenario, rep.notes);
  Curve b = read_curve(csv_b, scenario, rep.notes);
  if (!a.analytic && b.analytic) std::swap(a, b);

  if (a.lambda.size() != b.lambda.size()) {
    throw std::invalid_argument("compare: lambda grids differ in length");
  }
  for (std::size_t k = 0; k < a.lambda.size(); ++k) {
    if (rel(b.lambda[k], a.lambda[k]) > kGridRelTol) {
      throw std::invalid_argument("compare: lambda grids differ at point " + std::to_string(k));
    }
  }
  for (const auto& name : a.bands) {
    if (b.ratio.count(name) != 0) rep.bands.push_back(name);
  }
  const bool envelope = a.analytic && !b.analytic;

  for (std::size_t k = 0; k < a.lambda.size(); ++k) {
    CompareRow row;
    row.lambda = a.lambda[k];
    if (envelope) {
      const double s = b.lower[k];
      const double lo = a.lower[k];
      const double hi = a.upper[k];
      if (s < lo) row.latency_error = (lo - s) / lo;
      else if (s > hi) row.latency_error = (s - hi) / hi;
      const bool inside = s >= (1.0 - tol.latency_band) * lo &&
                          (!std::isfinite(hi) || s <= (1.0 + tol.latency_band) * hi);
      if (!inside) row.ok = false;
    } else {
      row.latency_error = std::max(rel(b.lower[k], a.lower[k]), rel(b.upper[k], a.upper[k]));
      if (!(row.latency_error <= tol.latency_band)) row.ok = false;
    }
    for (const auto& name : rep.bands) {
      const double err = std::abs(a.ratio[name][k] - b.ratio[name][k]);
      row.ratio_error.push_back(err);
      if (!(err <= tol.service_ratio)) row.ok = false;

      double cerr = std::nan("");
      const double ca = a.collision[name][k];
      const double cb = b.collision[name][k];
      const bool load_ok = !envelope || a.max_load[name][k] <= tol.collision_max_load;
      if (std::isfinite(ca) && std::isfinite(cb) && load_ok) {
        cerr = std::abs(ca - cb);
        if (!(cerr <= tol.collision)) row.ok = false;
      }
      row.collision_error.push_back(cerr);
    }
    rep.passed = rep.passed && row.ok;
    rep.rows.push_back(std::move(row));
  }

  std::vector<Series> series;
  if (a.analytic) {
    series.push_back({"lower", a.lambda, a.lower, true, false});
    series.push_back({"upper", a.lambda, a.upper, true, false});
  } else {
    series.push_back({"reference", a.lambda, a.lower, true, false});
  }
  if (b.analytic) {
    series.push_back({"lower (b)", b.lambda, b.lower, false, true});
    series.push_back({"upper (b)", b.lambda, b.upper, false, true});
  } else {
    series.push_back({"simulated", b.lambda, b.lower, false, true});
  }
  rep.svg = render_line_chart({"Mean latency", "arrival rate per device [1/s]", "latency [s]",
                               true, true},
                              series);
  return rep;
}

std::string CompareReport::text() const {
  std::ostringstream out;
  out << "lambda,latency_error";
  for (const auto& b : bands) out << ",ratio_error_" << b << ",collision_error_" << b;
  out << ",ok\n";
  for (const auto& row : rows) {
    out << format_number(row.lambda) << ',' << format_number(row.latency_error);
    for (std::size_t i = 0; i < bands.size(); ++i) {
      out << ',' << format_number(row.ratio_error[i]) << ','
          << format_number(row.collision_error[i]);
    }
    out << ',' << (row.ok ? "yes" : "no") << '\n';
  }
  for (const auto& note : notes) out << "# " << note << '\n';
  out << "# result: " << (passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

std::string latency_svg(const Scenario& sc, std::span<const AnalyzeRow> rows) {
  Series lo{"lower (jockeying)", {}, {}, false, false};
  Series hi{"upper (M/M/c)", {}, {}, true, false};
  for (const auto& row : rows) {
    lo.x.push_back(row.lambda);
    lo.y.push_back(row.perf.latency_lower);
    hi.x.push_back(row.lambda);
    hi.y.push_back(row.perf.latency_upper);
  }
  return render_line_chart(
      {"Latency, " + sc.plan.label(), "arrival rate per device [1/s]", "latency [s]", true, true},
      {lo, hi});
}

std::string service_ratio_svg(const Scenario& sc, std::span<const AnalyzeRow> rows) {
  std::vector<Series> series;
  for (std::size_t i = 0; i < sc.plan.sub_bands.size(); ++i) {
    Series s{sc.plan.sub_bands[i].name, {}, {}, false, false};
    for (const auto& row : rows) {
      s.x.push_back(row.lambda);
      s.y.push_back(row.perf.service_ratios[i]);
    }
    series.push_back(std::move(s));
  }
  return render_line_chart({"Service ratios, " + sc.plan.label(),
                            "arrival rate per device [1/s]", "service ratio", true, false},
                           series);
}

std::string collision_svg(const Scenario& sc, std::span<const AnalyzeRow> rows) {
  std::vector<Series> series;
  const auto mix = sc.resolved_sf_mix();
  for (std::size_t i = 0; i < sc.plan.sub_bands.size(); ++i) {
    for (int sf : mix_sfs(mix[i])) {
      Series s{sc.plan.sub_bands[i].name + " SF" + std::to_string(sf), {}, {}, false, false};
      for (const auto& row : rows) {
        s.x.push_back(row.lambda);
        s.y.push_back(row.pcol[i][sf - kMinSf]);
      }
      series.push_back(std::move(s));
    }
  }
  return render_line_chart({"Collision probability, " + sc.plan.label() + ", " +
                                std::to_string(sc.traffic.devices) + " devices",
                            "arrival rate per device [1/s]", "collision probability", true,
                            false},
                           series);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["scenario_path"] = scenario_path;
  j["scenario"] = scenario_text;
  j["command"] = command;
  j["lambda_grid"] = grid;
  j["flags"] = {
      {"waiting_formula", std::string(to_string(flags.waiting))},
      {"collision_formula", std::string(to_string(flags.collision))},
      {"t_tx_override_s", flags.t_tx_override_s},
      {"seed", flags.seed},
      {"replications", flags.replications},
      {"queue_truncation", flags.queue_truncation},
      {"target_packets", flags.target_packets},
      {"duration_s", flags.duration_s},
      {"receive_delay1_s", flags.lockout.receive_delay1},
      {"rx2_offset_s", flags.lockout.rx2_offset},
      {"rx_window_duration_s", flags.lockout.rx_window_duration},
  };
  j["version"] = version;
  j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.scenario_path = j.at("scenario_path").get<std::string>();
  m.scenario_text = j.at("scenario").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.grid = j.at("lambda_grid").get<std::vector<double>>();
  const auto& f = j.at("flags");
  m.flags.waiting = parse_waiting_formula(f.at("waiting_formula").get<std::string>());
  m.flags.collision = parse_collision_formula(f.at("collision_formula").get<std::string>());
  m.flags.t_tx_override_s = f.at("t_tx_override_s").get<double>();
  m.flags.seed = f.at("seed").get<std::uint64_t>();
  m.flags.replications = f.at("replications").get<int>();
  m.flags.queue_truncation = f.at("queue_truncation").get<int>();
  m.flags.target_packets = f.at("target_packets").get<double>();
  m.flags.duration_s = f.at("duration_s").get<double>();
  m.flags.lockout.receive_delay1 = f.at("receive_delay1_s").get<double>();
  m.flags.lockout.rx2_offset = f.at("rx2_offset_s").get<double>();
  m.flags.lockout.rx_window_duration = f.at("rx_window_duration_s").get<double>();
  m.version = j.at("version").get<std::string>();
  m.timestamp = j.at("timestamp").get<std::string>();
  return m;
}

}  // namespace lwqos
