#include "lwqos/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "lwqos/collision.hpp"
#include "lwqos/rng.hpp"

namespace lwqos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBatches = 20;
constexpr double kAuditSlack = 0.01;
constexpr double kAuditWindowHolds = 100.0;

enum class EventKind : int { TxEnd = 0, TxStart = 1, Arrival = 2 };

struct Event {
  double time;
  int device;
  EventKind kind;
  std::uint64_t seq;
};

// Min-heap order: (time, device id, event kind, insertion).
struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.device != b.device) return a.device > b.device;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

/// Worst airtime fraction over windows of fixed width ending at each
/// transmission end.
class WindowAudit {
 public:
  WindowAudit() = default;
  WindowAudit(double window, double allowed) : window_(window), allowed_(allowed) {}

  void add(double start, double end) {
    spans_.emplace_back(start, end);
    airtime_ += end - start;
    const double from = end - window_;
    while (!spans_.empty() && spans_.front().second <= from) {
      airtime_ -= spans_.front().second - spans_.front().first;
      spans_.pop_front();
    }
    const double clipped = std::max(0.0, from - spans_.front().first);
    worst_ = std::max(worst_, (airtime_ - clipped) / window_);
  }

  double excess() const { return worst_ - allowed_; }

 private:
  double window_ = 1.0;
  double allowed_ = 1.0;
  std::deque<std::pair<double, double>> spans_;
  double airtime_ = 0.0;
  double worst_ = 0.0;
};

struct Device {
  int sf = 12;
  double t_tx = 0.0;
  std::vector<double> band_next_free;
  double aggregated_next_free = 0.0;
  double rx_lockout_until = 0.0;
  std::deque<double> backlog;
  Rng arrivals{0};
  Rng decisions{0};
  std::size_t script_pos = 0;
  bool busy = false;  // a transmission is scheduled or on air
  int pending_band = 0;
  int pending_channel = 0;
  bool pending_shaped = false;
  bool pending_dc_queued = false;
  std::size_t active_tx = 0;
  std::vector<WindowAudit> band_audit;
  WindowAudit aggregated_audit;
};

std::uint64_t channel_key(int band, int channel, int sf) {
  return (static_cast<std::uint64_t>(band) << 40) |
         (static_cast<std::uint64_t>(channel) << 8) | static_cast<std::uint64_t>(sf);
}

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg), plan_(cfg.scenario.plan) {
    const int c = plan_.size();
    const int m = cfg.scenario.traffic.devices;
    const double a = cfg.scenario.traffic.aggregated_duty_cycle;
    const std::vector<int> sfs = assign_spreading_factors(cfg.scenario);
    audit_ = cfg.hold == HoldDistribution::Deterministic;

    devices_.resize(m);
    for (int d = 0; d < m; ++d) {
      Device& dev = devices_[d];
      dev.sf = sfs[d];
      dev.t_tx = simulator_airtime(cfg, dev.sf);
      dev.band_next_free.assign(c, 0.0);
      if (a == 0.0) dev.aggregated_next_free = kInf;
      dev.arrivals = Rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(d)));
      dev.decisions = Rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(d) + 1));
      if (audit_) {
        for (const auto& b : plan_.sub_bands) {
          dev.band_audit.emplace_back(kAuditWindowHolds * dev.t_tx / b.duty_cycle,
                                      b.duty_cycle + kAuditSlack);
        }
        if (a > 0.0) {
          dev.aggregated_audit = WindowAudit(kAuditWindowHolds * dev.t_tx / a, a + kAuditSlack);
        }
      }
    }

    tx_count_.assign(c, {});
    col_count_.assign(c, {});
    batch_sum_.assign(kBatches, 0.0);
    batch_n_.assign(kBatches, 0);
  }

  SimReport execute() {
    for (int d = 0; d < static_cast<int>(devices_.size()); ++d) schedule_next_arrival(d, 0.0);

    while (!events_.empty()) {
      const Event ev = events_.top();
      events_.pop();
      if (ev.time > cfg_.duration && ev.kind != EventKind::TxEnd) continue;
      switch (ev.kind) {
        case EventKind::Arrival: on_arrival(ev); break;
        case EventKind::TxStart: on_tx_start(ev); break;
        case EventKind::TxEnd: on_tx_end(ev); break;
      }
    }
    return finish();
  }

 private:
  void push(double time, int device, EventKind kind) {
    events_.push(Event{time, device, kind, seq_++});
  }

  void schedule_next_arrival(int d, double now) {
    Device& dev = devices_[d];
    if (d < static_cast<int>(cfg_.scripted_arrivals.size()) &&
        !cfg_.scripted_arrivals[d].empty()) {
      const auto& script = cfg_.scripted_arrivals[d];
      if (dev.script_pos < script.size()) push(script[dev.script_pos++], d, EventKind::Arrival);
      return;
    }
    const double lambda = cfg_.scenario.traffic.lambda;
    if (lambda <= 0.0) return;
    push(now + dev.arrivals.exponential(1.0 / lambda), d, EventKind::Arrival);
  }

  void on_arrival(const Event& ev) {
    Device& dev = devices_[ev.device];
    dev.backlog.push_back(ev.time);
    ++generated_;
    if (ev.time >= cfg_.warmup) ++generated_in_window_;
    max_backlog_ = std::max<std::uint64_t>(max_backlog_, dev.backlog.size());
    schedule_next_arrival(ev.device, ev.time);
    try_schedule(ev.device, ev.time);
  }

  /// Steps 1-3 of the class-A uplink scheduler for the head-of-line packet.
  void try_schedule(int d, double now) {
    Device& dev = devices_[d];
    if (dev.busy || dev.backlog.empty()) return;
    if (!std::isfinite(dev.aggregated_next_free)) return;  // aggregated duty cycle 0

    // 1) receive windows, 2) aggregated duty-cycle off period
    const double ready = std::max({now, dev.rx_lockout_until, dev.aggregated_next_free});
    dev.pending_shaped = ready > now;

    // 3) regulatory duty cycle per sub-band
    const int c = plan_.size();
    int free_channels = 0;
    for (int i = 0; i < c; ++i) {
      if (dev.band_next_free[i] <= ready) free_channels += plan_.sub_bands[i].n_channels;
    }
    double start = ready;
    if (free_channels > 0) {
      // 3-a) uniform over the channels of every free sub-band
      int pick = static_cast<int>(dev.decisions.below(static_cast<std::uint64_t>(free_channels)));
      for (int i = 0; i < c; ++i) {
        if (dev.band_next_free[i] > ready) continue;
        const int n = plan_.sub_bands[i].n_channels;
        if (pick < n) {
          dev.pending_band = i;
          dev.pending_channel = pick;
          break;
        }
        pick -= n;
      }
      dev.pending_dc_queued = false;
    } else {
      // 3-b) first sub-band to become free, random channel within it
      int band = 0;
      for (int i = 1; i < c; ++i) {
        if (dev.band_next_free[i] < dev.band_next_free[band]) band = i;
      }
      start = dev.band_next_free[band];
      dev.pending_band = band;
      dev.pending_channel = static_cast<int>(
          dev.decisions.below(static_cast<std::uint64_t>(plan_.sub_bands[band].n_channels)));
      dev.pending_dc_queued = true;
    }
    dev.busy = true;
    push(start, d, EventKind::TxStart);
  }

  void on_tx_start(const Event& ev) {
    Device& dev = devices_[ev.device];
    const double t = ev.time;
    const double end = t + dev.t_tx;
    const int band = dev.pending_band;
    const double delta = plan_.sub_bands[band].duty_cycle;
    const double a = cfg_.scenario.traffic.aggregated_duty_cycle;

    Transmission tx;
    tx.device = ev.device;
    tx.band = band;
    tx.channel = dev.pending_channel;
    tx.sf = dev.sf;
    tx.start = t;
    tx.end = end;
    tx.generated = dev.backlog.front();
    dev.backlog.pop_front();
    ++transmitted_;

    const double hold = cfg_.hold == HoldDistribution::Deterministic
                            ? dev.t_tx / delta
                            : dev.decisions.exponential(dev.t_tx / delta);
    dev.band_next_free[band] = t + hold;
    dev.aggregated_next_free = a > 0.0 ? end + dev.t_tx * (1.0 / a - 1.0) : kInf;
    dev.rx_lockout_until = end + cfg_.lockout.total();

    const std::size_t idx = txs_.size();
    auto& active = active_[channel_key(band, tx.channel, tx.sf)];
    for (std::size_t other : active) {
      if (txs_[other].end > t) {
        txs_[other].collided = true;
        tx.collided = true;
      }
    }
    active.push_back(idx);
    txs_.push_back(tx);
    dev.active_tx = idx;

    if (t >= cfg_.warmup) {
      if (dev.pending_shaped) ++shaper_queued_;
      if (dev.pending_dc_queued) ++dc_queued_;
    }
    if (audit_) {
      dev.band_audit[band].add(t, end);
      if (a > 0.0) dev.aggregated_audit.add(t, end);
    }
    push(end, ev.device, EventKind::TxEnd);
  }

  void on_tx_end(const Event& ev) {
    Device& dev = devices_[ev.device];
    const std::size_t idx = dev.active_tx;
    const Transmission& tx = txs_[idx];
    auto& active = active_[channel_key(tx.band, tx.channel, tx.sf)];
    active.erase(std::find(active.begin(), active.end(), idx));

    // The collided flag is final once the transmission has ended.
    if (tx.start >= cfg_.warmup && tx.start <= cfg_.duration) record(tx, dev.t_tx);

    dev.busy = false;
    if (ev.time <= cfg_.duration) try_schedule(ev.device, ev.time);
  }

  void record(const Transmission& tx, double t_tx) {
    const int j = tx.sf - kMinSf;
    ++tx_count_[tx.band][j];
    if (tx.collided) ++col_count_[tx.band][j];
    const double latency = tx.end - tx.generated;
    latency_sum_ += latency;
    wait_sum_ += latency - t_tx;
    ++measured_;
    const double span = cfg_.duration - cfg_.warmup;
    const int batch = std::min(kBatches - 1,
                               static_cast<int>((tx.start - cfg_.warmup) / span * kBatches));
    batch_sum_[batch] += latency;
    ++batch_n_[batch];
  }

  SimReport finish() {
    SimReport rep;
    const int c = plan_.size();
    const double span = cfg_.duration - cfg_.warmup;
    const double m = static_cast<double>(devices_.size());

    rep.packets_generated = generated_;
    rep.packets_transmitted = transmitted_;
    for (const Device& dev : devices_) rep.backlog_remaining += dev.backlog.size();
    rep.measured_packets = measured_;
    rep.shaper_queued = shaper_queued_;
    rep.duty_cycle_queued = dc_queued_;
    rep.max_backlog = max_backlog_;
    rep.offered = static_cast<double>(generated_in_window_) / (span * m);
    rep.carried = static_cast<double>(measured_) / (span * m);

    const double n = static_cast<double>(measured_);
    rep.mean_latency = measured_ > 0 ? latency_sum_ / n : std::nan("");
    rep.mean_wait = measured_ > 0 ? wait_sum_ / n : std::nan("");
    rep.latency_ci95 = batch_ci95();

    std::uint64_t collided_total = 0;
    rep.service_ratios.assign(c, 0.0);
    rep.collision_rate.assign(c, 0.0);
    rep.collision_rate_sf.assign(c, {});
    rep.transmissions_sf = tx_count_;
    for (int i = 0; i < c; ++i) {
      std::uint64_t band_tx = 0;
      std::uint64_t band_col = 0;
      for (int j = 0; j < kNumSf; ++j) {
        band_tx += tx_count_[i][j];
        band_col += col_count_[i][j];
        rep.collision_rate_sf[i][j] =
            tx_count_[i][j] > 0
                ? static_cast<double>(col_count_[i][j]) / static_cast<double>(tx_count_[i][j])
                : std::nan("");
      }
      collided_total += band_col;
      rep.service_ratios[i] = measured_ > 0 ? static_cast<double>(band_tx) / n : 0.0;
      rep.collision_rate[i] =
          band_tx > 0 ? static_cast<double>(band_col) / static_cast<double>(band_tx) : 0.0;
    }
    rep.overall_collision_rate = measured_ > 0 ? static_cast<double>(collided_total) / n : 0.0;

    rep.audit.performed = audit_;
    if (audit_) {
      for (const Device& dev : devices_) {
        for (const WindowAudit& w : dev.band_audit) {
          rep.audit.worst_regulatory_excess =
              std::max(rep.audit.worst_regulatory_excess, w.excess());
        }
        rep.audit.worst_aggregated_excess =
            std::max(rep.audit.worst_aggregated_excess, dev.aggregated_audit.excess());
      }
      rep.audit.passed =
          rep.audit.worst_regulatory_excess <= 0.0 && rep.audit.worst_aggregated_excess <= 0.0;
    }
    if (cfg_.keep_transmissions) rep.transmissions = std::move(txs_);
    return rep;
  }

  double batch_ci95() const {
    std::vector<double> means;
    for (int b = 0; b < kBatches; ++b) {
      if (batch_n_[b] > 0) means.push_back(batch_sum_[b] / static_cast<double>(batch_n_[b]));
    }
    if (means.size() < 2) return std::nan("");
    const double k = static_cast<double>(means.size());
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : means) ss += (v - mean) * (v - mean);
    const boost::math::students_t dist(k - 1.0);
    return boost::math::quantile(dist, 0.975) * std::sqrt(ss / (k - 1.0) / k);
  }

  const SimConfig& cfg_;
  const BandPlan& plan_;
  bool audit_ = true;
  std::vector<Device> devices_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t seq_ = 0;
  std::vector<Transmission> txs_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> active_;

  std::uint64_t generated_ = 0;
  std::uint64_t generated_in_window_ = 0;
  std::uint64_t transmitted_ = 0;
  std::uint64_t measured_ = 0;
  std::uint64_t shaper_queued_ = 0;
  std::uint64_t dc_queued_ = 0;
  std::uint64_t max_backlog_ = 0;
  double latency_sum_ = 0.0;
  double wait_sum_ = 0.0;
  std::vector<std::array<std::uint64_t, kNumSf>> tx_count_;
  std::vector<std::array<std::uint64_t, kNumSf>> col_count_;
  std::vector<double> batch_sum_;
  std::vector<std::uint64_t> batch_n_;
};

}  // namespace

void SimConfig::validate() const {
  scenario.validate();
  if (!(warmup >= 0.0) || !(duration > warmup) || !std::isfinite(duration)) {
    throw ValidationError("simulation: duration > warmup >= 0 violated");
  }
  if (lockout.receive_delay1 < 0.0 || lockout.rx2_offset < 0.0 ||
      lockout.rx_window_duration < 0.0) {
    throw ValidationError("simulation: receive window parameters must be >= 0");
  }
  if (!(t_tx_override_s >= 0.0)) throw ValidationError("simulation: t_tx_override_s >= 0");
  if (static_cast<int>(scripted_arrivals.size()) > scenario.traffic.devices) {
    throw ValidationError("simulation: more arrival scripts than devices");
  }
  for (const auto& script : scripted_arrivals) {
    if (!std::is_sorted(script.begin(), script.end())) {
      throw ValidationError("simulation: scripted arrivals must be sorted");
    }
  }
}

double simulator_airtime(const SimConfig& config, int sf) {
  return airtime_per_sf(config.scenario.radio, config.t_tx_override_s)[sf_index(sf)];
}

std::vector<int> assign_spreading_factors(const Scenario& scenario) {
  const auto mix = scenario.resolved_sf_mix();
  const int m = scenario.traffic.devices;
  std::array<double, kNumSf> share{};
  for (const auto& row : mix) {
    for (int j = 0; j < kNumSf; ++j) share[j] += row[j] / static_cast<double>(mix.size());
  }
  std::array<int, kNumSf> count{};
  std::array<double, kNumSf> remainder{};
  int assigned = 0;
  for (int j = 0; j < kNumSf; ++j) {
    const double exact = share[j] * m;
    count[j] = static_cast<int>(std::floor(exact));
    remainder[j] = exact - count[j];
    assigned += count[j];
  }
  while (assigned < m) {
    int best = 0;
    for (int j = 1; j < kNumSf; ++j) {
      if (remainder[j] > remainder[best]) best = j;
    }
    ++count[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  std::vector<int> out;
  out.reserve(m);
  for (int j = 0; j < kNumSf; ++j) out.insert(out.end(), count[j], kMinSf + j);
  return out;
}

SimReport run(const SimConfig& config) {
  config.validate();
  Engine engine(config);
  return engine.execute();
}

}  // namespace lwqos
