#include "lwqos/airtime.hpp"

#include <algorithm>
#include <cmath>

namespace lwqos {

namespace {

void check_hold_args(double t_tx, double duty_cycle) {
  if (!(t_tx > 0.0) || !std::isfinite(t_tx)) {
    throw ValidationError("t_tx > 0 violated");
  }
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0)) {
    throw ValidationError("0 < duty_cycle <= 1 violated");
  }
}

}  // namespace

AirtimeResult time_on_air(const RadioParams& radio) {
  radio.validate();
  const int sf = radio.spreading_factor;
  const int de = radio.low_datarate_active() ? 1 : 0;
  const int pl_total = radio.payload_bytes + radio.overhead_bytes;

  AirtimeResult out;
  out.symbol_time = std::ldexp(1.0, sf) / radio.bandwidth_hz;
  out.preamble_time = (radio.preamble_symbols + 4.25) * out.symbol_time;

  // Integer numerator and denominator keep the ceil exact.
  const int numerator = 8 * pl_total - 4 * sf + 28 + 16 * (radio.crc_on ? 1 : 0) -
                        20 * (radio.explicit_header ? 0 : 1);
  const int denominator = 4 * (sf - 2 * de);
  int blocks = 0;
  if (numerator > 0) blocks = (numerator + denominator - 1) / denominator;
  out.payload_symbols = 8 + std::max(blocks * (radio.coding_rate + 4), 0);
  out.time_on_air = out.preamble_time + out.payload_symbols * out.symbol_time;
  return out;
}

double holding_time(double t_tx, double duty_cycle) {
  check_hold_args(t_tx, duty_cycle);
  return t_tx / duty_cycle;
}

double service_rate(double t_tx, double duty_cycle) {
  check_hold_args(t_tx, duty_cycle);
  return duty_cycle / t_tx;
}

std::vector<double> service_rates(const BandPlan& plan, double t_tx) {
  std::vector<double> out;
  out.reserve(plan.sub_bands.size());
  for (const auto& b : plan.sub_bands) out.push_back(service_rate(t_tx, b.duty_cycle));
  return out;
}

}  // namespace lwqos
