#pragma once

#include <vector>

#include "lwqos/bandplan.hpp"

namespace lwqos {

struct AirtimeResult {
  double symbol_time = 0.0;    // s
  double preamble_time = 0.0;  // s
  int payload_symbols = 0;
  double time_on_air = 0.0;    // s
};

/// LoRa frame duration from the SX127x datasheet formula.
AirtimeResult time_on_air(const RadioParams& radio);

/// Time a sub-band stays held after a transmission starts: t_tx / duty_cycle.
double holding_time(double t_tx, double duty_cycle);

/// Long-run sustainable transmission rate of a sub-band: duty_cycle / t_tx.
double service_rate(double t_tx, double duty_cycle);

/// service_rate for every sub-band of the plan at a common t_tx.
std::vector<double> service_rates(const BandPlan& plan, double t_tx);

}  // namespace lwqos
