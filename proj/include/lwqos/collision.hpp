#pragma once

#include <span>
#include <vector>

#include "lwqos/bandplan.hpp"

namespace lwqos {

/// Per-channel Erlang load, rows = sub-bands, columns = SF7..SF12.
struct LoadMatrix {
  std::vector<std::array<double, kNumSf>> load;
};

/// L(i,j) = lambda * r_i * T_tx,j * M * p_SF(i,j) / n_i
LoadMatrix offered_load(double lambda, std::span<const double> service_ratios,
                        std::span<const double, kNumSf> t_tx_per_sf, int devices,
                        std::span<const SfDistribution> sf_mix,
                        std::span<const double> channels);

enum class CollisionFormula {
  Complement,  // 1 - exp(-2L): pure-ALOHA collision probability
  Verbatim,    // exp(-2L) as printed
};

double collision_probability(double load,
                             CollisionFormula formula = CollisionFormula::Complement);

/// T_tx for every SF with the other radio parameters fixed. When `override_s`
/// is positive it replaces the entry of the radio's own SF.
std::array<double, kNumSf> airtime_per_sf(const RadioParams& radio, double override_s = 0.0);

}  // namespace lwqos
