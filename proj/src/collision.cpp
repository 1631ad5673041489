#include "lwqos/collision.hpp"

#include <cmath>

#include "lwqos/airtime.hpp"

namespace lwqos {

LoadMatrix offered_load(double lambda, std::span<const double> service_ratios,
                        std::span<const double, kNumSf> t_tx_per_sf, int devices,
                        std::span<const SfDistribution> sf_mix,
                        std::span<const double> channels) {
  const std::size_t c = channels.size();
  if (service_ratios.size() != c || sf_mix.size() != c) {
    throw ValidationError("offered_load: per-band inputs differ in length");
  }
  if (!(lambda >= 0.0) || devices < 1) {
    throw ValidationError("offered_load: lambda >= 0 and devices >= 1 required");
  }
  LoadMatrix out;
  out.load.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    if (!(channels[i] >= 1.0)) throw ValidationError("offered_load: n_i >= 1 violated");
    for (int j = 0; j < kNumSf; ++j) {
      out.load[i][j] = lambda * service_ratios[i] * t_tx_per_sf[j] * devices *
                       sf_mix[i][j] / channels[i];
    }
  }
  return out;
}

double collision_probability(double load, CollisionFormula formula) {
  if (!(load >= 0.0)) throw ValidationError("collision_probability: load >= 0 violated");
  const double success = std::exp(-2.0 * load);
  return formula == CollisionFormula::Complement ? -std::expm1(-2.0 * load) : success;
}

std::array<double, kNumSf> airtime_per_sf(const RadioParams& radio, double override_s) {
  std::array<double, kNumSf> out{};
  for (int sf = kMinSf; sf <= kMaxSf; ++sf) {
    out[sf - kMinSf] = time_on_air(radio.with_sf(sf)).time_on_air;
  }
  if (override_s > 0.0) out[sf_index(radio.spreading_factor)] = override_s;
  return out;
}

}  // namespace lwqos
