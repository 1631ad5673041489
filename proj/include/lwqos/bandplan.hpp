#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lwqos {

inline constexpr int kMinSf = 7;
inline constexpr int kMaxSf = 12;
inline constexpr int kNumSf = kMaxSf - kMinSf + 1;

/// Probability over SF7..SF12 (index 0 is SF7).
using SfDistribution = std::array<double, kNumSf>;

/// Raised when a scenario file is not well-formed TOML or has a key of the
/// wrong type. The message carries the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Raised when a value violates a domain invariant. The message names the
/// invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SubBand {
  int id = 1;
  std::string name;
  int n_channels = 1;
  double duty_cycle = 1.0;

  bool operator==(const SubBand&) const = default;
};

struct BandPlan {
  std::vector<SubBand> sub_bands;

  int size() const { return static_cast<int>(sub_bands.size()); }
  int total_channels() const;
  std::vector<double> channel_counts() const;
  std::vector<double> duty_cycles() const;
  /// Band names joined with '+', e.g. "G+G1".
  std::string label() const;

  /// Selects bands by name (in the given order) and renumbers ids from 1.
  BandPlan subset(const std::vector<std::string>& names) const;

  void validate() const;

  bool operator==(const BandPlan&) const = default;
};

enum class LowDrOptimize { Auto, On, Off };

struct RadioParams {
  int spreading_factor = 12;
  double bandwidth_hz = 125000.0;
  int coding_rate = 4;  // index 1..4, rate 4/(4+cr)
  int preamble_symbols = 8;
  int payload_bytes = 50;
  int overhead_bytes = 13;
  bool explicit_header = true;
  bool crc_on = true;
  LowDrOptimize low_datarate_optimize = LowDrOptimize::Auto;

  /// Resolves the auto mode: on for SF >= 11 at 125 kHz or narrower.
  bool low_datarate_active() const;
  RadioParams with_sf(int sf) const;
  void validate() const;

  bool operator==(const RadioParams&) const = default;
};

struct TrafficModel {
  double lambda = 0.001;  // packets/s per device
  int devices = 1;
  /// One row per sub-band. Empty means "every band uses the radio SF".
  std::vector<SfDistribution> sf_mix;
  double aggregated_duty_cycle = 1.0;

  void validate(const BandPlan& plan) const;

  bool operator==(const TrafficModel&) const = default;
};

struct Scenario {
  BandPlan plan;
  RadioParams radio;
  TrafficModel traffic;

  /// sf_mix with the default (one-hot at radio SF) filled in.
  std::vector<SfDistribution> resolved_sf_mix() const;
  /// Restricts the plan to the named bands, keeping matching sf_mix rows.
  Scenario subset(const std::vector<std::string>& names) const;
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// EU868 sub-bands G, G1, G2, G3, G4. The G2 and G3 channel counts (and the
/// G4 duty cycle value) are configuration defaults and may be overridden in a
/// scenario file.
BandPlan eu868_default();

Scenario parse_scenario(std::string_view toml_text,
                        std::string_view source_name = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
std::string write_scenario(const Scenario& scenario);

std::string_view to_string(LowDrOptimize mode);
int sf_index(int spreading_factor);

}  // namespace lwqos
