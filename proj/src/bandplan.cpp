#include "lwqos/bandplan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace lwqos {

namespace {

bool valid_band_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
  });
}

int line_of(const toml::node& node) {
  return static_cast<int>(node.source().begin.line);
}

[[noreturn]] void type_error(const toml::node& node, std::string_view key,
                             std::string_view expected) {
  std::ostringstream msg;
  msg << "line " << line_of(node) << ": key '" << key << "' must be "
      << expected;
  throw ParseError(msg.str(), line_of(node));
}

void reject_unknown_keys(const toml::table& table, std::string_view where,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : table) {
    if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end()) {
      std::ostringstream msg;
      msg << "line " << line_of(node) << ": unknown key '" << key.str()
          << "' in " << where;
      throw ParseError(msg.str(), line_of(node));
    }
  }
}

template <typename T>
void read_int(const toml::table& table, std::string_view key, T& out) {
  const toml::node* node = table.get(key);
  if (node == nullptr) return;
  auto value = node->value_exact<int64_t>();
  if (!value) type_error(*node, key, "an integer");
  out = static_cast<T>(*value);
}

void read_double(const toml::table& table, std::string_view key, double& out) {
  const toml::node* node = table.get(key);
  if (node == nullptr) return;
  if (auto v = node->value_exact<double>()) {
    out = *v;
  } else if (auto i = node->value_exact<int64_t>()) {
    out = static_cast<double>(*i);
  } else {
    type_error(*node, key, "a number");
  }
}

void read_bool(const toml::table& table, std::string_view key, bool& out) {
  const toml::node* node = table.get(key);
  if (node == nullptr) return;
  auto value = node->value_exact<bool>();
  if (!value) type_error(*node, key, "a boolean");
  out = *value;
}

void read_string(const toml::table& table, std::string_view key,
                 std::string& out) {
  const toml::node* node = table.get(key);
  if (node == nullptr) return;
  auto value = node->value_exact<std::string>();
  if (!value) type_error(*node, key, "a string");
  out = *value;
}

const toml::table* sub_table(const toml::table& root, std::string_view key) {
  const toml::node* node = root.get(key);
  if (node == nullptr) return nullptr;
  if (!node->is_table()) type_error(*node, key, "a table");
  return node->as_table();
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  std::string s = out.str();
  if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace

int sf_index(int spreading_factor) {
  if (spreading_factor < kMinSf || spreading_factor > kMaxSf) {
    throw ValidationError("spreading_factor must be in 7..12, got " +
                          std::to_string(spreading_factor));
  }
  return spreading_factor - kMinSf;
}

std::string_view to_string(LowDrOptimize mode) {
  switch (mode) {
    case LowDrOptimize::On: return "on";
    case LowDrOptimize::Off: return "off";
    case LowDrOptimize::Auto: break;
  }
  return "auto";
}

// ---------------------------------------------------------------- BandPlan

int BandPlan::total_channels() const {
  return std::accumulate(sub_bands.begin(), sub_bands.end(), 0,
                         [](int acc, const SubBand& b) { return acc + b.n_channels; });
}

std::vector<double> BandPlan::channel_counts() const {
  std::vector<double> out;
  out.reserve(sub_bands.size());
  for (const auto& b : sub_bands) out.push_back(b.n_channels);
  return out;
}

std::vector<double> BandPlan::duty_cycles() const {
  std::vector<double> out;
  out.reserve(sub_bands.size());
  for (const auto& b : sub_bands) out.push_back(b.duty_cycle);
  return out;
}

std::string BandPlan::label() const {
  std::string out;
  for (const auto& b : sub_bands) {
    if (!out.empty()) out += '+';
    out += b.name;
  }
  return out;
}

BandPlan BandPlan::subset(const std::vector<std::string>& names) const {
  BandPlan out;
  for (const auto& name : names) {
    auto it = std::find_if(sub_bands.begin(), sub_bands.end(),
                           [&](const SubBand& b) { return b.name == name; });
    if (it == sub_bands.end()) {
      throw ValidationError("unknown sub-band '" + name + "'");
    }
    SubBand band = *it;
    band.id = static_cast<int>(out.sub_bands.size()) + 1;
    out.sub_bands.push_back(band);
  }
  out.validate();
  return out;
}

void BandPlan::validate() const {
  if (sub_bands.empty()) {
    throw ValidationError("band plan: sub_bands must be nonempty");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < sub_bands.size(); ++i) {
    const SubBand& b = sub_bands[i];
    if (b.id != static_cast<int>(i) + 1) {
      throw ValidationError("band plan: ids must be unique and contiguous from 1");
    }
    if (!valid_band_name(b.name)) {
      throw ValidationError("sub-band " + std::to_string(b.id) +
                            ": name must be nonempty [A-Za-z0-9_]");
    }
    if (!names.insert(b.name).second) {
      throw ValidationError("band plan: duplicate sub-band name '" + b.name + "'");
    }
    if (b.n_channels < 1) {
      throw ValidationError("sub-band " + b.name + ": n_channels >= 1 violated");
    }
    if (!(b.duty_cycle > 0.0 && b.duty_cycle <= 1.0)) {
      throw ValidationError("sub-band " + b.name +
                            ": 0 < duty_cycle <= 1 violated");
    }
  }
  if (sub_bands.size() > 16) {
    throw ValidationError("band plan: at most 16 sub-bands are supported");
  }
}

BandPlan eu868_default() {
  return BandPlan{{
      {1, "G", 15, 0.01},
      {2, "G1", 3, 0.01},
      {3, "G2", 3, 0.001},
      {4, "G3", 1, 0.01},
      {5, "G4", 1, 0.1},
  }};
}

// ---------------------------------------------------------------- Radio

bool RadioParams::low_datarate_active() const {
  switch (low_datarate_optimize) {
    case LowDrOptimize::On: return true;
    case LowDrOptimize::Off: return false;
    case LowDrOptimize::Auto: break;
  }
  return spreading_factor >= 11 && bandwidth_hz <= 125000.0;
}

RadioParams RadioParams::with_sf(int sf) const {
  RadioParams out = *this;
  out.spreading_factor = sf;
  return out;
}

void RadioParams::validate() const {
  sf_index(spreading_factor);
  if (!(bandwidth_hz > 0.0)) throw ValidationError("radio: bandwidth > 0 violated");
  if (coding_rate < 1 || coding_rate > 4) {
    throw ValidationError("radio: coding_rate in 1..4 violated");
  }
  if (payload_bytes < 0) throw ValidationError("radio: payload_bytes >= 0 violated");
  if (overhead_bytes < 0) throw ValidationError("radio: overhead_bytes >= 0 violated");
  if (preamble_symbols < 1) {
    throw ValidationError("radio: preamble_symbols >= 1 violated");
  }
}

// ---------------------------------------------------------------- Traffic

void TrafficModel::validate(const BandPlan& plan) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("traffic: lambda >= 0 violated");
  }
  if (devices < 1) throw ValidationError("traffic: devices >= 1 violated");
  if (!(aggregated_duty_cycle >= 0.0 && aggregated_duty_cycle <= 1.0)) {
    throw ValidationError("traffic: aggregated_duty_cycle in [0,1] violated");
  }
  if (!sf_mix.empty()) {
    if (static_cast<int>(sf_mix.size()) != plan.size()) {
      throw ValidationError("traffic: sf_mix needs one row per sub-band");
    }
    for (std::size_t i = 0; i < sf_mix.size(); ++i) {
      double sum = 0.0;
      for (double p : sf_mix[i]) {
        if (!(p >= 0.0)) {
          throw ValidationError("traffic: sf_mix entries must be >= 0");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("traffic: sf_mix row " + std::to_string(i + 1) +
                              " must sum to 1 within 1e-9");
      }
    }
  }
}

// ---------------------------------------------------------------- Scenario

std::vector<SfDistribution> Scenario::resolved_sf_mix() const {
  if (!traffic.sf_mix.empty()) return traffic.sf_mix;
  SfDistribution one_hot{};
  one_hot[sf_index(radio.spreading_factor)] = 1.0;
  return std::vector<SfDistribution>(plan.sub_bands.size(), one_hot);
}

Scenario Scenario::subset(const std::vector<std::string>& names) const {
  Scenario out = *this;
  out.plan = plan.subset(names);
  if (!traffic.sf_mix.empty()) {
    out.traffic.sf_mix.clear();
    for (const auto& name : names) {
      auto it = std::find_if(plan.sub_bands.begin(), plan.sub_bands.end(),
                             [&](const SubBand& b) { return b.name == name; });
      out.traffic.sf_mix.push_back(
          traffic.sf_mix[static_cast<std::size_t>(it - plan.sub_bands.begin())]);
    }
  }
  return out;
}

void Scenario::validate() const {
  plan.validate();
  radio.validate();
  traffic.validate(plan);
}

Scenario parse_scenario(std::string_view toml_text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& err) {
    const int line = static_cast<int>(err.source().begin.line);
    std::ostringstream msg;
    msg << source_name << ":" << line << ": " << err.description();
    throw ParseError(msg.str(), line);
  }
  reject_unknown_keys(root, "scenario", {"subband", "radio", "traffic"});

  Scenario sc;
  if (const toml::node* node = root.get("subband")) {
    const toml::array* arr = node->as_array();
    if (arr == nullptr) type_error(*node, "subband", "an array of tables ([[subband]])");
    for (const toml::node& entry : *arr) {
      const toml::table* t = entry.as_table();
      if (t == nullptr) type_error(entry, "subband", "an array of tables ([[subband]])");
      reject_unknown_keys(*t, "[[subband]]", {"name", "channels", "duty_cycle"});
      SubBand band;
      band.id = static_cast<int>(sc.plan.sub_bands.size()) + 1;
      band.name = "B" + std::to_string(band.id);
      read_string(*t, "name", band.name);
      read_int(*t, "channels", band.n_channels);
      read_double(*t, "duty_cycle", band.duty_cycle);
      sc.plan.sub_bands.push_back(band);
    }
  }

  if (const toml::table* radio = sub_table(root, "radio")) {
    reject_unknown_keys(*radio, "[radio]",
                        {"sf", "bandwidth_hz", "coding_rate", "preamble_symbols",
                         "payload_bytes", "overhead_bytes", "explicit_header", "crc",
                         "low_dr_optimize"});
    RadioParams& r = sc.radio;
    read_int(*radio, "sf", r.spreading_factor);
    read_double(*radio, "bandwidth_hz", r.bandwidth_hz);
    read_int(*radio, "coding_rate", r.coding_rate);
    read_int(*radio, "preamble_symbols", r.preamble_symbols);
    read_int(*radio, "payload_bytes", r.payload_bytes);
    read_int(*radio, "overhead_bytes", r.overhead_bytes);
    read_bool(*radio, "explicit_header", r.explicit_header);
    read_bool(*radio, "crc", r.crc_on);
    std::string ldro = "auto";
    read_string(*radio, "low_dr_optimize", ldro);
    if (ldro == "auto") {
      r.low_datarate_optimize = LowDrOptimize::Auto;
    } else if (ldro == "on") {
      r.low_datarate_optimize = LowDrOptimize::On;
    } else if (ldro == "off") {
      r.low_datarate_optimize = LowDrOptimize::Off;
    } else {
      type_error(*radio->get("low_dr_optimize"), "low_dr_optimize",
                 "one of \"auto\", \"on\", \"off\"");
    }
  }

  if (const toml::table* traffic = sub_table(root, "traffic")) {
    reject_unknown_keys(*traffic, "[traffic]",
                        {"lambda_per_device", "devices", "aggregated_duty_cycle", "sf_mix"});
    TrafficModel& tm = sc.traffic;
    read_double(*traffic, "lambda_per_device", tm.lambda);
    read_int(*traffic, "devices", tm.devices);
    read_double(*traffic, "aggregated_duty_cycle", tm.aggregated_duty_cycle);
    if (const toml::node* node = traffic->get("sf_mix")) {
      const toml::array* rows = node->as_array();
      if (rows == nullptr) type_error(*node, "sf_mix", "an array of arrays");
      for (const toml::node& row_node : *rows) {
        const toml::array* row = row_node.as_array();
        if (row == nullptr || row->size() != kNumSf) {
          type_error(row_node, "sf_mix", "rows of 6 numbers (SF7..SF12)");
        }
        SfDistribution dist{};
        for (std::size_t j = 0; j < kNumSf; ++j) {
          const toml::node& cell = *row->get(j);
          if (auto v = cell.value_exact<double>()) {
            dist[j] = *v;
          } else if (auto i = cell.value_exact<int64_t>()) {
            dist[j] = static_cast<double>(*i);
          } else {
            type_error(cell, "sf_mix", "rows of 6 numbers (SF7..SF12)");
          }
        }
        tm.sf_mix.push_back(dist);
      }
    }
  }

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string write_scenario(const Scenario& sc) {
  std::ostringstream out;
  for (const auto& b : sc.plan.sub_bands) {
    out << "[[subband]]\n"
        << "name = \"" << b.name << "\"\n"
        << "channels = " << b.n_channels << "\n"
        << "duty_cycle = " << format_double(b.duty_cycle) << "\n\n";
  }
  const RadioParams& r = sc.radio;
  out << "[radio]\n"
      << "sf = " << r.spreading_factor << "\n"
      << "bandwidth_hz = " << format_double(r.bandwidth_hz) << "\n"
      << "coding_rate = " << r.coding_rate << "\n"
      << "preamble_symbols = " << r.preamble_symbols << "\n"
      << "payload_bytes = " << r.payload_bytes << "\n"
      << "overhead_bytes = " << r.overhead_bytes << "\n"
      << "explicit_header = " << (r.explicit_header ? "true" : "false") << "\n"
      << "crc = " << (r.crc_on ? "true" : "false") << "\n"
      << "low_dr_optimize = \"" << to_string(r.low_datarate_optimize) << "\"\n\n";
  const TrafficModel& t = sc.traffic;
  out << "[traffic]\n"
      << "lambda_per_device = " << format_double(t.lambda) << "\n"
      << "devices = " << t.devices << "\n"
      << "aggregated_duty_cycle = " << format_double(t.aggregated_duty_cycle) << "\n";
  if (!t.sf_mix.empty()) {
    out << "sf_mix = [\n";
    for (const auto& row : t.sf_mix) {
      out << "  [";
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j != 0) out << ", ";
        out << format_double(row[j]);
      }
      out << "],\n";
    }
    out << "]\n";
  }
  return out.str();
}

}  // namespace lwqos
