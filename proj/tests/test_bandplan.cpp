#include <doctest.h>

#include <random>
#include <sstream>

#include "lwqos/bandplan.hpp"

using namespace lwqos;

namespace {

const char* kMinimal = R"(
[[subband]]
name = "G"
channels = 15
duty_cycle = 0.01
)";

}  // namespace

TEST_CASE("minimal scenario gets defaults") {
  const Scenario sc = parse_scenario(kMinimal);
  REQUIRE(sc.plan.size() == 1);
  CHECK(sc.plan.sub_bands[0].id == 1);
  CHECK(sc.plan.sub_bands[0].name == "G");
  CHECK(sc.plan.sub_bands[0].n_channels == 15);
  CHECK(sc.plan.sub_bands[0].duty_cycle == doctest::Approx(0.01));
  CHECK(sc.radio == RadioParams{});
  CHECK(sc.traffic.devices == 1);
  CHECK(sc.traffic.aggregated_duty_cycle == 1.0);
  const auto mix = sc.resolved_sf_mix();
  REQUIRE(mix.size() == 1);
  CHECK(mix[0][sf_index(12)] == 1.0);
}

TEST_CASE("eu868 scenario file matches the built-in plan") {
  const Scenario sc = load_scenario(LWQOS_SOURCE_DIR "/scenarios/eu868.toml");
  CHECK(sc.plan == eu868_default());
  CHECK(sc.plan.label() == "G+G1+G2+G3+G4");
  CHECK(sc.plan.total_channels() == 23);
}

TEST_CASE("every shipped scenario loads and validates") {
  for (const char* name : {"g", "g_g1", "g_g2", "g_g1_100dev", "g_g2_100dev", "g_g4_adc05",
                           "g_g4_adc075", "eu868"}) {
    CAPTURE(name);
    const Scenario sc =
        load_scenario(std::string(LWQOS_SOURCE_DIR "/scenarios/") + name + ".toml");
    CHECK_NOTHROW(sc.validate());
  }
}

TEST_CASE("subset renumbers ids and keeps order") {
  const BandPlan p = eu868_default().subset({"G4", "G"});
  REQUIRE(p.size() == 2);
  CHECK(p.sub_bands[0].name == "G4");
  CHECK(p.sub_bands[0].id == 1);
  CHECK(p.sub_bands[1].id == 2);
  CHECK_THROWS_AS(eu868_default().subset({"G9"}), ValidationError);
}

TEST_CASE("zero duty cycle is rejected") {
  const std::string text = R"(
[[subband]]
name = "G"
channels = 15
duty_cycle = 0.0
)";
  CHECK_THROWS_AS(parse_scenario(text), ValidationError);
  BandPlan p = eu868_default();
  p.sub_bands[2].duty_cycle = 1.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("domain validation") {
  BandPlan p = eu868_default();
  p.sub_bands[1].name = "G";
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = eu868_default();
  p.sub_bands[0].n_channels = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(BandPlan{}.validate(), ValidationError);

  RadioParams r;
  r.spreading_factor = 13;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r = {};
  r.coding_rate = 0;
  CHECK_THROWS_AS(r.validate(), ValidationError);

  TrafficModel t;
  t.lambda = -1.0;
  CHECK_THROWS_AS(t.validate(eu868_default()), ValidationError);
  t = {};
  t.sf_mix = {SfDistribution{0.5, 0.5, 0, 0, 0, 0}};  // wrong row count
  CHECK_THROWS_AS(t.validate(eu868_default()), ValidationError);
  t.sf_mix.assign(5, SfDistribution{0.5, 0.4, 0, 0, 0, 0});  // does not sum to 1
  CHECK_THROWS_AS(t.validate(eu868_default()), ValidationError);
}

TEST_CASE("malformed file reports the line") {
  const std::string text = "[[subband]]\nname = \"G\"\nchannels = \"fifteen\"\nduty_cycle = 0.01\n";
  try {
    parse_scenario(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("channels") != std::string::npos);
  }
  try {
    parse_scenario("[[subband]\nname = 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(parse_scenario(std::string(kMinimal) + "\n[radio]\nspreading = 9\n"),
                  ParseError);
}

TEST_CASE("write then load round-trips random scenarios") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Scenario sc;
    const int bands = 1 + static_cast<int>(gen() % 5);
    for (int b = 0; b < bands; ++b) {
      sc.plan.sub_bands.push_back(
          {b + 1, "B" + std::to_string(b), 1 + static_cast<int>(gen() % 20), 1e-3 + u(gen) * 0.5});
    }
    sc.radio.spreading_factor = 7 + static_cast<int>(gen() % 6);
    sc.radio.payload_bytes = static_cast<int>(gen() % 200);
    sc.radio.low_datarate_optimize = static_cast<LowDrOptimize>(gen() % 3);
    sc.traffic.lambda = u(gen) * 0.1;
    sc.traffic.devices = 1 + static_cast<int>(gen() % 500);
    sc.traffic.aggregated_duty_cycle = 0.01 + u(gen) * 0.99;
    if (trial % 2 == 0) {
      for (int b = 0; b < bands; ++b) {
        SfDistribution row{};
        double total = 0.0;
        for (double& v : row) total += (v = u(gen));
        for (double& v : row) v /= total;
        sc.traffic.sf_mix.push_back(row);
      }
    }
    REQUIRE_NOTHROW(sc.validate());
    const Scenario back = parse_scenario(write_scenario(sc));
    CHECK(back == sc);
  }
}

TEST_CASE("sf_index") {
  CHECK(sf_index(7) == 0);
  CHECK(sf_index(12) == 5);
  CHECK_THROWS(sf_index(6));
}
