#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "lwqos/airtime.hpp"
#include "lwqos/queueing.hpp"

using namespace lwqos;

namespace {

SteadyState solve(std::vector<double> mu, std::vector<double> n, double lambda, int qmax = 1000) {
  return solve_steady_state(build_generator({std::move(mu), std::move(n), lambda, qmax}));
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("single server chain is a birth-death generator") {
  const Generator g = build_generator({{2.0}, {1.0}, 0.5, 2});
  REQUIRE(g.size() == 4);
  const Eigen::MatrixXd q(g.matrix);
  const Eigen::Matrix4d expected{{-0.5, 0.5, 0.0, 0.0},
                                 {2.0, -2.5, 0.5, 0.0},
                                 {0.0, 2.0, -2.5, 0.5},
                                 {0.0, 0.0, 2.0, -2.0}};
  CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("generator rows sum to zero and off-diagonals are nonnegative") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int c = 1; c <= 5; ++c) {
    std::vector<double> mu(c), n(c);
    for (int i = 0; i < c; ++i) {
      mu[i] = u(gen);
      n[i] = std::ceil(u(gen) * 5);
    }
    const Generator g = build_generator({mu, n, u(gen), 30});
    const Eigen::MatrixXd q(g.matrix);
    CHECK(q.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < q.rows(); ++i) {
      for (int j = 0; j < q.cols(); ++j) {
        if (i != j) CHECK(q(i, j) >= 0.0);
      }
    }
  }
}

TEST_CASE("single server matches M/M/1") {
  for (int k = 1; k <= 9; ++k) {
    const double rho = k / 10.0;
    const SteadyState ss = solve({1.0}, {1.0}, rho);
    CHECK(std::abs(ss.p_idle[0] - (1.0 - rho)) < 1e-6);
    CHECK(ss.p_busy_all == doctest::Approx(rho).epsilon(1e-6));
  }
}

TEST_CASE("symmetric servers match Erlang C") {
  CHECK(erlang_c(2, 1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(erlang_c(1, 0.3, 1.0) == doctest::Approx(0.3));
  CHECK(erlang_c(3, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(erlang_c(2, 2.0, 1.0), ValidationError);

  const SteadyState ss = solve({1.0, 1.0}, {1.0, 1.0}, 1.0);
  CHECK(std::abs(ss.p_busy_all - 1.0 / 3.0) < 1e-6);
  for (int c = 2; c <= 4; ++c) {
    for (double rho : {0.2, 0.5, 0.8}) {
      const SteadyState s = solve(std::vector<double>(c, 0.7), std::vector<double>(c, 2.0),
                                  rho * c * 0.7);
      CHECK(std::abs(s.p_busy_all - erlang_c(c, rho * c * 0.7, 0.7)) < 1e-9);
    }
  }
}

TEST_CASE("symmetric chain is invariant under server relabelling") {
  const SteadyState a = solve({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}, 2.5, 200);
  const SteadyState b = solve({3.0, 2.0, 1.0}, {1.0, 2.0, 3.0}, 2.5, 200);
  CHECK(a.p_busy_all == doctest::Approx(b.p_busy_all).epsilon(1e-12));
  CHECK(a.p_idle[0] == doctest::Approx(b.p_idle[2]).epsilon(1e-12));
  CHECK(a.p_idle[1] == doctest::Approx(b.p_idle[1]).epsilon(1e-12));
}

TEST_CASE("zero arrivals put all mass on the empty state") {
  const SteadyState ss = solve({1.0, 2.0}, {1.0, 1.0}, 0.0);
  CHECK(ss.partial_states[0] == 1.0);
  CHECK(ss.p_busy_all == 0.0);
  CHECK(ss.p_idle[0] == 1.0);
}

TEST_CASE("structured solve agrees with a dense LU of the full generator") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 1 + trial % 3;
    std::vector<double> mu(c), n(c);
    for (int i = 0; i < c; ++i) {
      mu[i] = u(gen);
      n[i] = 1 + static_cast<int>(gen() % 15);
    }
    const double lambda = u(gen) * 0.95 * sum(mu);
    const Generator g = build_generator({mu, n, lambda, 1000});
    const SteadyState fast = solve_steady_state(g);
    const SteadyState dense = solve_steady_state_dense(g);
    const auto a = fast.distribution();
    const auto b = dense.distribution();
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    CHECK(worst < 1e-9);
    CHECK(fast.residual < 1e-10);
  }
}

TEST_CASE("steady state hygiene over a grid") {
  const double t = 4.071424;
  for (const auto& names : std::vector<std::vector<std::string>>{
           {"G"}, {"G", "G1"}, {"G", "G2"}, {"G", "G4"}, {"G", "G1", "G2", "G3", "G4"}}) {
    const BandPlan p = eu868_default().subset(names);
    const auto mu = service_rates(p, t);
    for (double f : {0.01, 0.1, 0.5, 0.9, 0.99, 1.5}) {
      const SteadyState ss = solve(mu, p.channel_counts(), f * sum(mu));
      const auto pi = ss.distribution();
      double total = 0.0;
      for (double v : pi) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
      CHECK(generator_residual(build_generator({mu, p.channel_counts(), f * sum(mu), 1000}), pi) <
            1e-10);
    }
  }
}

TEST_CASE("large chains use the sparse path") {
  std::vector<double> mu(12, 0.3), n(12, 1.0);
  mu[0] = 1.2;
  const SteadyState ss = solve(mu, n, 2.0, 100);
  CHECK(ss.residual < 1e-10);
  CHECK(std::abs(sum(ss.distribution()) - 1.0) < 1e-9);
}

TEST_CASE("waiting time formulas") {
  CHECK(waiting_time(0.5, 0.01, 0.005) == doctest::Approx(16.6666667));
  CHECK(waiting_time(0.5, 0.01, 0.005, WaitingFormula::Classical) == doctest::Approx(50.0));
  CHECK(std::isinf(waiting_time(1.0, 0.01, 0.02, WaitingFormula::Classical)));
  CHECK(waiting_time(0.0, 0.01, 0.005) == 0.0);
  CHECK_THROWS_AS(waiting_time(0.5, 0.0, 0.1), ValidationError);
}

TEST_CASE("mean latency weighting") {
  const std::vector<double> tx{1.0, 1.0}, tw{3.0, 7.0}, w{1.0, 3.0};
  CHECK(mean_latency(tx, tw, w) == doctest::Approx(7.0));
  const std::vector<double> bad{0.0, 1.0};
  CHECK_THROWS_AS(mean_latency(tx, tw, bad), ValidationError);
}

TEST_CASE("service ratio limits") {
  const auto lim = service_ratio_limits(eu868_default().subset({"G", "G1"}));
  CHECK(lim.low_load[0] == doctest::Approx(15.0 / 18.0));
  CHECK(lim.saturation[0] == doctest::Approx(0.5));
  const auto lim2 = service_ratio_limits(eu868_default().subset({"G", "G2"}));
  CHECK(lim2.saturation[0] == doctest::Approx(0.01 / 0.011));
  CHECK(sum(lim2.low_load) == doctest::Approx(1.0));
}

TEST_CASE("service ratio clamps and flags") {
  CHECK(service_ratio(1.0, 2.0, 0.5).value == doctest::Approx(0.25));
  CHECK_FALSE(service_ratio(1.0, 2.0, 0.5).clamped);
  const ClampedValue c = service_ratio(1.0, 0.1, 0.5);
  CHECK(c.value == 1.0);
  CHECK(c.clamped);
  CHECK_THROWS_AS(service_ratio(1.0, 0.0, 0.5), ValidationError);
}

TEST_CASE("chain service ratios sum to one below saturation") {
  for (const auto& names : std::vector<std::vector<std::string>>{
           {"G", "G1"}, {"G", "G2"}, {"G", "G4"}, {"G", "G1", "G2", "G3", "G4"}}) {
    const BandPlan p = eu868_default().subset(names);
    const auto mu = service_rates(p, 4.071424);
    for (double rho : {0.001, 0.05, 0.3, 0.6, 0.9, 0.95}) {
      const double lambda = rho * sum(mu);
      const SteadyState ss = solve(mu, p.channel_counts(), lambda);
      double total = 0.0;
      for (int i = 0; i < p.size(); ++i) total += service_ratio(mu[i], lambda, ss.p_idle[i]).value;
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("chain service ratios approach their limits") {
  const BandPlan p = eu868_default().subset({"G", "G1"});
  const auto mu = service_rates(p, 4.071424);
  const auto lim = service_ratio_limits(p);
  {
    const double lambda = 1e-6 * sum(mu);
    const SteadyState ss = solve(mu, p.channel_counts(), lambda);
    CHECK(std::abs(service_ratio(mu[0], lambda, ss.p_idle[0]).value - lim.low_load[0]) < 1e-3);
  }
  {
    const double lambda = 0.999 * sum(mu);
    const SteadyState ss = solve(mu, p.channel_counts(), lambda);
    CHECK(std::abs(service_ratio(mu[0], lambda, ss.p_idle[0]).value - lim.saturation[0]) < 1e-3);
  }
}

TEST_CASE("jockeying wait does not exceed the ordinary wait for equal duty cycles") {
  for (const auto& names : std::vector<std::vector<std::string>>{{"G"}, {"G", "G1"}, {"G", "G3"}}) {
    const BandPlan p = eu868_default().subset(names);
    const double t = 4.071424;
    const auto mu = service_rates(p, t);
    for (double rho = 0.05; rho < 1.0; rho += 0.05) {
      const PerfReport r = evaluate(p, t, rho * sum(mu), 1.0);
      CHECK(r.t_w_lower[0] <= r.t_w_upper[0] * (1.0 + 1e-9));
      CHECK(r.latency_lower <= r.latency_upper * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("symmetric-equivalent model sits below the chain for unequal duty cycles") {
  // The chain favours the many-channel band at low load, so the slow band is
  // held more often than an equal split would suggest.
  const BandPlan p = eu868_default().subset({"G", "G2"});
  const auto mu = service_rates(p, 4.071424);
  const PerfReport r = evaluate(p, 4.071424, 0.5 * sum(mu), 1.0);
  CHECK(r.p_busy_all_jockeying > r.p_busy_all_ordinary);
}

TEST_CASE("shaper") {
  CHECK(md1_wait(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(md1_wait(0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(md1_wait(1.0, 1.0), ValidationError);
  CHECK(shape_arrivals(0.3, 0.2) == 0.2);
  CHECK(shape_arrivals(0.1, 0.2) == 0.1);
  RxLockout none{0.0, 0.0, 0.0};
  CHECK(shaper_capacity(0.5, 2.0, none) == doctest::Approx(0.25));
  CHECK(RxLockout{}.total() == 2.0);
}

TEST_CASE("evaluate above shaper capacity freezes the chain") {
  const BandPlan p = eu868_default().subset({"G", "G4"});
  const double t = 3.4247;
  const double cap = shaper_capacity(0.05, t);
  const PerfReport a = evaluate(p, t, 1.5 * cap, 0.05);
  const PerfReport b = evaluate(p, t, 10.0 * cap, 0.05);
  CHECK(a.effective_arrival == doctest::Approx(cap));
  CHECK(std::isinf(a.latency_upper));
  for (int i = 0; i < 2; ++i) CHECK(a.service_ratios[i] == b.service_ratios[i]);
}
