#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "lwqos/queueing.hpp"

namespace lwqos {

namespace {

// Above this many empty-queue states the GTH block solve (cubic, dense) hands
// over to a sparse LU.
constexpr int kDenseBlockLimit = 2048;

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Grassmann-Taksar-Heyman elimination on a dense rate matrix (row-major,
/// diagonal ignored). Returns the normalized stationary vector.
std::vector<double> gth_solve(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * n + j];
  };
  for (int k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) {
      throw NumericalError("steady state: chain is reducible (state " +
                               std::to_string(k) + " has no path back)",
                           std::numeric_limits<double>::infinity());
    }
    for (int i = 0; i < k; ++i) at(i, k) /= s;
    for (int i = 0; i < k; ++i) {
      const double aik = at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < k; ++j) at(i, j) += aik * at(k, j);
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (int j = 1; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < j; ++i) acc += pi[i] * at(i, j);
    pi[j] = acc;
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= total;
  return pi;
}

/// Stationary vector of the censored chain on the empty-queue states. The
/// (all busy, 0) -> (all busy, 1) excursion always returns to (all busy, 0), so
/// dropping it leaves the censored generator.
std::vector<double> solve_empty_queue_block(const Generator& gen) {
  const int n0 = gen.partial_count() + 1;
  if (n0 <= kDenseBlockLimit) {
    std::vector<double> a(static_cast<std::size_t>(n0) * n0, 0.0);
    for (int row = 0; row < n0; ++row) {
      for (SparseRow::InnerIterator it(gen.matrix, row); it; ++it) {
        const int col = static_cast<int>(it.col());
        if (col < n0 && col != row) a[static_cast<std::size_t>(row) * n0 + col] = it.value();
      }
    }
    return gth_solve(std::move(a), n0);
  }

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(n0, 0.0);
  for (int row = 0; row < n0; ++row) {
    for (SparseRow::InnerIterator it(gen.matrix, row); it; ++it) {
      const int col = static_cast<int>(it.col());
      if (col < n0 && col != row) {
        diag[row] -= it.value();
        // transpose: pi^T Q = 0  <=>  Q^T pi = 0
        if (col != n0 - 1) trip.emplace_back(col, row, it.value());
      }
    }
  }
  for (int row = 0; row < n0 - 1; ++row) trip.emplace_back(row, row, diag[row]);
  for (int col = 0; col < n0; ++col) trip.emplace_back(n0 - 1, col, 1.0);
  Eigen::SparseMatrix<double> m(n0, n0);
  m.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("steady state: sparse LU factorization failed",
                         std::numeric_limits<double>::infinity());
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n0);
  rhs(n0 - 1) = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  std::vector<double> pi(n0);
  for (int i = 0; i < n0; ++i) pi[i] = std::max(0.0, x(i));
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= total;
  return pi;
}

SteadyState assemble(const Generator& gen, std::vector<double> pi) {
  SteadyState out;
  const int np = gen.partial_count();
  out.partial_states.assign(pi.begin(), pi.begin() + np);
  out.full_states.assign(pi.begin() + np, pi.end());
  out.p_busy_all = std::accumulate(out.full_states.begin(), out.full_states.end(), 0.0);
  out.p_idle.assign(gen.servers, 0.0);
  for (std::uint32_t mask = 0; mask < static_cast<std::uint32_t>(np); ++mask) {
    for (int i = 0; i < gen.servers; ++i) {
      if ((mask & (1u << i)) == 0) out.p_idle[i] += out.partial_states[mask];
    }
  }
  out.residual = generator_residual(gen, pi);
  return out;
}

double max_exit_rate(const Generator& gen) {
  double scale = 1.0;
  for (int row = 0; row < gen.matrix.rows(); ++row) {
    scale = std::max(scale, std::abs(gen.matrix.coeff(row, row)));
  }
  return scale;
}

void check_residual(const Generator& gen, const SteadyState& ss) {
  const double tolerance = 1e-10 * max_exit_rate(gen);
  if (!(ss.residual <= tolerance)) {
    throw NumericalError("steady state: residual " + std::to_string(ss.residual) +
                             " exceeds tolerance",
                         ss.residual);
  }
}

}  // namespace

double QueueSpec::total_rate() const {
  return std::accumulate(service_rates.begin(), service_rates.end(), 0.0);
}

void QueueSpec::validate() const {
  if (service_rates.empty()) throw ValidationError("queue: at least one server required");
  if (service_rates.size() != selection_weights.size()) {
    throw ValidationError("queue: service_rates and selection_weights differ in length");
  }
  if (servers() > kMaxServers) {
    throw ValidationError("queue: more than 16 servers (state space too large)");
  }
  for (double mu : service_rates) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("queue: all mu_i > 0 violated");
  }
  for (double w : selection_weights) {
    if (!(w >= 1.0)) throw ValidationError("queue: all weights >= 1 violated");
  }
  if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) {
    throw ValidationError("queue: lambda >= 0 violated");
  }
  if (queue_truncation < 1) throw ValidationError("queue: Q_max >= 1 violated");
}

std::vector<double> SteadyState::distribution() const {
  std::vector<double> out = partial_states;
  out.insert(out.end(), full_states.begin(), full_states.end());
  return out;
}

Generator build_generator(const QueueSpec& spec) {
  spec.validate();
  Generator gen;
  gen.servers = spec.servers();
  gen.queue_truncation = spec.queue_truncation;
  gen.arrival_rate = spec.arrival_rate;
  gen.total_rate = spec.total_rate();

  const int c = gen.servers;
  const std::uint32_t all = gen.all_busy_mask();
  const double lambda = spec.arrival_rate;
  const int n = gen.size();

  auto state_of = [&](std::uint32_t mask) {
    return mask == all ? gen.full_index(0) : static_cast<int>(mask);
  };

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> exit_rate(n, 0.0);
  auto add = [&](int from, int to, double rate) {
    if (rate <= 0.0) return;
    trip.emplace_back(from, to, rate);
    exit_rate[from] += rate;
  };

  for (std::uint32_t mask = 0; mask < all; ++mask) {
    const int from = static_cast<int>(mask);
    double idle_weight = 0.0;
    for (int j = 0; j < c; ++j) {
      if ((mask & (1u << j)) == 0) idle_weight += spec.selection_weights[j];
    }
    for (int j = 0; j < c; ++j) {
      const std::uint32_t bit = 1u << j;
      if ((mask & bit) == 0) {
        add(from, state_of(mask | bit), lambda * spec.selection_weights[j] / idle_weight);
      } else {
        add(from, state_of(mask & ~bit), spec.service_rates[j]);
      }
    }
  }
  for (int j = 0; j < c; ++j) {
    add(gen.full_index(0), state_of(all & ~(1u << j)), spec.service_rates[j]);
  }
  for (int q = 0; q <= gen.queue_truncation; ++q) {
    if (q < gen.queue_truncation) add(gen.full_index(q), gen.full_index(q + 1), lambda);
    if (q >= 1) add(gen.full_index(q), gen.full_index(q - 1), gen.total_rate);
  }
  for (int s = 0; s < n; ++s) trip.emplace_back(s, s, -exit_rate[s]);

  gen.matrix.resize(n, n);
  gen.matrix.setFromTriplets(trip.begin(), trip.end());
  gen.matrix.makeCompressed();
  return gen;
}

double generator_residual(const Generator& gen, std::span<const double> pi) {
  std::vector<double> acc(static_cast<std::size_t>(gen.size()), 0.0);
  for (int row = 0; row < gen.matrix.rows(); ++row) {
    for (SparseRow::InnerIterator it(gen.matrix, row); it; ++it) {
      acc[it.col()] += pi[row] * it.value();
    }
  }
  double worst = 0.0;
  for (double v : acc) worst = std::max(worst, std::abs(v));
  return worst;
}

SteadyState solve_steady_state(const Generator& gen) {
  const int np = gen.partial_count();
  std::vector<double> pi(static_cast<std::size_t>(gen.size()), 0.0);

  if (gen.arrival_rate == 0.0) {
    pi[0] = 1.0;
    return assemble(gen, std::move(pi));
  }

  const std::vector<double> block = solve_empty_queue_block(gen);
  const double rho = gen.arrival_rate / gen.total_rate;
  const int qmax = gen.queue_truncation;

  // Tail: pi(all, q) = pi(all, 0) * rho^q. Work relative to the largest tail
  // term so rho > 1 cannot overflow.
  const double log_rho = std::log(rho);
  const double log_peak = rho > 1.0 ? qmax * log_rho : 0.0;
  std::vector<double> tail(static_cast<std::size_t>(qmax) + 1);
  double tail_sum = 0.0;
  for (int q = 0; q <= qmax; ++q) {
    tail[q] = std::exp(q * log_rho - log_peak);
    tail_sum += tail[q];
  }
  const double partial_sum = std::accumulate(block.begin(), block.begin() + np, 0.0);
  const double full0 = block[np];
  // Mass ratio tail/partial = full0 * exp(log_peak) * tail_sum / partial_sum.
  const double log_tail_mass = std::log(full0) + log_peak + std::log(tail_sum);
  const double log_partial_mass = std::log(partial_sum);
  const double log_norm = std::max(log_tail_mass, log_partial_mass) +
                          std::log1p(std::exp(-std::abs(log_tail_mass - log_partial_mass)));

  const double partial_scale = std::exp(-log_norm);
  for (int s = 0; s < np; ++s) pi[s] = block[s] * partial_scale;
  const double tail_scale = std::exp(std::log(full0) + log_peak - log_norm);
  for (int q = 0; q <= qmax; ++q) pi[np + q] = tail[q] * tail_scale;

  SteadyState ss = assemble(gen, std::move(pi));
  check_residual(gen, ss);
  return ss;
}

SteadyState solve_steady_state_dense(const Generator& gen) {
  const int n = gen.size();
  Eigen::MatrixXd m = Eigen::MatrixXd(gen.matrix).transpose();
  m.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd x = m.partialPivLu().solve(rhs);
  std::vector<double> pi(x.data(), x.data() + n);
  return assemble(gen, std::move(pi));
}

}  // namespace lwqos
