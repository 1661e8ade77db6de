#include "proxgrid/engine.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "proxgrid/kernels.hpp"
#include "thread_pool.hpp"

namespace proxgrid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Fixed pairwise-tree reduction: the result does not depend on how work was
// split across threads, which keeps traces bitwise reproducible.
double tree_sum(std::vector<double>& v) {
  size_t n = v.size();
  while (n > 1) {
    const size_t half = n / 2;
    for (size_t i = 0; i < half; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (n % 2 == 1) {
      v[half] = v[n - 1];
      n = half + 1;
    } else {
      n = half;
    }
  }
  return v.empty() ? 0.0 : v[0];
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kProxFailure: return "prox_failure";
  }
  return "?";
}

double stop_threshold(const SolveConfig& config, const Network& network) {
  return config.eps_abs * std::sqrt(static_cast<double>(network.num_terminals()) * network.horizon);
}

bool check_stop(double r_norm, double s_norm, const SolveConfig& config, const Network& network) {
  const double eps = stop_threshold(config, network);
  return r_norm <= eps && s_norm <= eps;
}

struct Engine::Impl {
  const Network& network;
  const std::vector<DeviceSpec>& specs;
  SolveConfig config;
  IterationState st;
  ThreadPool pool;

  std::vector<ProxWorkspace> workspaces;
  std::vector<std::vector<double>> vbuf;       // per-device prox argument rows
  std::vector<double> device_cost;             // per-device objective, fixed order
  std::vector<double> device_seconds;          // per-device prox wall time
  std::vector<double> row_scratch;             // per-terminal reduction inputs
  double device_seconds_max = 0.0;
  double net_seconds = 0.0;

  std::mutex failure_mutex;
  std::string failure;  // first prox failure message

  Impl(const Network& net, const std::vector<DeviceSpec>& sp, SolveConfig cfg)
      : network(net), specs(sp), config(cfg), pool(std::max(1, cfg.threads)) {
    auto report = validate(network);
    if (!report.ok())
      throw std::invalid_argument("engine: invalid network: " + report.violations.front());
    if (specs.size() != network.devices.size())
      throw std::invalid_argument("engine: spec count does not match device count");
    for (size_t d = 0; d < specs.size(); ++d) {
      if (auto err = check_params(specs[d], network.horizon))
        throw std::invalid_argument("engine: device " + std::to_string(d) + ": " + *err);
      if (terminal_count(specs[d]) != static_cast<int>(network.devices[d].terminals.size()))
        throw std::invalid_argument("engine: device " + std::to_string(d) +
                                    " terminal count does not match its spec");
    }
    const int T = network.horizon;
    const int nt = network.num_terminals();
    st.p = ScheduleMatrix(nt, T);
    st.u = ScheduleMatrix(nt, T);
    st.pbar = ScheduleMatrix(nt, T);
    st.dev_prev = ScheduleMatrix(nt, T);
    st.rho = config.rho0;
    workspaces.resize(specs.size());
    vbuf.resize(specs.size());
    for (size_t d = 0; d < specs.size(); ++d)
      vbuf[d].assign(network.devices[d].terminals.size() * static_cast<size_t>(T), 0.0);
    device_cost.assign(specs.size(), 0.0);
    device_seconds.assign(specs.size(), 0.0);
    row_scratch.assign(nt, 0.0);
  }

  void reset_caches() {
    net_average_into(st.p, network, st.pbar);
    const int T = network.horizon;
    for (int t = 0; t < network.num_terminals(); ++t) {
      const double* p = st.p.row(t);
      const double* pb = st.pbar.row(t);
      double* prev = st.dev_prev.row(t);
      for (int tau = 0; tau < T; ++tau) prev[tau] = p[tau] - pb[tau];
    }
    st.k = 0;
    st.v_prev = 0.0;
    failure.clear();
    refresh_costs();
  }

  void refresh_costs() {
    const int T = network.horizon;
    pool.parallel_for(static_cast<int>(specs.size()), [&](int d) {
      const double* rows[2];
      const auto& terms = network.devices[d].terminals;
      for (size_t i = 0; i < terms.size(); ++i) rows[i] = st.p.row(terms[i]);
      device_cost[d] = objective(specs[d], rows, T);
    });
  }

  void device_phase() {
    const int T = network.horizon;
    const auto& k = kernels::table();
    pool.parallel_for(static_cast<int>(specs.size()), [&](int d) {
      const auto& terms = network.devices[d].terminals;
      double* v = vbuf[d].data();
      const double* vrows[2];
      double* orows[2];
      for (size_t i = 0; i < terms.size(); ++i) {
        double* vrow = v + i * T;
        const int t = terms[i];
        k.sub3(vrow, st.p.row(t), st.pbar.row(t), st.u.row(t), T);
        vrows[i] = vrow;
        orows[i] = st.p.row(t);
      }
      const auto t0 = Clock::now();
      try {
        prox(specs[d], vrows, orows, T, st.rho, workspaces[d], config.prox_tol);
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        if (failure.empty()) failure = "device " + std::to_string(d) + ": " + e.what();
        return;
      }
      device_seconds[d] = seconds_since(t0);
      const double* rows[2];
      for (size_t i = 0; i < terms.size(); ++i) rows[i] = st.p.row(terms[i]);
      device_cost[d] = objective(specs[d], rows, T);
    });
    device_seconds_max = 0.0;
    for (double s : device_seconds) device_seconds_max = std::max(device_seconds_max, s);
  }

  void net_phase() {
    const int T = network.horizon;
    const auto t0 = Clock::now();
    const auto& k = kernels::table();
    pool.parallel_for(network.num_nets(), [&](int n) {
      const auto& terms = network.nets[n].terminals;
      double* first = st.pbar.row(terms[0]);
      k.scaled_copy(first, st.p.row(terms[0]), 1.0, T);
      for (size_t i = 1; i < terms.size(); ++i) k.acc(first, st.p.row(terms[i]), T);
      k.scale(first, 1.0 / static_cast<double>(terms.size()), T);
      for (size_t i = 1; i < terms.size(); ++i) k.scaled_copy(st.pbar.row(terms[i]), first, 1.0, T);
      for (int t : terms) k.acc(st.u.row(t), st.pbar.row(t), T);
    });
    net_seconds = seconds_since(t0);
  }

  std::pair<double, double> compute_residuals() {
    const int T = network.horizon;
    const int nt = network.num_terminals();
    const auto& k = kernels::table();
    pool.parallel_for(nt, [&](int t) { row_scratch[t] = k.sumsq(st.pbar.row(t), T); });
    std::vector<double> tmp(row_scratch);
    const double r_norm = std::sqrt(tree_sum(tmp));
    pool.parallel_for(
        nt, [&](int t) { row_scratch[t] = k.diff_update_sumsq(st.dev_prev.row(t), st.p.row(t), st.pbar.row(t), T); });
    tmp = row_scratch;
    const double s_norm = st.rho * std::sqrt(tree_sum(tmp));
    return {r_norm, s_norm};
  }

  void apply_rho_update(double r_norm, double s_norm) {
    const double v = st.rho * r_norm / s_norm - 1.0;
    const double lo = config.resolved_rho_min(), hi = config.resolved_rho_max();
    const double next = std::clamp(st.rho * std::exp(config.lambda * v + config.mu * (v - st.v_prev)), lo, hi);
    if (next != st.rho) {
      const double factor = st.rho / next;
      kernels::table().scale(st.u.data(), factor, static_cast<int>(st.u.size()));
      st.rho = next;
    }
    st.v_prev = v;
  }

  double objective_now() const {
    std::vector<double> tmp(device_cost);
    return tree_sum(tmp);
  }

  std::vector<PowerProfile> prices_now() const {
    std::vector<PowerProfile> out(network.num_nets());
    for (int n = 0; n < network.num_nets(); ++n) {
      const auto& terms = network.nets[n].terminals;
      const double scale = st.rho / static_cast<double>(terms.size());
      const double* u = st.u.row(terms[0]);
      out[n].resize(network.horizon);
      for (int tau = 0; tau < network.horizon; ++tau) out[n][tau] = scale * u[tau];
    }
    return out;
  }
};

Engine::Engine(const Network& network, const std::vector<DeviceSpec>& specs, SolveConfig config)
    : impl_(std::make_unique<Impl>(network, specs, config)) {}
Engine::~Engine() = default;

IterationState& Engine::state() { return impl_->st; }
const SolveConfig& Engine::config() const { return impl_->config; }

void Engine::init_cold() {
  impl_->st.p.fill(0.0);
  impl_->st.u.fill(0.0);
  impl_->st.rho = impl_->config.rho0;
  impl_->reset_caches();
}

void Engine::init_warm(const WarmStart& init) {
  const auto& net = impl_->network;
  if (init.p.rows() != net.num_terminals() || init.p.cols() != net.horizon ||
      init.u.rows() != net.num_terminals() || init.u.cols() != net.horizon)
    throw std::invalid_argument("warm start: schedule dimensions do not match the network");
  if (!(init.rho > 0)) throw std::invalid_argument("warm start: rho must be > 0");
  for (const auto& n : net.nets) {
    const double* ref = init.u.row(n.terminals[0]);
    for (size_t i = 1; i < n.terminals.size(); ++i) {
      const double* row = init.u.row(n.terminals[i]);
      for (int tau = 0; tau < net.horizon; ++tau)
        if (row[tau] != ref[tau])
          throw std::invalid_argument("warm start: dual rows differ within a net");
    }
  }
  impl_->st.p = init.p;
  impl_->st.u = init.u;
  impl_->st.rho = init.rho;
  impl_->reset_caches();
}

void Engine::iterate() {
  impl_->device_phase();
  if (!impl_->failure.empty()) throw ProxError(impl_->failure, 0.0);
  impl_->net_phase();
  ++impl_->st.k;
}

std::pair<double, double> Engine::residuals() { return impl_->compute_residuals(); }

void Engine::update_rho(double r_norm, double s_norm) { impl_->apply_rho_update(r_norm, s_norm); }

double Engine::objective_value() const { return impl_->objective_now(); }

std::vector<PowerProfile> Engine::prices() const { return impl_->prices_now(); }

double Engine::last_device_seconds_max() const { return impl_->device_seconds_max; }
double Engine::last_net_seconds() const { return impl_->net_seconds; }

Solution Engine::solve(const WarmStart* init) {
  auto& im = *impl_;
  Solution sol;
  if (init != nullptr)
    init_warm(*init);
  else
    init_cold();

  sol.status = SolveStatus::kMaxIter;
  for (int k = 1; k <= im.config.max_iter; ++k) {
    try {
      iterate();
    } catch (const ProxError& e) {
      sol.status = SolveStatus::kProxFailure;
      sol.error = e.what();
      break;
    }
    const double rho_used = im.st.rho;
    const auto [r_norm, s_norm] = residuals();
    if (!std::isfinite(r_norm) || !std::isfinite(s_norm)) {
      sol.status = SolveStatus::kProxFailure;
      sol.error = "non-finite residuals at iteration " + std::to_string(k);
      break;
    }
    if (im.config.collect_trace) {
      sol.trace.push_back({k, rho_used, r_norm, s_norm, im.objective_now(),
                           im.device_seconds_max, im.net_seconds});
    }
    if (check_stop(r_norm, s_norm, im.config, im.network)) {
      sol.status = SolveStatus::kConverged;
      break;
    }
    if (k <= im.config.rho_freeze_iter && s_norm > 0) im.apply_rho_update(r_norm, s_norm);
  }
  sol.p = im.st.p;
  sol.u = im.st.u;
  sol.rho_final = im.st.rho;
  sol.iterations = im.st.k;
  sol.objective = im.objective_now();
  sol.prices = im.prices_now();
  return sol;
}

Solution solve(const Network& network, const std::vector<DeviceSpec>& specs,
               const SolveConfig& config, const WarmStart* init) {
  Engine engine(network, specs, config);
  return engine.solve(init);
}

std::vector<PowerProfile> prices(const IterationState& state, const Network& network) {
  std::vector<PowerProfile> out(network.num_nets());
  for (int n = 0; n < network.num_nets(); ++n) {
    const auto& terms = network.nets[n].terminals;
    const double scale = state.rho / static_cast<double>(terms.size());
    const double* u = state.u.row(terms[0]);
    out[n].resize(network.horizon);
    for (int tau = 0; tau < network.horizon; ++tau) out[n][tau] = scale * u[tau];
  }
  return out;
}

}  // namespace proxgrid
