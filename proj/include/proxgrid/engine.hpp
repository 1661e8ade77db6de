#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "proxgrid/devices.hpp"
#include "proxgrid/network.hpp"
#include "proxgrid/types.hpp"

namespace proxgrid {

struct SolveConfig {
  double eps_abs = 1e-3;
  double rho0 = 1.0;
  double lambda = 0.005;  // rho controller proportional gain
  double mu = 0.01;       // rho controller derivative gain
  // rho clip range; non-positive values mean the defaults [eps_abs, 1/eps_abs]
  double rho_min = 0.0;
  double rho_max = 0.0;
  int max_iter = 5000;
  // rho is adapted up to this iteration and held constant afterwards, which
  // restores the plain convergence guarantee.
  int rho_freeze_iter = 1000;
  int threads = 1;
  bool deterministic = true;  // fixed reduction order (always on in this build)
  double prox_tol = kKktTol;
  bool collect_trace = true;

  double resolved_rho_min() const { return rho_min > 0 ? rho_min : eps_abs; }
  double resolved_rho_max() const { return rho_max > 0 ? rho_max : 1.0 / eps_abs; }
};

enum class SolveStatus { kConverged, kMaxIter, kProxFailure };

std::string to_string(SolveStatus status);

struct TraceRow {
  int k = 0;
  double rho = 0.0;
  double r_norm = 0.0;
  double s_norm = 0.0;
  double objective = 0.0;
  // Peer-to-peer extrapolation quantities: the slowest single device prox and
  // the whole averaging/price phase.
  double device_seconds_max = 0.0;
  double net_seconds = 0.0;
};

struct WarmStart {
  ScheduleMatrix p, u;
  double rho = 1.0;
};

struct Solution {
  ScheduleMatrix p;
  ScheduleMatrix u;  // final scaled duals (for warm starts)
  std::vector<PowerProfile> prices;
  double objective = 0.0;
  int iterations = 0;
  double rho_final = 0.0;
  SolveStatus status = SolveStatus::kMaxIter;
  std::vector<TraceRow> trace;
  std::string error;
};

struct IterationState {
  ScheduleMatrix p, u, pbar;
  ScheduleMatrix dev_prev;  // p - pbar of the previous iteration (dual residual)
  double rho = 1.0;
  double v_prev = 0.0;  // controller memory
  int k = 0;
};

double stop_threshold(const SolveConfig& config, const Network& network);
bool check_stop(double r_norm, double s_norm, const SolveConfig& config, const Network& network);

/// Prox-average sweep driver. Holds per-device workspaces (QP warm starts)
/// and the worker pool; one instance per solve sequence.
class Engine {
 public:
  Engine(const Network& network, const std::vector<DeviceSpec>& specs, SolveConfig config);
  ~Engine();

  IterationState& state();
  const SolveConfig& config() const;

  void init_cold();
  void init_warm(const WarmStart& init);

  /// One iteration: device prox phase (parallel over devices), barrier, net
  /// averaging + scaled price update (parallel over nets).
  void iterate();

  /// (||r||, ||s||) over all terminals and periods; refreshes the dual
  /// residual cache, so call exactly once per iterate().
  std::pair<double, double> residuals();

  /// Proportional-derivative rho update with price rescaling (rho u stays
  /// fixed). Caller must ensure s_norm > 0.
  void update_rho(double r_norm, double s_norm);

  double objective_value() const;
  std::vector<PowerProfile> prices() const;

  double last_device_seconds_max() const;
  double last_net_seconds() const;

  Solution solve(const WarmStart* init = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: validate, run to convergence or max_iter.
Solution solve(const Network& network, const std::vector<DeviceSpec>& specs,
               const SolveConfig& config, const WarmStart* init = nullptr);

/// Locational marginal prices from a raw state: for net n, rho * u_n / |n|.
std::vector<PowerProfile> prices(const IterationState& state, const Network& network);

}  // namespace proxgrid
