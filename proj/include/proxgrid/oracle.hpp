#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "proxgrid/devices.hpp"
#include "proxgrid/network.hpp"
#include "proxgrid/types.hpp"

namespace proxgrid::oracle {

/// Product grid over a small number of variables.
struct GridSpec {
  std::vector<std::pair<double, double>> ranges;  // per variable; size 1 broadcasts
  double step = 1e-3;
  long long budget = 100'000'000;  // hard cap on enumerated points
};

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

/// Exhaustive grid minimization of f(y) + (rho/2) ||v - y||^2. Accuracy is the
/// grid step. Throws when the grid exceeds the point budget.
std::vector<double> prox_oracle(const ObjectiveFn& objective, const std::vector<double>& v,
                                double rho, const GridSpec& grid);

/// Coarse-to-fine wrapper for convex objectives: each round enumerates
/// points_per_dim samples per variable and shrinks the ranges onto the
/// incumbent's neighboring cells. Valid because a convex function's grid
/// argmin is within one cell of the true minimizer.
std::vector<double> prox_oracle_refined(const ObjectiveFn& objective, const std::vector<double>& v,
                                        double rho, std::vector<std::pair<double, double>> ranges,
                                        int points_per_dim, int rounds);

struct BruteForceResult {
  ScheduleMatrix p;
  double objective = qp::kInf;
  bool feasible = false;
};

/// Ground truth for tiny instances: single net of single-terminal devices,
/// net balance enforced by eliminating the last-declared device's schedule,
/// everything else enumerated on the grid (ranges are per free variable,
/// devices-major then periods, or a single broadcast range).
BruteForceResult brute_force_solve(const Network& network, const std::vector<DeviceSpec>& specs,
                                   const GridSpec& grid);

/// Same elimination scheme, refined coarse-to-fine (convex instances).
BruteForceResult brute_force_refined(const Network& network, const std::vector<DeviceSpec>& specs,
                                     std::pair<double, double> range, int points_per_dim, int rounds);

enum class CentralStatus { kOptimal, kInfeasible, kSizeCap, kNotConverged };

struct CentralResult {
  CentralStatus status = CentralStatus::kNotConverged;
  ScheduleMatrix p;
  double objective = qp::kInf;
  std::vector<PowerProfile> prices;  // per net: balance-row dual / |n|
  double kkt_residual = qp::kInf;
  int cut_rounds = 0;  // lossy-line outer linearization passes
};

/// Monolithic sparse QP over all terminal schedules (fixed loads eliminated,
/// hinge terms via slacks, lossy-line hulls via iteratively tightened
/// supporting halfspaces). Assembled independently of the engine path; shares
/// only the QP kernel.
CentralResult centralized_solve(const Network& network, const std::vector<DeviceSpec>& specs,
                                double tol = 1e-9);

}  // namespace proxgrid::oracle
