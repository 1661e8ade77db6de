#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "proxgrid/qp.hpp"
#include "proxgrid/types.hpp"

namespace proxgrid {

// Power sign convention: schedules are consumption-positive (a generator
// producing u has terminal power p = -u).

struct GeneratorParams {
  double p_min = 0.0;  // production range [p_min, p_max] while on
  double p_max = 0.0;
  double ramp_min = 0.0;  // per-period production change bounds, ramp_min <= 0 <= ramp_max
  double ramp_max = 0.0;
  double alpha = 0.0;  // production cost alpha u^2 + beta u
  double beta = 0.0;
  bool switchable = false;  // may be off (u = 0); relaxed via the convex envelope
  double c_fixed = 0.0;     // fixed on-cost, enters the envelope only
};

struct LineParams {
  double c_max = qp::kInf;  // flow capacity: |p1 - p2| <= c_max
  bool lossless = true;
  double g = 0.0, b = 0.0;  // series admittance g - ib; loss arc for lossy lines
  // Small quadratic cost eps (p1^2 + p2^2) used by calibration pre-solves;
  // only valid on lossless lines.
  double eps_cost = 0.0;
};

struct BatteryParams {
  double q_max = 0.0;           // energy capacity
  PowerProfile c_max, d_max;    // per-period charge / discharge rate limits
  double q_init = 0.0;
  std::optional<double> q_final;  // optional terminal charge target
};

struct FixedLoadParams {
  PowerProfile l;
};

struct ThermalLoadParams {
  PowerProfile theta_min, theta_max, theta_amb;
  double theta_init = 0.0;
  double mu = 0.0;   // ambient conduction coefficient
  double eta = 0.0;  // cooling efficiency
  double c = 1.0;    // heat capacity
  PowerProfile h_max;
};

struct DeferrableLoadParams {
  double energy = 0.0;     // minimum total consumption over the window
  int start = 1, end = 1;  // window [A, D], 1-based inclusive
  double l_max = 0.0;
};

struct CurtailableLoadParams {
  PowerProfile l;
  double alpha = 1.0;  // linear shortfall penalty
};

struct EvParams {
  int start = 1, end = 1;  // charging window [A, D]
  PowerProfile c_max;
  double q_init = 0.0;
  PowerProfile c_des;  // desired charge level; zero outside the window
  double alpha = 1.0;
};

struct ExternalTieParams {
  PowerProfile e_max;  // transaction limit |p| <= e_max
  PowerProfile c;      // midpoint price
  PowerProfile gamma;  // half-spread (transaction cost), > 0
};

using DeviceSpec = std::variant<GeneratorParams, LineParams, BatteryParams, FixedLoadParams,
                                ThermalLoadParams, DeferrableLoadParams, CurtailableLoadParams,
                                EvParams, ExternalTieParams>;

inline constexpr double kFeasTol = 1e-6;  // objective finiteness tolerance
inline constexpr double kKktTol = 1e-8;   // prox inner tolerance

int terminal_count(const DeviceSpec& spec);
std::string kind_name(const DeviceSpec& spec);

/// First violated parameter bound, or nullopt when the record is valid for
/// the given horizon.
std::optional<std::string> check_params(const DeviceSpec& spec, int horizon);

/// Extended-real relaxed objective: finite iff the rows are realizable for
/// the relaxed device within kFeasTol.
double objective(const DeviceSpec& spec, const double* const* rows, int horizon);
double objective(const DeviceSpec& spec, const std::vector<PowerProfile>& rows);

/// Relaxed per-period production cost of a switchable generator: a linear
/// segment through the origin up to p_c, then the quadratic
/// alpha u^2 + beta u + c_fixed on [p_c, p_max].
struct GeneratorEnvelope {
  double p_c = 0.0;
  double slope = 0.0;
  double alpha = 0.0, beta = 0.0, c_fixed = 0.0;
  double p_max = 0.0;
  double operator()(double u) const;
};
GeneratorEnvelope generator_envelope(const GeneratorParams& params);

qp::LineHull line_hull(const LineParams& params);

/// Per-period projection of (v1, v2) onto the relaxed line set. rho is unused
/// for zero-cost lines (the prox of an indicator is a plain projection) and
/// kept for interface uniformity.
qp::Point2 line_hull_project(double v1, double v2, const LineParams& params, double rho);

struct ProxError : std::runtime_error {
  ProxError(const std::string& msg, double resid) : std::runtime_error(msg), residual(resid) {}
  double residual;
};

/// Per-device solver state: QP pattern, factorization workspace, and the
/// previous solution used to warm start. Build one per device and reuse it;
/// confine each instance to one thread at a time.
class ProxWorkspace {
 public:
  ProxWorkspace();
  ~ProxWorkspace();
  ProxWorkspace(ProxWorkspace&&) noexcept;
  ProxWorkspace& operator=(ProxWorkspace&&) noexcept;

  struct State;
  State* state() { return state_.get(); }

 private:
  std::unique_ptr<State> state_;
};

/// y = argmin f(y) + (rho/2) ||v - y||^2 for the relaxed device objective.
/// v/out are arrays of terminal_count(spec) row pointers, each row `horizon`
/// long. Throws ProxError when an inner solve misses `tol`.
void prox(const DeviceSpec& spec, const double* const* v, double* const* out, int horizon,
          double rho, ProxWorkspace& ws, double tol = kKktTol);

/// Convenience overload for tests.
std::vector<PowerProfile> prox(const DeviceSpec& spec, const std::vector<PowerProfile>& v,
                               double rho, double tol = kKktTol);

}  // namespace proxgrid
