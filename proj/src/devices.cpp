#include "proxgrid/devices.hpp"

#include <algorithm>
#include <cmath>

#include "proxgrid/kernels.hpp"

namespace proxgrid {

namespace {

constexpr double kInf = qp::kInf;

template <class... Ts>
struct Overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

bool profile_sized(const PowerProfile& p, int T) { return static_cast<int>(p.size()) == T; }

}  // namespace

int terminal_count(const DeviceSpec& spec) {
  return std::holds_alternative<LineParams>(spec) ? 2 : 1;
}

std::string kind_name(const DeviceSpec& spec) {
  return std::visit(Overload{
                        [](const GeneratorParams&) { return "generator"; },
                        [](const LineParams&) { return "transmission_line"; },
                        [](const BatteryParams&) { return "battery"; },
                        [](const FixedLoadParams&) { return "fixed_load"; },
                        [](const ThermalLoadParams&) { return "thermal_load"; },
                        [](const DeferrableLoadParams&) { return "deferrable_load"; },
                        [](const CurtailableLoadParams&) { return "curtailable_load"; },
                        [](const EvParams&) { return "electric_vehicle"; },
                        [](const ExternalTieParams&) { return "external_tie"; },
                    },
                    spec);
}

std::optional<std::string> check_params(const DeviceSpec& spec, int horizon) {
  const int T = horizon;
  if (T <= 0) return "horizon must be positive";
  return std::visit(
      Overload{
          [&](const GeneratorParams& g) -> std::optional<std::string> {
            if (!(g.p_max > 0)) return "generator: p_max must be > 0";
            if (g.p_min < 0 || g.p_min > g.p_max) return "generator: need 0 <= p_min <= p_max";
            if (g.ramp_min > 0 || g.ramp_max < 0) return "generator: need ramp_min <= 0 <= ramp_max";
            if (g.alpha < 0 || g.beta < 0) return "generator: cost coefficients must be >= 0";
            if (g.c_fixed < 0) return "generator: c_fixed must be >= 0";
            return std::nullopt;
          },
          [&](const LineParams& l) -> std::optional<std::string> {
            if (!(l.c_max > 0)) return "line: c_max must be > 0";
            if (l.lossless) {
              if (l.eps_cost < 0) return "line: eps_cost must be >= 0";
              return std::nullopt;
            }
            if (l.eps_cost != 0) return "line: eps_cost only valid on lossless lines";
            if (!(l.g > 0) || !(l.b > 0)) return "line: lossy line needs g > 0 and b > 0";
            if (std::isfinite(l.c_max) && l.b <= l.c_max / 2)
              return "line: need b > c_max/2 so the loss arc covers the capacity range";
            return std::nullopt;
          },
          [&](const BatteryParams& b) -> std::optional<std::string> {
            if (!(b.q_max > 0)) return "battery: q_max must be > 0";
            if (!profile_sized(b.c_max, T) || !profile_sized(b.d_max, T))
              return "battery: rate profiles must have length T";
            for (double x : b.c_max)
              if (x < 0) return "battery: c_max must be >= 0";
            for (double x : b.d_max)
              if (x < 0) return "battery: d_max must be >= 0";
            if (b.q_init < 0 || b.q_init > b.q_max) return "battery: q_init must lie in [0, q_max]";
            if (b.q_final && (*b.q_final < 0 || *b.q_final > b.q_max))
              return "battery: q_final must lie in [0, q_max]";
            return std::nullopt;
          },
          [&](const FixedLoadParams& f) -> std::optional<std::string> {
            if (!profile_sized(f.l, T)) return "fixed_load: profile must have length T";
            return std::nullopt;
          },
          [&](const ThermalLoadParams& t) -> std::optional<std::string> {
            if (!profile_sized(t.theta_min, T) || !profile_sized(t.theta_max, T) ||
                !profile_sized(t.theta_amb, T) || !profile_sized(t.h_max, T))
              return "thermal_load: profiles must have length T";
            for (int i = 0; i < T; ++i)
              if (t.theta_min[i] > t.theta_max[i]) return "thermal_load: need theta_min <= theta_max";
            for (double x : t.h_max)
              if (x < 0) return "thermal_load: h_max must be >= 0";
            if (!(t.c > 0)) return "thermal_load: heat capacity c must be > 0";
            if (!(t.eta > 0)) return "thermal_load: efficiency eta must be > 0";
            if (t.mu < 0) return "thermal_load: conduction mu must be >= 0";
            return std::nullopt;
          },
          [&](const DeferrableLoadParams& d) -> std::optional<std::string> {
            if (!(d.energy > 0)) return "deferrable_load: energy must be > 0";
            if (d.start < 1 || d.start > d.end || d.end > T)
              return "deferrable_load: need 1 <= start <= end <= T";
            if (!(d.l_max > 0)) return "deferrable_load: l_max must be > 0";
            if (d.l_max * (d.end - d.start + 1) < d.energy)
              return "deferrable_load: window cannot absorb the required energy";
            return std::nullopt;
          },
          [&](const CurtailableLoadParams& c) -> std::optional<std::string> {
            if (!profile_sized(c.l, T)) return "curtailable_load: profile must have length T";
            if (!(c.alpha > 0)) return "curtailable_load: alpha must be > 0";
            return std::nullopt;
          },
          [&](const EvParams& e) -> std::optional<std::string> {
            if (e.start < 1 || e.start > e.end || e.end > T)
              return "electric_vehicle: need 1 <= start <= end <= T";
            if (!profile_sized(e.c_max, T) || !profile_sized(e.c_des, T))
              return "electric_vehicle: profiles must have length T";
            for (double x : e.c_max)
              if (x < 0) return "electric_vehicle: c_max must be >= 0";
            for (int i = 0; i < T; ++i)
              if ((i + 1 < e.start || i + 1 > e.end) && e.c_des[i] != 0)
                return "electric_vehicle: c_des must be zero outside the window";
            if (e.q_init < 0) return "electric_vehicle: q_init must be >= 0";
            if (!(e.alpha > 0)) return "electric_vehicle: alpha must be > 0";
            return std::nullopt;
          },
          [&](const ExternalTieParams& x) -> std::optional<std::string> {
            if (!profile_sized(x.e_max, T) || !profile_sized(x.c, T) || !profile_sized(x.gamma, T))
              return "external_tie: profiles must have length T";
            for (double e : x.e_max)
              if (e < 0) return "external_tie: e_max must be >= 0";
            for (double g : x.gamma)
              if (!(g > 0)) return "external_tie: gamma must be > 0";
            return std::nullopt;
          },
      },
      spec);
}

double GeneratorEnvelope::operator()(double u) const {
  if (u <= p_c) return slope * u;
  return alpha * u * u + beta * u + c_fixed;
}

GeneratorEnvelope generator_envelope(const GeneratorParams& params) {
  if (!(params.p_max > 0)) throw std::invalid_argument("generator_envelope: p_max must be > 0");
  GeneratorEnvelope env;
  env.alpha = params.alpha;
  env.beta = params.beta;
  env.c_fixed = params.c_fixed;
  env.p_max = params.p_max;
  // Tangency point of the line through the origin: u = sqrt(c_fixed/alpha),
  // clipped to the on-range. With alpha = 0 the tangency recedes to infinity,
  // so the envelope is the chord to (p_max, cost(p_max)) whenever c_fixed > 0.
  if (params.alpha > 0) {
    env.p_c = std::clamp(std::sqrt(params.c_fixed / params.alpha), params.p_min, params.p_max);
  } else {
    env.p_c = params.c_fixed > 0 ? params.p_max : params.p_min;
  }
  const double qc = params.alpha * env.p_c * env.p_c + params.beta * env.p_c + params.c_fixed;
  env.slope = env.p_c > 0 ? qc / env.p_c : params.beta;
  return env;
}

qp::LineHull line_hull(const LineParams& params) {
  qp::LineHull hull;
  hull.half_cap = params.c_max / 2.0;
  hull.lossless = params.lossless;
  hull.g = params.g;
  hull.b = params.b;
  return hull;
}

qp::Point2 line_hull_project(double v1, double v2, const LineParams& params, double rho) {
  (void)rho;
  return qp::project_convex_region_2d(v1, v2, line_hull(params));
}

// ---------------------------------------------------------------------------
// objective
// ---------------------------------------------------------------------------

namespace {

double generator_objective(const GeneratorParams& g, const double* p, int T) {
  const double lo = g.switchable ? 0.0 : g.p_min;
  double cost = 0.0;
  GeneratorEnvelope env;
  const bool use_env = g.switchable && (g.c_fixed > 0 || g.p_min > 0);
  if (use_env) env = generator_envelope(g);
  for (int t = 0; t < T; ++t) {
    const double u = -p[t];
    if (u < lo - kFeasTol || u > g.p_max + kFeasTol) return kInf;
    if (t + 1 < T) {
      const double du = -p[t + 1] + p[t];
      if (du < g.ramp_min - kFeasTol || du > g.ramp_max + kFeasTol) return kInf;
    }
    cost += use_env ? env(u) : g.alpha * u * u + g.beta * u;
  }
  return cost;
}

double line_objective(const LineParams& l, const double* p1, const double* p2, int T) {
  const qp::LineHull hull = line_hull(l);
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const double f = 0.5 * (p1[t] - p2[t]);
    const double s = p1[t] + p2[t];
    if (std::abs(p1[t] - p2[t]) > l.c_max + kFeasTol) return kInf;
    if (l.lossless) {
      if (std::abs(s) > kFeasTol) return kInf;
      cost += l.eps_cost * (p1[t] * p1[t] + p2[t] * p2[t]);
    } else {
      if (s < hull.arc(f) - kFeasTol) return kInf;
    }
  }
  return cost;
}

double battery_objective(const BatteryParams& b, const double* p, int T) {
  double q = b.q_init;
  for (int t = 0; t < T; ++t) {
    if (p[t] < -b.d_max[t] - kFeasTol || p[t] > b.c_max[t] + kFeasTol) return kInf;
    q += p[t];
    if (q < -kFeasTol || q > b.q_max + kFeasTol) return kInf;
  }
  if (b.q_final && std::abs(q - *b.q_final) > kFeasTol) return kInf;
  return 0.0;
}

double thermal_objective(const ThermalLoadParams& th, const double* p, int T) {
  const double phi = 1.0 - th.mu / th.c;
  double theta = th.theta_init;
  for (int t = 0; t < T; ++t) {
    if (p[t] < -kFeasTol || p[t] > th.h_max[t] + kFeasTol) return kInf;
    if (t + 1 < T) {
      theta = phi * theta + (th.mu / th.c) * th.theta_amb[t] - (th.eta / th.c) * p[t];
      if (theta < th.theta_min[t + 1] - kFeasTol || theta > th.theta_max[t + 1] + kFeasTol) return kInf;
    }
  }
  return 0.0;
}

double deferrable_objective(const DeferrableLoadParams& d, const double* p, int T) {
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const bool inside = (t + 1 >= d.start && t + 1 <= d.end);
    if (!inside && std::abs(p[t]) > kFeasTol) return kInf;
    if (inside) {
      if (p[t] < -kFeasTol || p[t] > d.l_max + kFeasTol) return kInf;
      total += p[t];
    }
  }
  if (total < d.energy - kFeasTol * std::max(1.0, d.energy)) return kInf;
  return 0.0;
}

double ev_objective(const EvParams& e, const double* p, int T) {
  double cost = 0.0;
  double q = e.q_init;
  for (int t = 0; t < T; ++t) {
    const bool inside = (t + 1 >= e.start && t + 1 <= e.end);
    if (!inside) {
      if (std::abs(p[t]) > kFeasTol) return kInf;
      continue;
    }
    if (p[t] < -kFeasTol || p[t] > e.c_max[t] + kFeasTol) return kInf;
    q += p[t];
    cost += e.alpha * std::max(e.c_des[t] - q, 0.0);
  }
  return cost;
}

double tie_objective(const ExternalTieParams& x, const double* p, int T) {
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    if (std::abs(p[t]) > x.e_max[t] + kFeasTol) return kInf;
    cost += -x.c[t] * p[t] + x.gamma[t] * std::abs(p[t]);
  }
  return cost;
}

}  // namespace

double objective(const DeviceSpec& spec, const double* const* rows, int horizon) {
  const int T = horizon;
  return std::visit(
      Overload{
          [&](const GeneratorParams& g) { return generator_objective(g, rows[0], T); },
          [&](const LineParams& l) { return line_objective(l, rows[0], rows[1], T); },
          [&](const BatteryParams& b) { return battery_objective(b, rows[0], T); },
          [&](const FixedLoadParams& f) {
            for (int t = 0; t < T; ++t)
              if (std::abs(rows[0][t] - f.l[t]) > kFeasTol) return kInf;
            return 0.0;
          },
          [&](const ThermalLoadParams& th) { return thermal_objective(th, rows[0], T); },
          [&](const DeferrableLoadParams& d) { return deferrable_objective(d, rows[0], T); },
          [&](const CurtailableLoadParams& c) {
            double cost = 0.0;
            for (int t = 0; t < T; ++t) cost += c.alpha * std::max(c.l[t] - rows[0][t], 0.0);
            return cost;
          },
          [&](const EvParams& e) { return ev_objective(e, rows[0], T); },
          [&](const ExternalTieParams& x) { return tie_objective(x, rows[0], T); },
      },
      spec);
}

double objective(const DeviceSpec& spec, const std::vector<PowerProfile>& rows) {
  if (static_cast<int>(rows.size()) != terminal_count(spec))
    throw std::invalid_argument("objective: row count does not match device terminals");
  const int T = static_cast<int>(rows[0].size());
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != T) throw std::invalid_argument("objective: ragged rows");
  std::vector<const double*> ptrs;
  ptrs.reserve(rows.size());
  for (const auto& r : rows) ptrs.push_back(r.data());
  return objective(spec, ptrs.data(), T);
}

// ---------------------------------------------------------------------------
// prox
// ---------------------------------------------------------------------------

struct ProxWorkspace::State {
  int kind = -1;
  int horizon = 0;
  double rho = -1.0;  // value the QP assembly currently reflects
  std::optional<qp::QpSolver> solver;
  std::vector<double> buf;  // per-kind constants (e.g. thermal row offsets)
};

ProxWorkspace::ProxWorkspace() : state_(std::make_unique<State>()) {}
ProxWorkspace::~ProxWorkspace() = default;
ProxWorkspace::ProxWorkspace(ProxWorkspace&&) noexcept = default;
ProxWorkspace& ProxWorkspace::operator=(ProxWorkspace&&) noexcept = default;

namespace {

qp::QpOptions device_qp_options(double tol) {
  qp::QpOptions opts;
  opts.tol = tol;
  opts.max_iter = 100;
  opts.validate_psd = false;  // assembled PSD by construction
  opts.use_sparse_kkt = false;
  return opts;
}

void run_device_qp(qp::QpSolver& solver, std::vector<double>& x_out, const std::string& what) {
  qp::QpResult res = solver.solve();
  if (res.status != qp::QpStatus::kOptimal)
    throw ProxError(what + " prox: inner QP did not converge (residual " +
                        std::to_string(res.kkt_residual) + ")",
                    res.kkt_residual);
  x_out = std::move(res.x);
}

// --- generator ---

void generator_prox(const GeneratorParams& g, const double* const* v, double* const* out, int T,
                    double rho, ProxWorkspace::State& st, double tol) {
  // Relaxed per-period cost: the quadratic itself when already convex over
  // the domain, the envelope's single chord when the tangency clips at p_max,
  // and the two-piece split (chord + shifted quadratic) in between.
  const bool use_env = g.switchable && (g.c_fixed > 0 || g.p_min > 0);
  GeneratorEnvelope env;
  if (use_env) env = generator_envelope(g);
  enum class Mode { kQuad, kLinear, kSplit };
  const Mode mode = !use_env ? Mode::kQuad : (env.p_c >= g.p_max ? Mode::kLinear : Mode::kSplit);

  if (!st.solver) {
    const bool split = mode == Mode::kSplit;
    const int n = split ? 2 * T : T;
    const int m = (split ? 2 * T : T) + std::max(0, T - 1);
    qp::QpProblem prob = qp::QpProblem::make(n, m);
    int r = 0;
    if (!split) {
      const double lo = g.switchable ? 0.0 : g.p_min;
      const double qdiag = (mode == Mode::kQuad ? 2 * g.alpha : 0.0) + rho;
      for (int t = 0; t < T; ++t) {
        prob.Q.add(t, t, qdiag);
        prob.A.add(r, t, 1.0);
        prob.lo[r] = lo;
        prob.hi[r] = g.p_max;
        ++r;
      }
      for (int t = 0; t + 1 < T; ++t) {
        prob.A.add(r, t, -1.0);
        prob.A.add(r, t + 1, 1.0);
        prob.lo[r] = g.ramp_min;
        prob.hi[r] = g.ramp_max;
        ++r;
      }
    } else {
      // Interleaved variables [u(1), w(1), u(2), w(2), ...] where w is the
      // quadratic-piece part of the split u = (u - w) + w.
      for (int t = 0; t < T; ++t) {
        prob.Q.add(2 * t, 2 * t, rho);
        prob.Q.add(2 * t + 1, 2 * t + 1, 2 * g.alpha);
        prob.A.add(r, 2 * t, 1.0);  // u - w in [0, p_c]
        prob.A.add(r, 2 * t + 1, -1.0);
        prob.lo[r] = 0.0;
        prob.hi[r] = env.p_c;
        ++r;
        prob.A.add(r, 2 * t + 1, 1.0);  // w in [0, p_max - p_c]
        prob.lo[r] = 0.0;
        prob.hi[r] = g.p_max - env.p_c;
        ++r;
      }
      for (int t = 0; t + 1 < T; ++t) {
        prob.A.add(r, 2 * t, -1.0);
        prob.A.add(r, 2 * (t + 1), 1.0);
        prob.lo[r] = g.ramp_min;
        prob.hi[r] = g.ramp_max;
        ++r;
      }
    }
    st.solver.emplace(std::move(prob), device_qp_options(tol));
    st.rho = rho;
  }
  auto& solver = *st.solver;
  if (rho != st.rho) {
    auto& Q = solver.mutable_Q();
    if (mode == Mode::kQuad) {
      for (int t = 0; t < T; ++t) Q.mutable_row(t)[0].second = 2 * g.alpha + rho;
    } else if (mode == Mode::kLinear) {
      for (int t = 0; t < T; ++t) Q.mutable_row(t)[0].second = rho;
    } else {
      for (int t = 0; t < T; ++t) Q.mutable_row(2 * t)[0].second = rho;
    }
    st.rho = rho;
  }
  auto& q = solver.mutable_q();
  switch (mode) {
    case Mode::kQuad:
      for (int t = 0; t < T; ++t) q[t] = g.beta + rho * v[0][t];
      break;
    case Mode::kLinear:
      for (int t = 0; t < T; ++t) q[t] = env.slope + rho * v[0][t];
      break;
    case Mode::kSplit: {
      const double w_lin = 2 * g.alpha * env.p_c + g.beta - env.slope;
      for (int t = 0; t < T; ++t) {
        q[2 * t] = env.slope + rho * v[0][t];
        q[2 * t + 1] = w_lin;
      }
      break;
    }
  }
  std::vector<double> x;
  run_device_qp(solver, x, "generator");
  const int stride = mode == Mode::kSplit ? 2 : 1;
  for (int t = 0; t < T; ++t) out[0][t] = -x[stride * t];
}

// --- battery (pure projection; assembled at unit weight, rho-free) ---

void battery_prox(const BatteryParams& b, const double* const* v, double* const* out, int T,
                  ProxWorkspace::State& st, double tol) {
  if (!st.solver) {
    const int m = 2 * T + (b.q_final ? 1 : 0);
    qp::QpProblem prob = qp::QpProblem::make(T, m);
    // charge variables q(1..T); p(t) = q(t) - q(t-1), q(0) = q_init
    for (int t = 0; t < T; ++t) {
      prob.Q.add(t, t, t + 1 < T ? 2.0 : 1.0);
      if (t + 1 < T) {
        prob.Q.add(t, t + 1, -1.0);
        prob.Q.add(t + 1, t, -1.0);
      }
    }
    int r = 0;
    for (int t = 0; t < T; ++t) {  // capacity 0 <= q <= q_max
      prob.A.add(r, t, 1.0);
      prob.lo[r] = 0.0;
      prob.hi[r] = b.q_max;
      ++r;
    }
    for (int t = 0; t < T; ++t) {  // rate -d_max <= p <= c_max
      prob.A.add(r, t, 1.0);
      if (t > 0) prob.A.add(r, t - 1, -1.0);
      prob.lo[r] = -b.d_max[t] + (t == 0 ? b.q_init : 0.0);
      prob.hi[r] = b.c_max[t] + (t == 0 ? b.q_init : 0.0);
      ++r;
    }
    if (b.q_final) {
      prob.A.add(r, T - 1, 1.0);
      prob.lo[r] = *b.q_final;
      prob.hi[r] = *b.q_final;
      ++r;
    }
    st.solver.emplace(std::move(prob), device_qp_options(tol));
  }
  auto& solver = *st.solver;
  auto& q = solver.mutable_q();
  // linear term of 1/2 sum (q(t) - q(t-1) - v(t))^2
  for (int t = 0; t < T; ++t) {
    const double target = v[0][t] + (t == 0 ? b.q_init : 0.0);
    q[t] = -target;
    if (t > 0) q[t - 1] += target;
  }
  std::vector<double> x;
  run_device_qp(solver, x, "battery");
  out[0][0] = x[0] - b.q_init;
  for (int t = 1; t < T; ++t) out[0][t] = x[t] - x[t - 1];
}

// --- thermal load (projection in temperature space) ---

void thermal_prox(const ThermalLoadParams& th, const double* const* v, double* const* out, int T,
                  ProxWorkspace::State& st, double tol) {
  const auto& k = kernels::table();
  if (T == 1) {
    k.clamp(out[0], v[0], 0.0, th.h_max[0], 1);
    return;
  }
  const double phi = 1.0 - th.mu / th.c;
  const double kappa = th.c / th.eta;
  // Variables theta(2..T) at index j-2; p(t) = kappa*(phi*theta(t) +
  // (mu/c)*theta_amb(t) - theta(t+1)) for t = 1..T-1; p(T) decouples.
  if (!st.solver) {
    const int n = T - 1;
    const int m = 2 * (T - 1);
    qp::QpProblem prob = qp::QpProblem::make(n, m);
    st.buf.assign(T - 1, 0.0);  // additive constants of each p row
    int r = 0;
    for (int t = 1; t <= T - 1; ++t) {
      const double cst = kappa * (th.mu / th.c) * th.theta_amb[t - 1] +
                         (t == 1 ? kappa * phi * th.theta_init : 0.0);
      st.buf[t - 1] = cst;
      // quadratic: rows of p enter Q with unit weight
      const int i_next = t - 1;            // theta(t+1) index
      const int i_cur = t - 2;             // theta(t) index, t >= 2
      prob.Q.add(i_next, i_next, kappa * kappa);
      if (t >= 2) {
        prob.Q.add(i_cur, i_cur, kappa * kappa * phi * phi);
        prob.Q.add(i_cur, i_next, -kappa * kappa * phi);
        prob.Q.add(i_next, i_cur, -kappa * kappa * phi);
      }
      // power bounds 0 <= p <= h_max
      prob.A.add(r, i_next, -kappa);
      if (t >= 2) prob.A.add(r, i_cur, kappa * phi);
      prob.lo[r] = 0.0 - cst;
      prob.hi[r] = th.h_max[t - 1] - cst;
      ++r;
    }
    for (int j = 2; j <= T; ++j) {  // temperature bounds
      prob.A.add(r, j - 2, 1.0);
      prob.lo[r] = th.theta_min[j - 1];
      prob.hi[r] = th.theta_max[j - 1];
      ++r;
    }
    st.solver.emplace(std::move(prob), device_qp_options(tol));
  }
  auto& solver = *st.solver;
  auto& q = solver.mutable_q();
  std::fill(q.begin(), q.end(), 0.0);
  for (int t = 1; t <= T - 1; ++t) {
    const double target = v[0][t - 1] - st.buf[t - 1];
    q[t - 1] += -target * (-kappa);
    if (t >= 2) q[t - 2] += -target * (kappa * phi);
  }
  std::vector<double> x;
  run_device_qp(solver, x, "thermal_load");
  for (int t = 1; t <= T - 1; ++t) {
    double p = st.buf[t - 1] - kappa * x[t - 1];
    if (t >= 2) p += kappa * phi * x[t - 2];
    out[0][t - 1] = p;
  }
  k.clamp(out[0] + (T - 1), v[0] + (T - 1), 0.0, th.h_max[T - 1], 1);
}

// --- electric vehicle (QP with shortfall slacks, charge-space) ---

void ev_prox(const EvParams& e, const double* const* v, double* const* out, int T, double rho,
             ProxWorkspace::State& st, double tol) {
  const int a = e.start - 1, d = e.end - 1;  // 0-based window
  const int W = d - a + 1;
  if (!st.solver) {
    // Interleaved [q(a), s(a), q(a+1), s(a+1), ...]; p(t) = q(t) - q(t-1).
    const int n = 2 * W;
    const int m = 3 * W;
    qp::QpProblem prob = qp::QpProblem::make(n, m);
    int r = 0;
    for (int i = 0; i < W; ++i) {
      prob.Q.add(2 * i, 2 * i, i + 1 < W ? 2.0 : 1.0);
      if (i + 1 < W) {
        prob.Q.add(2 * i, 2 * (i + 1), -1.0);
        prob.Q.add(2 * (i + 1), 2 * i, -1.0);
      }
      // rate: 0 <= p <= c_max
      prob.A.add(r, 2 * i, 1.0);
      if (i > 0) prob.A.add(r, 2 * (i - 1), -1.0);
      prob.lo[r] = 0.0 + (i == 0 ? e.q_init : 0.0);
      prob.hi[r] = e.c_max[a + i] + (i == 0 ? e.q_init : 0.0);
      ++r;
      // shortfall slack s >= 0, s + q >= c_des
      prob.A.add(r, 2 * i + 1, 1.0);
      prob.lo[r] = 0.0;
      ++r;
      prob.A.add(r, 2 * i + 1, 1.0);
      prob.A.add(r, 2 * i, 1.0);
      prob.lo[r] = e.c_des[a + i];
      ++r;
    }
    st.solver.emplace(std::move(prob), device_qp_options(tol));
  }
  auto& solver = *st.solver;
  auto& q = solver.mutable_q();
  // objective scaled by 1/rho: (alpha/rho) sum s + 1/2 sum (p - v)^2
  for (int i = 0; i < W; ++i) {
    const double target = v[0][a + i] + (i == 0 ? e.q_init : 0.0);
    q[2 * i] = -target;
    if (i > 0) q[2 * (i - 1)] += target;
    q[2 * i + 1] = e.alpha / rho;
  }
  std::vector<double> x;
  run_device_qp(solver, x, "electric_vehicle");
  for (int t = 0; t < T; ++t) out[0][t] = 0.0;
  out[0][a] = x[0] - e.q_init;
  for (int i = 1; i < W; ++i) out[0][a + i] = x[2 * i] - x[2 * (i - 1)];
}

}  // namespace

void prox(const DeviceSpec& spec, const double* const* v, double* const* out, int horizon,
          double rho, ProxWorkspace& ws, double tol) {
  if (!(rho > 0)) throw std::invalid_argument("prox: rho must be > 0");
  const int T = horizon;
  auto& st = *ws.state();
  if (st.kind >= 0 && (st.kind != static_cast<int>(spec.index()) || st.horizon != T))
    throw std::logic_error("prox: workspace reused with a different spec shape");
  st.kind = static_cast<int>(spec.index());
  st.horizon = T;
  if (auto err = check_params(spec, T)) throw std::invalid_argument("prox: " + *err);
  const auto& k = kernels::table();

  std::visit(
      Overload{
          [&](const GeneratorParams& g) { generator_prox(g, v, out, T, rho, st, tol); },
          [&](const LineParams& l) {
            if (l.lossless) {
              const double gain = rho / (4.0 * l.eps_cost + 2.0 * rho);
              k.line_flow_prox(out[0], out[1], v[0], v[1], gain, l.c_max / 2.0, T);
            } else {
              const qp::LineHull hull = line_hull(l);
              for (int t = 0; t < T; ++t) {
                const qp::Point2 p = qp::project_convex_region_2d(v[0][t], v[1][t], hull);
                out[0][t] = p.p1;
                out[1][t] = p.p2;
              }
            }
          },
          [&](const BatteryParams& b) { battery_prox(b, v, out, T, st, tol); },
          [&](const FixedLoadParams& f) {
            for (int t = 0; t < T; ++t) out[0][t] = f.l[t];
          },
          [&](const ThermalLoadParams& th) { thermal_prox(th, v, out, T, st, tol); },
          [&](const DeferrableLoadParams& d) {
            const int a = d.start - 1, e = d.end - 1;
            const int W = e - a + 1;
            std::vector<double> vw(v[0] + a, v[0] + e + 1);
            std::vector<double> lo(W, 0.0), hi(W, d.l_max);
            std::vector<double> x = qp::project_box_halfspace(vw, lo, hi, d.energy);
            for (int t = 0; t < T; ++t) out[0][t] = 0.0;
            for (int i = 0; i < W; ++i) out[0][a + i] = x[i];
          },
          [&](const CurtailableLoadParams& c) {
            k.curtail_prox(out[0], v[0], c.l.data(), c.alpha / rho, T);
          },
          [&](const EvParams& e) { ev_prox(e, v, out, T, rho, st, tol); },
          [&](const ExternalTieParams& x) {
            k.tie_prox(out[0], v[0], x.c.data(), x.gamma.data(), x.e_max.data(), 1.0 / rho, T);
          },
      },
      spec);
}

std::vector<PowerProfile> prox(const DeviceSpec& spec, const std::vector<PowerProfile>& v,
                               double rho, double tol) {
  const int nt = terminal_count(spec);
  if (static_cast<int>(v.size()) != nt)
    throw std::invalid_argument("prox: row count does not match device terminals");
  const int T = static_cast<int>(v[0].size());
  std::vector<PowerProfile> out(nt, PowerProfile(T, 0.0));
  std::vector<const double*> vp;
  std::vector<double*> op;
  for (int i = 0; i < nt; ++i) {
    vp.push_back(v[i].data());
    op.push_back(out[i].data());
  }
  ProxWorkspace ws;
  prox(spec, vp.data(), op.data(), T, rho, ws, tol);
  return out;
}

}  // namespace proxgrid
