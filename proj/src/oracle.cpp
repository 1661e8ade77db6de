#include "proxgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proxgrid/qp.hpp"

namespace proxgrid::oracle {

namespace {

std::vector<std::pair<double, double>> broadcast_ranges(
    const std::vector<std::pair<double, double>>& in, size_t dims) {
  if (in.size() == dims) return in;
  if (in.size() == 1) return std::vector<std::pair<double, double>>(dims, in[0]);
  throw std::invalid_argument("grid: ranges must have one entry or one per variable");
}

// Mixed-radix enumeration over the product grid; calls fn(point).
template <typename Fn>
void enumerate_grid(const std::vector<std::pair<double, double>>& ranges, double step,
                    long long budget, Fn&& fn) {
  const size_t dims = ranges.size();
  std::vector<long long> counts(dims);
  long long total = 1;
  for (size_t i = 0; i < dims; ++i) {
    const auto [lo, hi] = ranges[i];
    if (hi < lo) throw std::invalid_argument("grid: empty range");
    counts[i] = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (total > budget / counts[i] + 1) total = budget + 1;  // overflow guard
    total *= counts[i];
    if (total > budget)
      throw std::invalid_argument("grid: point budget exceeded (" + std::to_string(total) + " > " +
                                  std::to_string(budget) + ")");
  }
  std::vector<long long> idx(dims, 0);
  std::vector<double> point(dims);
  for (size_t i = 0; i < dims; ++i) point[i] = ranges[i].first;
  while (true) {
    fn(point);
    size_t d = 0;
    while (d < dims) {
      if (++idx[d] < counts[d]) {
        point[d] = ranges[d].first + step * idx[d];
        break;
      }
      idx[d] = 0;
      point[d] = ranges[d].first;
      ++d;
    }
    if (d == dims) break;
  }
}

}  // namespace

std::vector<double> prox_oracle(const ObjectiveFn& objective, const std::vector<double>& v,
                                double rho, const GridSpec& grid) {
  const auto ranges = broadcast_ranges(grid.ranges, v.size());
  std::vector<double> best;
  double best_val = qp::kInf;
  enumerate_grid(ranges, grid.step, grid.budget, [&](const std::vector<double>& y) {
    double val = objective(y);
    if (val == qp::kInf) return;
    for (size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - v[i];
      val += 0.5 * rho * d * d;
    }
    if (val < best_val) {
      best_val = val;
      best = y;
    }
  });
  if (best.empty()) throw std::runtime_error("prox_oracle: no feasible grid point");
  return best;
}

std::vector<double> prox_oracle_refined(const ObjectiveFn& objective, const std::vector<double>& v,
                                        double rho, std::vector<std::pair<double, double>> ranges,
                                        int points_per_dim, int rounds) {
  std::vector<double> best;
  for (int round = 0; round < rounds; ++round) {
    double max_span = 0.0;
    for (const auto& [lo, hi] : ranges) max_span = std::max(max_span, hi - lo);
    GridSpec grid;
    grid.ranges = ranges;
    grid.step = std::max(max_span / (points_per_dim - 1), 1e-12);
    best = prox_oracle(objective, v, rho, grid);
    for (size_t i = 0; i < ranges.size(); ++i) {
      const double lo = std::max(ranges[i].first, best[i] - 1.5 * grid.step);
      const double hi = std::min(ranges[i].second, best[i] + 1.5 * grid.step);
      ranges[i] = {lo, hi};
    }
  }
  return best;
}

namespace {

struct BruteShape {
  int devices = 0;
  int horizon = 0;
  int dims = 0;  // (devices - 1) * horizon
};

BruteShape brute_shape(const Network& network, const std::vector<DeviceSpec>& specs) {
  if (network.num_nets() != 1)
    throw std::invalid_argument("brute_force_solve: exactly one net required");
  for (const auto& dev : network.devices)
    if (dev.terminals.size() != 1)
      throw std::invalid_argument("brute_force_solve: single-terminal devices only");
  if (specs.size() != network.devices.size())
    throw std::invalid_argument("brute_force_solve: spec count mismatch");
  BruteShape shape;
  shape.devices = network.num_devices();
  shape.horizon = network.horizon;
  shape.dims = (shape.devices - 1) * shape.horizon;
  if (shape.devices < 2) throw std::invalid_argument("brute_force_solve: need at least 2 devices");
  return shape;
}

// The last-declared device absorbs the balance constraint.
BruteForceResult brute_run(const Network& network, const std::vector<DeviceSpec>& specs,
                           const std::vector<std::pair<double, double>>& ranges, double step,
                           long long budget) {
  const BruteShape shape = brute_shape(network, specs);
  const int T = shape.horizon;
  const int D = shape.devices;

  BruteForceResult result;
  result.p = ScheduleMatrix(network.num_terminals(), T);
  std::vector<double> last(T);
  enumerate_grid(ranges, step, budget, [&](const std::vector<double>& y) {
    double cost = 0.0;
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (int d = 0; d + 1 < D; ++d) sum += y[d * T + t];
      last[t] = -sum;
    }
    for (int d = 0; d < D && cost < qp::kInf; ++d) {
      const double* row = d + 1 < D ? y.data() + d * T : last.data();
      cost += objective(specs[d], &row, T);
    }
    if (cost < result.objective) {
      result.objective = cost;
      result.feasible = true;
      for (int d = 0; d < D; ++d) {
        const double* row = d + 1 < D ? y.data() + d * T : last.data();
        double* dst = result.p.row(network.devices[d].terminals[0]);
        std::copy(row, row + T, dst);
      }
    }
  });
  return result;
}

}  // namespace

BruteForceResult brute_force_solve(const Network& network, const std::vector<DeviceSpec>& specs,
                                   const GridSpec& grid) {
  const BruteShape shape = brute_shape(network, specs);
  return brute_run(network, specs, broadcast_ranges(grid.ranges, shape.dims), grid.step,
                   grid.budget);
}

BruteForceResult brute_force_refined(const Network& network, const std::vector<DeviceSpec>& specs,
                                     std::pair<double, double> range, int points_per_dim,
                                     int rounds) {
  const BruteShape shape = brute_shape(network, specs);
  std::vector<std::pair<double, double>> ranges(shape.dims, range);
  BruteForceResult best;
  for (int round = 0; round < rounds; ++round) {
    double max_span = 0.0;
    for (const auto& [lo, hi] : ranges) max_span = std::max(max_span, hi - lo);
    const double step = std::max(max_span / (points_per_dim - 1), 1e-12);
    BruteForceResult r = brute_run(network, specs, ranges, step, 200'000'000);
    if (!r.feasible) {
      // widen nothing; an infeasible coarse pass means the instance is
      // infeasible on this grid
      return r;
    }
    best = r;
    const int T = shape.horizon;
    for (int d = 0; d + 1 < shape.devices; ++d) {
      const double* row = best.p.row(network.devices[d].terminals[0]);
      for (int t = 0; t < T; ++t) {
        const int i = d * T + t;
        ranges[i] = {std::max(range.first, row[t] - 1.5 * step),
                     std::min(range.second, row[t] + 1.5 * step)};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// centralized monolithic QP
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = qp::kInf;

template <class... Ts>
struct Overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

// Incremental triplet-style QP assembly with named row groups.
struct Assembly {
  int nvars = 0;
  std::vector<std::tuple<int, int, double>> q_mat;  // Q triplets
  std::vector<double> q_lin;
  struct Row {
    std::vector<std::pair<int, double>> entries;
    double lo, hi;
  };
  std::vector<Row> rows;

  int add_vars(int count) {
    const int base = nvars;
    nvars += count;
    q_lin.resize(nvars, 0.0);
    return base;
  }
  void quad(int i, int j, double v) { q_mat.emplace_back(i, j, v); }
  void lin(int i, double v) { q_lin[i] += v; }
  int add_row(std::vector<std::pair<int, double>> entries, double lo, double hi) {
    rows.push_back({std::move(entries), lo, hi});
    return static_cast<int>(rows.size()) - 1;
  }

  qp::QpProblem build() const {
    qp::QpProblem prob = qp::QpProblem::make(nvars, static_cast<int>(rows.size()));
    for (const auto& [i, j, v] : q_mat) prob.Q.add(i, j, v);
    prob.q = q_lin;
    for (size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [c, v] : rows[r].entries) prob.A.add(static_cast<int>(r), c, v);
      prob.lo[r] = rows[r].lo;
      prob.hi[r] = rows[r].hi;
    }
    return prob;
  }
};

struct LossyCutSite {
  int line_device;
  int term1, term2;  // terminal ids
  int period;
  qp::LineHull hull;
};

}  // namespace

CentralResult centralized_solve(const Network& network, const std::vector<DeviceSpec>& specs,
                                double tol) {
  CentralResult result;
  const int T = network.horizon;
  const int NT = network.num_terminals();

  // variable map: per terminal, base index of its T power variables
  std::vector<int> pvar(NT, -1);
  std::vector<const PowerProfile*> fixed_profile(NT, nullptr);
  Assembly as;
  for (int d = 0; d < network.num_devices(); ++d) {
    const auto& terms = network.devices[d].terminals;
    if (const auto* f = std::get_if<FixedLoadParams>(&specs[d])) {
      fixed_profile[terms[0]] = &f->l;
      continue;
    }
    for (int t : terms) pvar[t] = as.add_vars(T);
  }
  if (as.nvars > 1'000'000 / std::max(T, 1)) {  // crude density guard
    result.status = CentralStatus::kSizeCap;
    return result;
  }

  std::vector<LossyCutSite> lossy_sites;

  for (int d = 0; d < network.num_devices(); ++d) {
    const auto& terms = network.devices[d].terminals;
    std::visit(
        Overload{
            [&](const FixedLoadParams&) {},
            [&](const GeneratorParams& g) {
              const int base = pvar[terms[0]];
              const bool use_env = g.switchable && (g.c_fixed > 0 || g.p_min > 0);
              GeneratorEnvelope env;
              if (use_env) env = generator_envelope(g);
              const bool split = use_env && env.p_c > 0 && env.p_c < g.p_max;
              const bool linear = use_env && !split;  // chord over the whole range
              int u2 = -1;
              if (split) u2 = as.add_vars(T);
              for (int t = 0; t < T; ++t) {
                if (split) {
                  as.lin(base + t, -env.slope);
                  as.quad(u2 + t, u2 + t, 2 * g.alpha);
                  as.lin(u2 + t, 2 * g.alpha * env.p_c + g.beta - env.slope);
                  as.add_row({{base + t, -1.0}, {u2 + t, -1.0}}, 0.0, env.p_c);
                  as.add_row({{u2 + t, 1.0}}, 0.0, g.p_max - env.p_c);
                } else if (linear) {
                  as.lin(base + t, -env.slope);
                  as.add_row({{base + t, 1.0}}, -g.p_max, 0.0);
                } else {
                  as.quad(base + t, base + t, 2 * g.alpha);
                  as.lin(base + t, -g.beta);
                  const double lo_u = g.switchable ? 0.0 : g.p_min;
                  as.add_row({{base + t, 1.0}}, -g.p_max, -lo_u);
                }
                if (t + 1 < T)
                  as.add_row({{base + t, 1.0}, {base + t + 1, -1.0}}, g.ramp_min, g.ramp_max);
              }
            },
            [&](const LineParams& l) {
              const int b1 = pvar[terms[0]], b2 = pvar[terms[1]];
              const qp::LineHull hull = line_hull(l);
              for (int t = 0; t < T; ++t) {
                if (std::isfinite(l.c_max))
                  as.add_row({{b1 + t, 1.0}, {b2 + t, -1.0}}, -l.c_max, l.c_max);
                if (l.lossless) {
                  as.add_row({{b1 + t, 1.0}, {b2 + t, 1.0}}, 0.0, 0.0);
                  if (l.eps_cost > 0) {
                    as.quad(b1 + t, b1 + t, 2 * l.eps_cost);
                    as.quad(b2 + t, b2 + t, 2 * l.eps_cost);
                  }
                } else {
                  const double hc = std::min(hull.half_cap, hull.b * (1.0 - 1e-9));
                  for (double f0 : {0.0, hc / 2, -hc / 2, 0.999 * hc, -0.999 * hc}) {
                    const double da = hull.arc_deriv(f0);
                    as.add_row({{b1 + t, 1.0 - da / 2}, {b2 + t, 1.0 + da / 2}},
                               hull.arc(f0) - da * f0, kInf);
                  }
                  lossy_sites.push_back({d, terms[0], terms[1], t, hull});
                }
              }
            },
            [&](const BatteryParams& b) {
              const int base = pvar[terms[0]];
              std::vector<std::pair<int, double>> cum;
              for (int t = 0; t < T; ++t) {
                as.add_row({{base + t, 1.0}}, -b.d_max[t], b.c_max[t]);
                cum.emplace_back(base + t, 1.0);
                if (t + 1 == T && b.q_final) {
                  as.add_row(cum, *b.q_final - b.q_init, *b.q_final - b.q_init);
                } else {
                  as.add_row(cum, -b.q_init, b.q_max - b.q_init);
                }
              }
            },
            [&](const ThermalLoadParams& th) {
              const int base = pvar[terms[0]];
              const double phi = 1.0 - th.mu / th.c;
              for (int t = 0; t < T; ++t) as.add_row({{base + t, 1.0}}, 0.0, th.h_max[t]);
              // theta(tau+1) = phi^tau theta_init + sum phi^(tau-j) ((mu/c)
              // theta_amb(j) - (eta/c) p(j)), constrained for tau = 1..T-1
              double cst = th.theta_init;
              std::vector<std::pair<int, double>> row;
              for (int tau = 1; tau <= T - 1; ++tau) {
                for (auto& e : row) e.second *= phi;
                cst = phi * cst + (th.mu / th.c) * th.theta_amb[tau - 1];
                row.emplace_back(base + tau - 1, -th.eta / th.c);
                as.add_row(row, th.theta_min[tau] - cst, th.theta_max[tau] - cst);
              }
            },
            [&](const DeferrableLoadParams& def) {
              const int base = pvar[terms[0]];
              std::vector<std::pair<int, double>> sum;
              for (int t = 0; t < T; ++t) {
                const bool inside = (t + 1 >= def.start && t + 1 <= def.end);
                as.add_row({{base + t, 1.0}}, 0.0, inside ? def.l_max : 0.0);
                if (inside) sum.emplace_back(base + t, 1.0);
              }
              as.add_row(sum, def.energy, kInf);
            },
            [&](const CurtailableLoadParams& c) {
              const int base = pvar[terms[0]];
              const int slack = as.add_vars(T);
              for (int t = 0; t < T; ++t) {
                as.lin(slack + t, c.alpha);
                as.add_row({{slack + t, 1.0}}, 0.0, kInf);
                as.add_row({{slack + t, 1.0}, {base + t, 1.0}}, c.l[t], kInf);
              }
            },
            [&](const EvParams& e) {
              const int base = pvar[terms[0]];
              const int W = e.end - e.start + 1;
              const int slack = as.add_vars(W);
              std::vector<std::pair<int, double>> cum;
              for (int t = 0; t < T; ++t) {
                const bool inside = (t + 1 >= e.start && t + 1 <= e.end);
                as.add_row({{base + t, 1.0}}, 0.0, inside ? e.c_max[t] : 0.0);
                if (inside) {
                  const int i = t + 1 - e.start;
                  cum.emplace_back(base + t, 1.0);
                  as.lin(slack + i, e.alpha);
                  as.add_row({{slack + i, 1.0}}, 0.0, kInf);
                  auto row = cum;
                  row.emplace_back(slack + i, 1.0);
                  as.add_row(row, e.c_des[t] - e.q_init, kInf);
                }
              }
            },
            [&](const ExternalTieParams& x) {
              const int base = pvar[terms[0]];
              const int w = as.add_vars(T);
              for (int t = 0; t < T; ++t) {
                as.lin(base + t, -x.c[t]);
                as.lin(w + t, x.gamma[t]);
                as.add_row({{base + t, 1.0}}, -x.e_max[t], x.e_max[t]);
                as.add_row({{w + t, 1.0}, {base + t, -1.0}}, 0.0, kInf);
                as.add_row({{w + t, 1.0}, {base + t, 1.0}}, 0.0, kInf);
              }
            },
        },
        specs[d]);
  }

  // net balance equality rows, one per (net, period); fixed loads feed the rhs
  std::vector<int> balance_row(static_cast<size_t>(network.num_nets()) * T, -1);
  for (int n = 0; n < network.num_nets(); ++n) {
    for (int t = 0; t < T; ++t) {
      std::vector<std::pair<int, double>> row;
      double rhs = 0.0;
      for (int term : network.nets[n].terminals) {
        if (pvar[term] >= 0)
          row.emplace_back(pvar[term] + t, 1.0);
        else
          rhs -= (*fixed_profile[term])[t];
      }
      balance_row[static_cast<size_t>(n) * T + t] = as.add_row(std::move(row), rhs, rhs);
    }
  }

  // outer linearization loop for lossy-line hulls
  std::vector<double> warm;
  qp::QpResult qpres;
  for (int round = 0;; ++round) {
    qp::QpProblem prob = as.build();
    qp::QpOptions opts;
    opts.tol = tol;
    opts.max_iter = 200;
    opts.validate_psd = false;
    qp::QpSolver solver(std::move(prob), opts);
    qpres = warm.empty() ? solver.solve() : solver.solve(warm);
    result.cut_rounds = round + 1;
    if (qpres.status == qp::QpStatus::kInfeasible) {
      result.status = CentralStatus::kInfeasible;
      return result;
    }
    if (qpres.status != qp::QpStatus::kOptimal) {
      result.status = CentralStatus::kNotConverged;
      result.kkt_residual = qpres.kkt_residual;
      return result;
    }
    warm = qpres.x;
    double worst = 0.0;
    std::vector<std::pair<const LossyCutSite*, double>> new_cuts;
    for (const auto& site : lossy_sites) {
      const double p1 = qpres.x[pvar[site.term1] + site.period];
      const double p2 = qpres.x[pvar[site.term2] + site.period];
      const double f = 0.5 * (p1 - p2);
      const double viol = site.hull.arc(f) - (p1 + p2);
      worst = std::max(worst, viol);
      if (viol > 1e-6) new_cuts.emplace_back(&site, f);
    }
    if (new_cuts.empty() || round >= 25) {
      if (worst > 1e-6) result.status = CentralStatus::kNotConverged;
      break;
    }
    for (const auto& [site, f] : new_cuts) {
      const double fc = std::clamp(f, -site->hull.b * (1 - 1e-9), site->hull.b * (1 - 1e-9));
      const double da = site->hull.arc_deriv(fc);
      as.add_row({{pvar[site->term1] + site->period, 1.0 - da / 2},
                  {pvar[site->term2] + site->period, 1.0 + da / 2}},
                 site->hull.arc(fc) - da * fc, kInf);
    }
  }

  // extract schedules, objective, prices
  result.p = ScheduleMatrix(NT, T);
  for (int t = 0; t < NT; ++t) {
    if (pvar[t] >= 0) {
      for (int tau = 0; tau < T; ++tau) result.p(t, tau) = qpres.x[pvar[t] + tau];
    } else {
      for (int tau = 0; tau < T; ++tau) result.p(t, tau) = (*fixed_profile[t])[tau];
    }
  }
  double obj = 0.0;
  for (int d = 0; d < network.num_devices(); ++d) {
    std::vector<const double*> rows;
    for (int term : network.devices[d].terminals) rows.push_back(result.p.row(term));
    obj += objective(specs[d], rows.data(), T);
  }
  result.objective = obj;
  result.kkt_residual = qpres.kkt_residual;
  result.status = CentralStatus::kOptimal;
  result.prices.assign(network.num_nets(), PowerProfile(T, 0.0));
  for (int n = 0; n < network.num_nets(); ++n) {
    const double inv = 1.0 / static_cast<double>(network.nets[n].terminals.size());
    for (int t = 0; t < T; ++t)
      result.prices[n][t] = qpres.row_duals[balance_row[static_cast<size_t>(n) * T + t]] * inv;
  }
  return result;
}

}  // namespace proxgrid::oracle
