#include "proxgrid/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace proxgrid::netgen {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

double Topology::average_degree() const {
  return nets > 0 ? 2.0 * static_cast<double>(edges.size()) / nets : 0.0;
}

bool Topology::connected() const {
  if (nets == 0) return true;
  UnionFind uf(nets);
  int components = nets;
  for (const auto& [a, b] : edges)
    if (uf.unite(a, b)) --components;
  return components == 1;
}

Topology gen_topology(const GenConfig& cfg) {
  const int n = cfg.nets;
  if (n < 2) throw std::invalid_argument("gen_topology: need at least 2 nets");
  Topology topo;
  topo.nets = n;
  topo.positions.resize(n);

  RngStream pos_rng(cfg.seed, "topology/positions");
  const double side = std::sqrt(static_cast<double>(n));
  for (auto& p : topo.positions) {
    p[0] = pos_rng.uniform(0.0, side);
    p[1] = pos_rng.uniform(0.0, side);
  }

  auto dist2 = [&](int i, int j) {
    const double dx = topo.positions[i][0] - topo.positions[j][0];
    const double dy = topo.positions[i][1] - topo.positions[j][1];
    return dx * dx + dy * dy;
  };

  RngStream edge_rng(cfg.seed, "topology/edges");
  const double d2 = cfg.d * cfg.d;
  std::vector<int> degree(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double gamma = cfg.alpha_conn * std::min(1.0, d2 / dist2(i, j));
      if (edge_rng.next_double() < gamma) {
        topo.edges.emplace_back(i, j);
        ++degree[i];
        ++degree[j];
      }
    }
  }

  RngStream repair_rng(cfg.seed, "topology/repair");
  // Every net isolated after the random phase gets a line to its nearest
  // neighbor. Mutually-nearest isolated pairs end up with two parallel lines;
  // parallel lines are ordinary two-terminal devices here.
  std::vector<int> isolated;
  for (int i = 0; i < n; ++i)
    if (degree[i] == 0) isolated.push_back(i);
  for (int i : isolated) {
    int best = -1;
    double best_d = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dd = dist2(i, j);
      if (best < 0 || dd < best_d) {
        best = j;
        best_d = dd;
      }
    }
    topo.edges.emplace_back(std::min(i, best), std::max(i, best));
    ++degree[i];
    ++degree[best];
  }

  // merge components: pick two components uniformly, then one net in each
  UnionFind uf(n);
  for (const auto& [a, b] : topo.edges) uf.unite(a, b);
  std::vector<std::vector<int>> comps;
  {
    std::vector<int> comp_of(n, -1);
    for (int i = 0; i < n; ++i) {
      const int root = uf.find(i);
      if (comp_of[root] < 0) {
        comp_of[root] = static_cast<int>(comps.size());
        comps.emplace_back();
      }
      comps[comp_of[root]].push_back(i);
    }
  }
  while (comps.size() > 1) {
    const int ca = repair_rng.uniform_int(0, static_cast<int>(comps.size()) - 1);
    int cb = repair_rng.uniform_int(0, static_cast<int>(comps.size()) - 2);
    if (cb >= ca) ++cb;
    const int a = comps[ca][repair_rng.uniform_int(0, static_cast<int>(comps[ca].size()) - 1)];
    const int b = comps[cb][repair_rng.uniform_int(0, static_cast<int>(comps[cb].size()) - 1)];
    topo.edges.emplace_back(std::min(a, b), std::max(a, b));
    auto& dst = comps[std::min(ca, cb)];
    auto& src = comps[std::max(ca, cb)];
    dst.insert(dst.end(), src.begin(), src.end());
    comps.erase(comps.begin() + std::max(ca, cb));
  }

  if (cfg.tree) {
    // keep the first spanning tree in edge insertion order
    UnionFind tree_uf(n);
    std::vector<std::pair<int, int>> kept;
    for (const auto& e : topo.edges)
      if (tree_uf.unite(e.first, e.second)) kept.push_back(e);
    topo.edges = std::move(kept);
  }
  return topo;
}

DeviceSpec sample_params(OneTerminalKind kind, int horizon, RngStream& rng) {
  const int T = horizon;
  switch (kind) {
    case OneTerminalKind::kGenerator: {
      GeneratorParams g;
      // large / medium / small rows
      static constexpr double kPmax[3] = {50.0, 20.0, 10.0};
      static constexpr double kRamp[3] = {3.0, 5.0, 10.0};
      static constexpr double kAlpha[3] = {0.001, 0.005, 0.02};
      static constexpr double kBeta[3] = {0.1, 0.2, 1.0};
      const int type = rng.uniform_int(0, 2);
      g.p_min = 0.0;
      g.p_max = kPmax[type];
      g.ramp_max = kRamp[type];
      g.ramp_min = -kRamp[type];  // symmetric ramping; only the max is tabulated
      g.alpha = kAlpha[type];
      g.beta = kBeta[type];
      g.switchable = true;
      g.c_fixed = 0.0;
      return g;
    }
    case OneTerminalKind::kBattery: {
      BatteryParams b;
      b.q_init = 0.0;
      b.q_max = rng.uniform(20.0, 50.0);
      const double rate = rng.uniform(5.0, 10.0);
      b.c_max.assign(T, rate);
      b.d_max.assign(T, rate);
      return b;
    }
    case OneTerminalKind::kFixedLoad: {
      FixedLoadParams f;
      const double a = rng.uniform(1.0, 5.0);
      const double c = a + rng.uniform(0.0, 0.5);
      const double phi0 = rng.uniform(60.0, 72.0);
      f.l.resize(T);
      for (int t = 0; t < T; ++t) f.l[t] = c + a * std::sin(kTwoPi * (t + 1 - phi0) / T);
      return f;
    }
    case OneTerminalKind::kDeferrable: {
      DeferrableLoadParams d;
      d.energy = rng.uniform(500.0, 1000.0);
      d.start = rng.uniform_int(1, T - 7);
      d.end = rng.uniform_int(d.start + 7, T);
      d.l_max = 2.0 * d.energy / (d.end - d.start);
      return d;
    }
    case OneTerminalKind::kCurtailable: {
      CurtailableLoadParams c;
      c.l.assign(T, rng.uniform(5.0, 15.0));
      c.alpha = rng.uniform(1.0, 2.0);
      return c;
    }
  }
  throw std::logic_error("sample_params: unknown kind");
}

Instance attach_devices(const Topology& topo, const GenConfig& cfg) {
  if (std::abs(cfg.mix.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("attach_devices: device mix must sum to 1");
  Instance inst;
  const int n = topo.nets;
  const int ne = static_cast<int>(topo.edges.size());
  Network& net = inst.network;
  net.horizon = cfg.horizon;
  net.devices.resize(n + ne);
  net.nets.resize(n);
  net.terminals.resize(n + 2 * ne);
  inst.specs.resize(n + ne);
  inst.net_device.resize(n);
  inst.line_device.resize(ne);

  RngStream mix_rng(cfg.seed, "mix");
  for (int i = 0; i < n; ++i) {
    net.terminals[i] = {i, i};
    net.devices[i].terminals = {i};
    net.nets[i].terminals.push_back(i);
    inst.net_device[i] = i;

    const double u = mix_rng.next_double();
    OneTerminalKind kind;
    const auto& mix = cfg.mix;
    if (u < mix.generator)
      kind = OneTerminalKind::kGenerator;
    else if (u < mix.generator + mix.battery)
      kind = OneTerminalKind::kBattery;
    else if (u < mix.generator + mix.battery + mix.fixed_load)
      kind = OneTerminalKind::kFixedLoad;
    else if (u < mix.generator + mix.battery + mix.fixed_load + mix.deferrable)
      kind = OneTerminalKind::kDeferrable;
    else
      kind = OneTerminalKind::kCurtailable;

    RngStream dev_rng(cfg.seed, "params/" + std::to_string(i));
    inst.specs[i] = sample_params(kind, cfg.horizon, dev_rng);
  }
  for (int e = 0; e < ne; ++e) {
    const auto [a, b] = topo.edges[e];
    const int dev = n + e;
    const int t1 = n + 2 * e, t2 = n + 2 * e + 1;
    net.terminals[t1] = {dev, a};
    net.terminals[t2] = {dev, b};
    net.devices[dev].terminals = {t1, t2};
    net.nets[a].terminals.push_back(t1);
    net.nets[b].terminals.push_back(t2);
    inst.line_device[e] = dev;
    LineParams line;  // placeholder until calibration
    inst.specs[dev] = line;
  }
  return inst;
}

void calibrate_lines(Instance& instance, const GenConfig& cfg, const SolveConfig& solve_cfg) {
  std::vector<DeviceSpec> presolve = instance.specs;
  for (int dev : instance.line_device) {
    LineParams line;
    line.c_max = qp::kInf;
    line.lossless = true;
    line.eps_cost = 1e-3;
    presolve[dev] = line;
  }
  Solution sol = solve(instance.network, presolve, solve_cfg);
  if (sol.status != SolveStatus::kConverged)
    throw std::runtime_error("calibrate_lines: pre-solve did not converge (" + to_string(sol.status) +
                             ")");

  RngStream cal_rng(cfg.seed, "calibration");
  const int T = instance.network.horizon;
  for (size_t e = 0; e < instance.line_device.size(); ++e) {
    const int dev = instance.line_device[e];
    const auto& terms = instance.network.devices[dev].terminals;
    double fmax = 0.0;
    for (int t = 0; t < T; ++t) {
      const double flow = 0.5 * (sol.p(terms[0], t) - sol.p(terms[1], t));
      fmax = std::max(fmax, std::abs(flow));
    }
    LineParams line;
    line.c_max = std::max(10.0, 4.0 * fmax);
    line.lossless = false;
    const double gamma = cal_rng.uniform(4.5, 5.5);
    const double frac = cal_rng.uniform(0.05, 0.15);
    // Loss at full capacity equals frac * c_max: with x = c_max / (2b) the
    // arc relation gives x = 2 frac gamma / (1 + frac^2 gamma^2), hence g.
    line.g = line.c_max * (1.0 + frac * frac * gamma * gamma) / (4.0 * frac * gamma * gamma);
    line.b = gamma * line.g;
    instance.specs[dev] = line;
  }
}

void perturb_loads(std::vector<DeviceSpec>& specs, double sigma, RngStream& rng) {
  for (auto& spec : specs) {
    if (auto* f = std::get_if<FixedLoadParams>(&spec)) {
      const double scale = std::exp(sigma * rng.normal());
      for (double& x : f->l) x *= scale;
    } else if (auto* c = std::get_if<CurtailableLoadParams>(&spec)) {
      const double scale = std::exp(sigma * rng.normal());
      for (double& x : c->l) x *= scale;
    } else if (auto* d = std::get_if<DeferrableLoadParams>(&spec)) {
      const double scale = std::exp(sigma * rng.normal());
      d->energy = std::min(d->energy * scale, d->l_max * (d->end - d->start + 1));
    }
  }
}

Instance generate(const GenConfig& cfg, const SolveConfig& solve_cfg) {
  Topology topo = gen_topology(cfg);
  Instance inst = attach_devices(topo, cfg);
  calibrate_lines(inst, cfg, solve_cfg);
  return inst;
}

}  // namespace proxgrid::netgen
