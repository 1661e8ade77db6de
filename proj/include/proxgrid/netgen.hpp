#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "proxgrid/engine.hpp"
#include "proxgrid/network.hpp"
#include "proxgrid/rng.hpp"

namespace proxgrid::netgen {

struct DeviceMix {
  double generator = 0.2;
  double battery = 0.1;
  double fixed_load = 0.5;
  double deferrable = 0.1;
  double curtailable = 0.1;

  double sum() const { return generator + battery + fixed_load + deferrable + curtailable; }
};

struct GenConfig {
  int nets = 100;
  double d = 0.15;          // geometric connection radius
  double alpha_conn = 0.8;  // connection probability inside the radius
  int horizon = 96;
  DeviceMix mix;
  uint64_t seed = 0;
  // Keep only a spanning tree of the generated topology (tightness studies).
  bool tree = false;
};

struct Topology {
  int nets = 0;
  std::vector<std::array<double, 2>> positions;
  std::vector<std::pair<int, int>> edges;

  double average_degree() const;
  bool connected() const;
};

/// Random geometric topology on [0, sqrt(N)]^2 with pairwise connection
/// probability alpha * min(1, d^2 / dist^2), then isolated nets attached to
/// their nearest neighbor and components merged by uniformly random pairs
/// until connected.
Topology gen_topology(const GenConfig& cfg);

struct Instance {
  Network network;
  std::vector<DeviceSpec> specs;
  std::vector<int> net_device;   // device id of each net's one-terminal device
  std::vector<int> line_device;  // device id per topology edge
};

enum class OneTerminalKind { kGenerator, kBattery, kFixedLoad, kDeferrable, kCurtailable };

DeviceSpec sample_params(OneTerminalKind kind, int horizon, RngStream& rng);

/// One single-terminal device per net (drawn from the mix) plus a two-terminal
/// transmission line per edge. Lines start lossless and uncapacitated until
/// calibrate_lines replaces them.
Instance attach_devices(const Topology& topo, const GenConfig& cfg);

/// Lossless uncapacitated pre-solve with per-line cost eps (p1^2 + p2^2),
/// eps = 1e-3; capacities from the observed flows (c_max = max(10, 4 Fmax)),
/// then loss parameters with b/g ~ U[4.5, 5.5] and full-capacity loss a
/// U[5%, 15%] fraction of c_max. Throws std::runtime_error when the pre-solve
/// does not converge.
void calibrate_lines(Instance& instance, const GenConfig& cfg, const SolveConfig& solve_cfg);

/// Scales each load profile by an independent lognormal exp(sigma X). Applies
/// to fixed and curtailable profiles and to deferrable energy (clamped to the
/// window's capacity).
void perturb_loads(std::vector<DeviceSpec>& specs, double sigma, RngStream& rng);

/// gen_topology + attach_devices + calibrate_lines.
Instance generate(const GenConfig& cfg, const SolveConfig& solve_cfg);

}  // namespace proxgrid::netgen
