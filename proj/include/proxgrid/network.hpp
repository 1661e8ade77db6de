#pragma once

#include <string>
#include <vector>

#include "proxgrid/types.hpp"

namespace proxgrid {

struct Terminal {
  int device = -1;
  int net = -1;
};

struct DeviceNode {
  // Terminal ids in the device's declared order; prox arguments are matrices
  // whose rows follow this order.
  std::vector<int> terminals;
};

struct NetNode {
  std::vector<int> terminals;
};

/// Bipartite terminal/device/net structure. Devices and nets must both
/// partition the terminal set. Immutable once built; all solver state lives
/// outside, so concurrent reads need no locks.
struct Network {
  int horizon = 0;
  std::vector<Terminal> terminals;
  std::vector<DeviceNode> devices;
  std::vector<NetNode> nets;

  int num_terminals() const { return static_cast<int>(terminals.size()); }
  int num_devices() const { return static_cast<int>(devices.size()); }
  int num_nets() const { return static_cast<int>(nets.size()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks the partition invariants: every terminal in exactly one device and
/// exactly one net, no empty devices/nets, ids in range and cross-consistent.
ValidationReport validate(const Network& network);

/// Row t of the result is the mean of the rows on t's net; all terminals of a
/// net get identical rows. This is the only global coupling in the problem.
ScheduleMatrix net_average(const ScheduleMatrix& p, const Network& network);

/// In-place variant reusing caller storage (out may not alias p).
void net_average_into(const ScheduleMatrix& p, const Network& network, ScheduleMatrix& out);

/// Rows of p for device d's terminals, in the device's declared order.
std::vector<PowerProfile> device_view(const ScheduleMatrix& p, const Network& network, int device_id);

}  // namespace proxgrid
