#include "proxgrid/network.hpp"

#include <stdexcept>

#include "proxgrid/kernels.hpp"

namespace proxgrid {

ValidationReport validate(const Network& network) {
  ValidationReport report;
  auto fail = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  const int nt = network.num_terminals();
  if (network.horizon <= 0) fail("horizon must be positive");

  std::vector<int> dev_count(nt, 0);
  std::vector<int> net_count(nt, 0);

  for (int d = 0; d < network.num_devices(); ++d) {
    const auto& dev = network.devices[d];
    if (dev.terminals.empty()) fail("device " + std::to_string(d) + " has no terminals");
    for (int t : dev.terminals) {
      if (t < 0 || t >= nt) {
        fail("device " + std::to_string(d) + " references unknown terminal " + std::to_string(t));
        continue;
      }
      ++dev_count[t];
      if (network.terminals[t].device != d)
        fail("terminal " + std::to_string(t) + " device id disagrees with device " + std::to_string(d) +
             " membership");
    }
  }
  for (int n = 0; n < network.num_nets(); ++n) {
    const auto& net = network.nets[n];
    if (net.terminals.empty()) fail("net " + std::to_string(n) + " has no terminals");
    for (int t : net.terminals) {
      if (t < 0 || t >= nt) {
        fail("net " + std::to_string(n) + " references unknown terminal " + std::to_string(t));
        continue;
      }
      ++net_count[t];
      if (network.terminals[t].net != n)
        fail("terminal " + std::to_string(t) + " net id disagrees with net " + std::to_string(n) +
             " membership");
    }
  }
  for (int t = 0; t < nt; ++t) {
    if (dev_count[t] == 0) fail("terminal " + std::to_string(t) + " not assigned to any device");
    if (dev_count[t] > 1)
      fail("terminal " + std::to_string(t) + " in " + std::to_string(dev_count[t]) + " devices");
    if (net_count[t] == 0) fail("terminal " + std::to_string(t) + " not assigned to any net");
    if (net_count[t] > 1)
      fail("terminal " + std::to_string(t) + " in " + std::to_string(net_count[t]) + " nets");
    const auto& term = network.terminals[t];
    if (term.device < 0 || term.device >= network.num_devices())
      fail("terminal " + std::to_string(t) + " has dangling device id " + std::to_string(term.device));
    if (term.net < 0 || term.net >= network.num_nets())
      fail("terminal " + std::to_string(t) + " has dangling net id " + std::to_string(term.net));
  }
  return report;
}

void net_average_into(const ScheduleMatrix& p, const Network& network, ScheduleMatrix& out) {
  const int T = network.horizon;
  if (p.rows() != network.num_terminals() || p.cols() != T)
    throw std::invalid_argument("net_average: schedule matrix does not conform to network");
  if (out.rows() != p.rows() || out.cols() != p.cols()) out = ScheduleMatrix(p.rows(), p.cols());

  const auto& k = kernels::table();
  for (const auto& net : network.nets) {
    // Accumulate into the first member's output row, scale, then broadcast.
    double* first = out.row(net.terminals[0]);
    k.scaled_copy(first, p.row(net.terminals[0]), 1.0, T);
    for (size_t i = 1; i < net.terminals.size(); ++i) k.acc(first, p.row(net.terminals[i]), T);
    k.scale(first, 1.0 / static_cast<double>(net.terminals.size()), T);
    for (size_t i = 1; i < net.terminals.size(); ++i) k.scaled_copy(out.row(net.terminals[i]), first, 1.0, T);
  }
}

ScheduleMatrix net_average(const ScheduleMatrix& p, const Network& network) {
  ScheduleMatrix out(p.rows(), p.cols());
  net_average_into(p, network, out);
  return out;
}

std::vector<PowerProfile> device_view(const ScheduleMatrix& p, const Network& network, int device_id) {
  if (device_id < 0 || device_id >= network.num_devices())
    throw std::out_of_range("device_view: unknown device id " + std::to_string(device_id));
  std::vector<PowerProfile> rows;
  rows.reserve(network.devices[device_id].terminals.size());
  for (int t : network.devices[device_id].terminals) {
    auto span = p.row_span(t);
    rows.emplace_back(span.begin(), span.end());
  }
  return rows;
}

}  // namespace proxgrid
