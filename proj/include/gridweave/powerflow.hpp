#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gridweave/error.hpp"

namespace gridweave {

struct NetBus {
  std::string id;
  bool slack = false;
  std::string building; // controller id whose net load is injected here, may be empty
};

struct NetLine {
  std::size_t from = 0;
  std::size_t to = 0;
  double r_ohm_per_km = 0.0;
  double x_ohm_per_km = 0.0;
  double length_m = 0.0;

  double resistance() const { return r_ohm_per_km * length_m / 1000.0; }
  double reactance() const { return x_ohm_per_km * length_m / 1000.0; }
};

struct Network {
  std::vector<NetBus> buses;
  std::vector<NetLine> lines;
  double base_kv = 0.4;    // line-to-line
  double base_kva = 100.0; // three-phase

  std::size_t slack_index() const;
  std::size_t index_of(const std::string& bus_id) const; // throws when absent
  double base_impedance() const { return base_kv * base_kv * 1000.0 / base_kva; } // ohm
  /// One slack, valid line endpoints, positive impedances, connected.
  void validate() const;
};

/// Load convention: positive p is consumption. One entry per bus; the
/// slack entry is ignored.
struct BusInjection {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;
};

/// q = p * tan(acos(pf)), lagging, applied to the signed net load.
BusInjection injection_at_power_factor(std::span<const double> p_kw, double power_factor = 0.95);

struct PowerFlowOptions {
  double tolerance = 1e-6; // p.u. power mismatch
  int max_iterations = 50;
};

struct PowerFlowSolution {
  std::vector<double> v_pu;
  std::vector<double> angle_deg;
  int iterations = 0;
  double max_mismatch = 0.0;
  double slack_p_kw = 0.0; // power drawn from the upstream grid
  double slack_q_kvar = 0.0;
  double losses_kw = 0.0;
};

class PowerFlowNonConvergence : public RuntimeFailure {
public:
  PowerFlowNonConvergence(const std::string& what, double mismatch)
      : RuntimeFailure(what), mismatch_(mismatch) {}
  double mismatch() const { return mismatch_; }

private:
  double mismatch_;
};

/// Newton-Raphson on the polar mismatch equations, slack at 1 p.u. / 0 deg,
/// every other bus PQ.
PowerFlowSolution solve_power_flow(const Network& net, const BusInjection& inj,
                                   const PowerFlowOptions& opts = {});

struct DeviationReport {
  double max_voltage_deviation = 0.0; // max |V - 1| in p.u.
  double max_angle_deg = 0.0;         // max |angle|
};

DeviationReport deviation_report(std::span<const PowerFlowSolution> solutions);

} // namespace gridweave
