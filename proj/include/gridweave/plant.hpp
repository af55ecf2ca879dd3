#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridweave/coordinator.hpp"
#include "gridweave/core.hpp"
#include "gridweave/powerflow.hpp"
#include "gridweave/scenario.hpp"

namespace gridweave {

struct SimConfig {
  bool coordinate = true;
  std::optional<std::size_t> days; // scenario value when unset
  std::optional<std::uint64_t> seed;
  bool perfect_forecast = false;   // realized series = forecast
  bool run_power_flow = true;
};

/// Aggregate view of one simulated step.
struct StepLog {
  std::size_t step = 0;
  int hour = 0;
  double scheduled = 0.0;      // sum of the applied first-step plans
  double realized = 0.0;       // slack-bus power actually drawn
  double forecast_error = 0.0; // realized - scheduled
  double committed = 0.0;
  double violation = 0.0;      // band violation of the realized power
  double global_excess = 0.0;  // max(0, |realized| - limit)
  double scheduled_excess = 0.0;
  bool low_tariff = false;
};

struct RoundLog {
  std::uint64_t round = 0;
  std::size_t step = 0;
  std::string phase; // day_ahead or intraday
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

/// One building after one step.
struct BuildingStep {
  double temperature = 0.0;
  double battery_soc = 0.0;
  double tank_soc = 0.0;
  double base_load = 0.0; // realized
  double pv = 0.0;        // realized
  double import = 0.0;
  double export_ = 0.0;
  double energy_cost = 0.0;  // CHF, import - export revenue + fuel
  double comfort_cost = 0.0; // CHF
  double balance_residual = 0.0;
  Setpoints applied;
};

struct SimResult {
  std::string scenario;
  std::string tariff_name;
  TariffSchedule tariff;
  bool coordinate = true;
  std::uint64_t seed = 0;
  std::size_t days = 0;
  double step_hours = 1.0;
  double half_width = 0.0;
  std::optional<double> global_limit;
  std::vector<std::string> ids;
  std::vector<std::string> buses;
  std::vector<ControllerState> initial;
  std::vector<StepLog> steps;
  std::vector<RoundLog> rounds;
  std::vector<std::vector<BuildingStep>> buildings; // [building][step]
  std::vector<Profile> committed_days;              // per day, 24 values
  std::vector<PowerFlowSolution> power_flow;        // per step, empty when skipped
  std::vector<std::string> network_buses;

  Profile realized_profile() const;
  Profile scheduled_profile() const;
};

/// Runs the receding-horizon loop. `link` defaults to in-process
/// controllers built from the scenario.
SimResult run_closed_loop(const Scenario& scenario, const SimConfig& cfg, ControllerLink* link = nullptr);

/// Ordered (name, value) pairs as written to metrics.csv.
using MetricsTable = std::vector<std::pair<std::string, double>>;

MetricsTable compute_metrics(const SimResult& result, const TariffSchedule& tariff);
double metric(const MetricsTable& table, const std::string& name);

/// Writes the run directory: slack_profile.csv, band.csv, soc.csv,
/// metrics.csv, iterations.csv, costs.csv, bus_injections.csv,
/// powerflow.csv and run_info.csv.
void write_outputs(const SimResult& result, const std::filesystem::path& dir);

/// Rebuilds the metrics of a run directory from its CSV files.
MetricsTable report_from_directory(const std::filesystem::path& dir);

/// Re-solves the power flow for every row of a bus_injections.csv.
std::vector<PowerFlowSolution> replay_power_flow(const Network& net, const std::filesystem::path& injections_csv);

/// AR(1) series with marginal standard deviation `sigma`.
std::vector<double> ar1_series(std::size_t n, double phi, double sigma, std::uint64_t seed);

} // namespace gridweave
