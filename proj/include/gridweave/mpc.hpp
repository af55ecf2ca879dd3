#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/devices.hpp"
#include "gridweave/lp.hpp"

namespace gridweave {

/// One building and its MPC regulator.
struct ControllerModel {
  std::string id;
  RcBuilding building;
  std::optional<HeatPump> heat_pump;
  std::optional<GasBoiler> boiler;
  std::optional<Chp> chp;
  std::optional<Battery> battery;
  std::optional<HotWaterTank> tank;
  std::optional<PvArray> pv;
  ExogenousSeries forecast;
  TariffSchedule tariff;
  double step_hours = 1.0;
  std::size_t horizon_steps = 24;

  bool has_heat_source() const { return heat_pump || boiler || chp; }
  void validate() const;
};

/// Local measured state handed to the regulator each step.
struct ControllerState {
  double temperature = 20.0;
  double battery_soc = 0.0;
  double tank_soc = 0.0;

  static ControllerState initial(const ControllerModel& model);
  bool operator==(const ControllerState&) const = default;
};

struct MpcInput {
  std::size_t k0 = 0;   // absolute simulation step (hour 0 of day 0 is step 0)
  ControllerState x0;
  Profile sigma;        // aggregate plan of all other controllers
  std::optional<Band> band;
  std::size_t band_steps = 0; // leading horizon steps covered by the band
  std::optional<double> global_limit;
};

/// Inputs of one step, in the fixed wire order used by SubmitPlan.
struct Setpoints {
  double heat_pump_power = 0.0;
  double boiler_heat = 0.0;
  double chp_fuel = 0.0;
  double battery_charge = 0.0;
  double battery_discharge = 0.0;
  double tank_in = 0.0;
  double tank_out = 0.0;
  double space_heat = 0.0;
  double dhw_shortfall = 0.0;

  static constexpr std::size_t kCount = 9;
  std::array<double, kCount> to_array() const;
  static Setpoints from_array(const std::array<double, kCount>& a);
  bool operator==(const Setpoints&) const = default;
};

struct CostBreakdown {
  double opex = 0.0;     // energy and fuel
  double comfort = 0.0;  // comfort-box and hot-water shortfall penalties
  double grid = 0.0;     // committed-band deadband penalty
  double terminal = 0.0; // end-of-horizon storage penalty
  double total() const { return opex + comfort + grid + terminal; }
};

struct MpcPlan {
  Profile net_load; // import - export at the bus
  Profile import;
  Profile export_;
  std::vector<Setpoints> schedule;
  std::vector<double> temperature; // T(k+1)
  std::vector<double> battery_soc; // soc(k+1), empty without battery
  std::vector<double> tank_soc;    // soc(k+1), empty without tank
  CostBreakdown cost;
  double objective = 0.0;
  std::size_t pivots = 0;
};

/// Variable and row layout of a built MPC problem.
struct MpcLayout {
  std::vector<std::size_t> import, export_, net;
  std::vector<std::size_t> band_rows; // row index per band step
  std::vector<std::size_t> band_over, band_under;
  std::vector<std::size_t> dhw_shortfall;
  std::vector<std::size_t> terminal_slack;
  BuildingVars building;
  std::optional<HeatPumpVars> heat_pump;
  std::optional<BoilerVars> boiler;
  std::optional<ChpVars> chp;
  std::optional<BatteryVars> battery;
  std::optional<TankVars> tank;
  BalanceRows balance;
  TimeGrid grid;
};

struct MpcProblem {
  lp::LpProblem lp;
  MpcLayout layout;
};

/// Terminal storage target as a fraction of the initial state of charge.
inline constexpr double kTerminalFraction = 0.5;
/// CHF per kWh below the terminal target.
inline constexpr double kTerminalPenalty = 0.01;

/// Horizon grid starting at absolute step k0.
TimeGrid horizon_grid(const ControllerModel& model, std::size_t k0);

MpcProblem build_problem(const ControllerModel& model, const MpcInput& input);

/// Reads a plan out of an optimal LP solution.
MpcPlan extract_plan(const ControllerModel& model, const MpcInput& input, const MpcProblem& problem,
                     const lp::LpSolution& solution);

/// The MPC subproblem was infeasible.
class MpcInfeasible : public RuntimeFailure {
public:
  using RuntimeFailure::RuntimeFailure;
};

/// Cold build and solve.
MpcPlan solve_mpc(const ControllerModel& model, const MpcInput& input);

/// A regulator that keeps the simplex basis between calls. When only the
/// aggregate of the others (and therefore the band and global-limit
/// bounds) changes, the previous optimal basis is reused.
class MpcController {
public:
  explicit MpcController(ControllerModel model);
  ~MpcController();
  MpcController(MpcController&&) noexcept;
  MpcController& operator=(MpcController&&) noexcept;

  const ControllerModel& model() const { return model_; }
  MpcPlan solve(const MpcInput& input);

private:
  struct Cache;
  ControllerModel model_;
  std::unique_ptr<Cache> cache_;
};

} // namespace gridweave
