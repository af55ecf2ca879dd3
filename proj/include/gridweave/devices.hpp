#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/error.hpp"
#include "gridweave/lp.hpp"

namespace gridweave {

/// First-order RC thermal envelope:
///   T' = T + dt/C * (q_heat - U_loss * (T - t_out))
constexpr std::array<double, 24> hourly(double v) {
  std::array<double, 24> a{};
  for (auto& x : a) x = v;
  return a;
}

struct RcBuilding {
  double heat_capacity = 10.0;   // kWh/K
  double loss_coefficient = 0.2; // kW/K
  // unbounded unless set
  std::array<double, 24> comfort_min = hourly(-std::numeric_limits<double>::infinity());
  std::array<double, 24> comfort_max = hourly(std::numeric_limits<double>::infinity());
  double t_init = 20.0; // degC

  /// 17 degC at night, 20 degC from 07:00 to 22:00, 24 degC ceiling.
  static RcBuilding with_default_comfort(double heat_capacity, double loss_coefficient,
                                         double t_init);
  bool has_comfort_bounds() const;
  void validate() const;
};

struct HeatPump {
  double cop = 3.0;
  double p_max = 3.0; // kW_e
  void validate() const;
};

struct GasBoiler {
  double efficiency = 0.9;
  double q_max = 15.0; // kW_th
  void validate() const;
};

struct Chp {
  double eta_e = 0.30;
  double eta_th = 0.60;
  double fuel_max = 20.0; // kW_fuel
  void validate() const;
};

struct Battery {
  double capacity = 3.0; // kWh
  double p_charge_max = 1.5;
  double p_discharge_max = 1.5;
  double eta_c = 0.95;
  double eta_d = 0.95;
  double soc_init = 1.5;
  void validate() const;
};

struct HotWaterTank {
  double capacity = 34.8;       // kWh_th
  double standing_loss = 0.01;  // fraction per hour
  double q_charge_max = 6.0;    // kW_th, also caps the outflow
  double soc_init = 10.0;
  void validate() const;
};

struct PvArray {
  double area = 50.0; // m2
  double efficiency = 0.15;
  void validate() const;
};

/// Hourly exogenous inputs of one building. Indexed by absolute simulation
/// step; lookups wrap around the series length.
struct ExogenousSeries {
  std::vector<double> t_out;       // degC
  std::vector<double> irradiance;  // kW/m2
  std::vector<double> base_load;   // kW_e
  std::vector<double> dhw_draw;    // kW_th

  std::size_t size() const { return t_out.size(); }
  std::size_t wrap(std::size_t k) const { return k % t_out.size(); }
  void validate() const;
};

/// A storage step left the admissible [0, capacity] range.
class SocOutOfRange : public RuntimeFailure {
public:
  using RuntimeFailure::RuntimeFailure;
};

double step_building(double temperature, double q_heat, double t_out, double dt, const RcBuilding& b);
double step_battery(double soc, double p_charge, double p_discharge, double dt, const Battery& b);
double step_tank(double soc, double q_in, double q_draw, double dt, const HotWaterTank& t);
double pv_output(double irradiance, const PvArray& pv);

// ---------------------------------------------------------------------------
// LP fragments. Each emitter allocates its variables in `lp`, adds its
// dynamics rows, and adds its coefficients to the shared per-step balance
// rows when those are given. Electric balance rows read
//   import - export - consumption + generation = base_load - pv
// and heat balance rows read
//   sum(heat out) + tank_out - tank_in - space_heat + dhw_shortfall = dhw.
// ---------------------------------------------------------------------------

struct BalanceRows {
  std::vector<std::size_t> electric;
  std::vector<std::size_t> heat;
};

struct HorizonContext {
  TimeGrid grid;        // hours of the horizon steps
  double fuel_price = 0.0;
};

struct BuildingVars {
  std::vector<std::size_t> temperature;   // T(k+1)
  std::vector<std::size_t> space_heat;
  std::vector<std::size_t> comfort_low;   // slack below comfort_min
  std::vector<std::size_t> comfort_high;  // slack above comfort_max
};

struct HeatPumpVars { std::vector<std::size_t> power; };
struct BoilerVars { std::vector<std::size_t> heat; };
struct ChpVars { std::vector<std::size_t> fuel; };
struct BatteryVars {
  std::vector<std::size_t> charge;
  std::vector<std::size_t> discharge;
  std::vector<std::size_t> soc; // soc(k+1)
};
struct TankVars {
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;
  std::vector<std::size_t> soc; // soc(k+1)
};

BuildingVars emit_building(const RcBuilding& b, double t0, std::span<const double> t_out,
                           double comfort_cost, const HorizonContext& ctx, lp::LpProblem& lp,
                           const BalanceRows& balance);
HeatPumpVars emit_heat_pump(const HeatPump& hp, const HorizonContext& ctx, lp::LpProblem& lp,
                            const BalanceRows& balance);
BoilerVars emit_boiler(const GasBoiler& boiler, const HorizonContext& ctx, lp::LpProblem& lp,
                       const BalanceRows& balance);
ChpVars emit_chp(const Chp& chp, const HorizonContext& ctx, lp::LpProblem& lp,
                 const BalanceRows& balance);
BatteryVars emit_battery(const Battery& b, double soc0, const HorizonContext& ctx,
                         lp::LpProblem& lp, const BalanceRows& balance);
TankVars emit_tank(const HotWaterTank& t, double soc0, const HorizonContext& ctx, lp::LpProblem& lp,
                   const BalanceRows& balance);

} // namespace gridweave
