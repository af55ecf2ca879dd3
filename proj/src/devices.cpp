#include "gridweave/devices.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridweave {

namespace {

constexpr double kSocTol = 1e-7;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void add_coef(lp::LpProblem& lp, const std::vector<std::size_t>& rows, std::size_t k,
              std::size_t var, double coef) {
  if (rows.empty()) return;
  lp.rows[rows[k]].terms.push_back({var, coef});
}

double clamp_soc(double soc, double capacity, const char* what) {
  if (soc < -kSocTol || soc > capacity + kSocTol)
    throw SocOutOfRange(std::string(what) + " state of charge " + std::to_string(soc) +
                        " kWh outside [0, " + std::to_string(capacity) + "]");
  return std::clamp(soc, 0.0, capacity);
}

} // namespace

RcBuilding RcBuilding::with_default_comfort(double heat_capacity, double loss_coefficient,
                                            double t_init) {
  RcBuilding b;
  b.heat_capacity = heat_capacity;
  b.loss_coefficient = loss_coefficient;
  b.t_init = t_init;
  for (int h = 0; h < 24; ++h) {
    b.comfort_min[static_cast<std::size_t>(h)] = (h >= 7 && h < 22) ? 20.0 : 17.0;
    b.comfort_max[static_cast<std::size_t>(h)] = 24.0;
  }
  return b;
}

bool RcBuilding::has_comfort_bounds() const {
  for (std::size_t h = 0; h < 24; ++h)
    if (std::isfinite(comfort_min[h]) || std::isfinite(comfort_max[h])) return true;
  return false;
}

void RcBuilding::validate() const {
  require(std::isfinite(heat_capacity) && heat_capacity > 0.0, "heat_capacity must be > 0");
  require(finite_nonneg(loss_coefficient), "loss_coefficient must be >= 0");
  require(std::isfinite(t_init), "t_init must be finite");
  for (std::size_t h = 0; h < 24; ++h)
    require(!(comfort_min[h] > comfort_max[h]),
            "comfort_min exceeds comfort_max at hour " + std::to_string(h));
}

void HeatPump::validate() const {
  require(std::isfinite(cop) && cop > 1.0, "heat pump cop must be > 1");
  require(finite_nonneg(p_max), "heat pump p_max must be >= 0");
}

void GasBoiler::validate() const {
  require(efficiency > 0.0 && efficiency <= 1.0, "boiler efficiency must be in (0, 1]");
  require(finite_nonneg(q_max), "boiler q_max must be >= 0");
}

void Chp::validate() const {
  require(eta_e > 0.0 && eta_e < 1.0, "chp eta_e must be in (0, 1)");
  require(eta_th > 0.0 && eta_th < 1.0, "chp eta_th must be in (0, 1)");
  require(eta_e + eta_th <= 1.0, "chp eta_e + eta_th must be <= 1");
  require(finite_nonneg(fuel_max), "chp fuel_max must be >= 0");
}

void Battery::validate() const {
  require(finite_nonneg(capacity), "battery capacity must be >= 0");
  require(finite_nonneg(p_charge_max), "battery p_charge_max must be >= 0");
  require(finite_nonneg(p_discharge_max), "battery p_discharge_max must be >= 0");
  require(eta_c > 0.0 && eta_c <= 1.0, "battery eta_c must be in (0, 1]");
  require(eta_d > 0.0 && eta_d <= 1.0, "battery eta_d must be in (0, 1]");
  require(finite_nonneg(soc_init) && soc_init <= capacity, "battery soc_init must be in [0, capacity]");
}

void HotWaterTank::validate() const {
  require(finite_nonneg(capacity), "tank capacity must be >= 0");
  require(standing_loss >= 0.0 && standing_loss < 1.0, "tank standing_loss must be in [0, 1)");
  require(finite_nonneg(q_charge_max), "tank q_charge_max must be >= 0");
  require(finite_nonneg(soc_init) && soc_init <= capacity, "tank soc_init must be in [0, capacity]");
}

void PvArray::validate() const {
  require(finite_nonneg(area), "pv area must be >= 0");
  require(efficiency >= 0.0 && efficiency <= 1.0, "pv efficiency must be in [0, 1]");
}

void ExogenousSeries::validate() const {
  const std::size_t n = t_out.size();
  require(n > 0, "exogenous series are empty");
  require(irradiance.size() == n && base_load.size() == n && dhw_draw.size() == n,
          "exogenous series have unequal lengths");
  for (std::size_t k = 0; k < n; ++k) {
    require(std::isfinite(t_out[k]), "t_out must be finite");
    require(finite_nonneg(irradiance[k]), "irradiance must be >= 0");
    require(finite_nonneg(base_load[k]), "base_load must be >= 0");
    require(finite_nonneg(dhw_draw[k]), "dhw_draw must be >= 0");
  }
}

double step_building(double temperature, double q_heat, double t_out, double dt, const RcBuilding& b) {
  require(dt > 0.0, "step_building needs dt > 0");
  return temperature + (dt / b.heat_capacity) * (q_heat - b.loss_coefficient * (temperature - t_out));
}

double step_battery(double soc, double p_charge, double p_discharge, double dt, const Battery& b) {
  require(p_charge >= -kSocTol && p_charge <= b.p_charge_max + kSocTol,
          "battery charge power outside [0, p_charge_max]");
  require(p_discharge >= -kSocTol && p_discharge <= b.p_discharge_max + kSocTol,
          "battery discharge power outside [0, p_discharge_max]");
  const double next = soc + b.eta_c * p_charge * dt - (p_discharge / b.eta_d) * dt;
  return clamp_soc(next, b.capacity, "battery");
}

double step_tank(double soc, double q_in, double q_draw, double dt, const HotWaterTank& t) {
  require(q_in >= -kSocTol && q_in <= t.q_charge_max + kSocTol, "tank inflow outside [0, q_charge_max]");
  require(q_draw >= -kSocTol, "tank draw must be >= 0");
  const double next = soc * (1.0 - t.standing_loss * dt) + (q_in - q_draw) * dt;
  return clamp_soc(next, t.capacity, "tank");
}

double pv_output(double irradiance, const PvArray& pv) { return irradiance * pv.area * pv.efficiency; }

BuildingVars emit_building(const RcBuilding& b, double t0, std::span<const double> t_out,
                           double comfort_cost, const HorizonContext& ctx, lp::LpProblem& lp,
                           const BalanceRows& balance) {
  const std::size_t n = ctx.grid.n_steps;
  const double dt = ctx.grid.step_hours;
  const double keep = 1.0 - dt * b.loss_coefficient / b.heat_capacity;
  const double gain = dt / b.heat_capacity;
  const double leak = dt * b.loss_coefficient / b.heat_capacity;
  const bool comfort = b.has_comfort_bounds();
  BuildingVars v;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t q = lp.add_var(0.0, lp::kInf);
    const std::size_t t = lp.add_var(-lp::kInf, lp::kInf);
    v.space_heat.push_back(q);
    v.temperature.push_back(t);
    add_coef(lp, balance.heat, k, q, -1.0);

    // T(k+1) - keep*T(k) - gain*q(k) = leak*t_out(k)
    std::vector<lp::Term> terms{{t, 1.0}, {q, -gain}};
    double rhs = leak * t_out[k];
    if (k == 0) rhs += keep * t0;
    else terms.push_back({v.temperature[k - 1], -keep});
    lp.add_row(lp::Row::equal(std::move(terms), rhs));

    const auto hour = static_cast<std::size_t>(ctx.grid.hour_of(k + 1));
    const double lo = b.comfort_min[hour];
    const double hi = b.comfort_max[hour];
    if (comfort) {
      const std::size_t s_lo = lp.add_var(0.0, lp::kInf, comfort_cost * dt);
      const std::size_t s_hi = lp.add_var(0.0, lp::kInf, comfort_cost * dt);
      v.comfort_low.push_back(s_lo);
      v.comfort_high.push_back(s_hi);
      lp.add_row(lp::Row::range({{t, 1.0}, {s_lo, 1.0}, {s_hi, -1.0}}, lo, hi));
    }
  }
  return v;
}

HeatPumpVars emit_heat_pump(const HeatPump& hp, const HorizonContext& ctx, lp::LpProblem& lp,
                            const BalanceRows& balance) {
  HeatPumpVars v;
  for (std::size_t k = 0; k < ctx.grid.n_steps; ++k) {
    const std::size_t p = lp.add_var(0.0, hp.p_max);
    v.power.push_back(p);
    add_coef(lp, balance.electric, k, p, -1.0);
    add_coef(lp, balance.heat, k, p, hp.cop);
  }
  return v;
}

BoilerVars emit_boiler(const GasBoiler& boiler, const HorizonContext& ctx, lp::LpProblem& lp,
                       const BalanceRows& balance) {
  BoilerVars v;
  const double cost = ctx.fuel_price / boiler.efficiency * ctx.grid.step_hours;
  for (std::size_t k = 0; k < ctx.grid.n_steps; ++k) {
    const std::size_t q = lp.add_var(0.0, boiler.q_max, cost);
    v.heat.push_back(q);
    add_coef(lp, balance.heat, k, q, 1.0);
  }
  return v;
}

ChpVars emit_chp(const Chp& chp, const HorizonContext& ctx, lp::LpProblem& lp,
                 const BalanceRows& balance) {
  ChpVars v;
  const double cost = ctx.fuel_price * ctx.grid.step_hours;
  for (std::size_t k = 0; k < ctx.grid.n_steps; ++k) {
    const std::size_t f = lp.add_var(0.0, chp.fuel_max, cost);
    v.fuel.push_back(f);
    add_coef(lp, balance.electric, k, f, chp.eta_e);
    add_coef(lp, balance.heat, k, f, chp.eta_th);
  }
  return v;
}

BatteryVars emit_battery(const Battery& b, double soc0, const HorizonContext& ctx,
                         lp::LpProblem& lp, const BalanceRows& balance) {
  BatteryVars v;
  const double dt = ctx.grid.step_hours;
  for (std::size_t k = 0; k < ctx.grid.n_steps; ++k) {
    const std::size_t c = lp.add_var(0.0, b.p_charge_max);
    const std::size_t d = lp.add_var(0.0, b.p_discharge_max);
    const std::size_t s = lp.add_var(0.0, b.capacity);
    v.charge.push_back(c);
    v.discharge.push_back(d);
    v.soc.push_back(s);
    add_coef(lp, balance.electric, k, c, -1.0);
    add_coef(lp, balance.electric, k, d, 1.0);
    // soc(k+1) - soc(k) - eta_c*dt*c + dt/eta_d*d = 0
    std::vector<lp::Term> terms{{s, 1.0}, {c, -b.eta_c * dt}, {d, dt / b.eta_d}};
    double rhs = 0.0;
    if (k == 0) rhs = soc0;
    else terms.push_back({v.soc[k - 1], -1.0});
    lp.add_row(lp::Row::equal(std::move(terms), rhs));
  }
  return v;
}

TankVars emit_tank(const HotWaterTank& t, double soc0, const HorizonContext& ctx, lp::LpProblem& lp,
                   const BalanceRows& balance) {
  TankVars v;
  const double dt = ctx.grid.step_hours;
  const double keep = 1.0 - t.standing_loss * dt;
  for (std::size_t k = 0; k < ctx.grid.n_steps; ++k) {
    const std::size_t in = lp.add_var(0.0, t.q_charge_max);
    const std::size_t out = lp.add_var(0.0, t.q_charge_max);
    const std::size_t s = lp.add_var(0.0, t.capacity);
    v.in.push_back(in);
    v.out.push_back(out);
    v.soc.push_back(s);
    add_coef(lp, balance.heat, k, in, -1.0);
    add_coef(lp, balance.heat, k, out, 1.0);
    // soc(k+1) - keep*soc(k) - dt*in + dt*out = 0
    std::vector<lp::Term> terms{{s, 1.0}, {in, -dt}, {out, dt}};
    double rhs = 0.0;
    if (k == 0) rhs = keep * soc0;
    else terms.push_back({v.soc[k - 1], -keep});
    lp.add_row(lp::Row::equal(std::move(terms), rhs));
  }
  return v;
}

} // namespace gridweave
