#include "gridweave/mpc.hpp"

#include <cmath>

namespace gridweave {

void ControllerModel::validate() const {
  if (id.empty()) throw ValidationError("controller id must not be empty");
  building.validate();
  if (heat_pump) heat_pump->validate();
  if (boiler) boiler->validate();
  if (chp) chp->validate();
  if (battery) battery->validate();
  if (tank) tank->validate();
  if (pv) pv->validate();
  forecast.validate();
  tariff.validate();
  if (!(step_hours > 0.0)) throw ValidationError("controller " + id + ": step_hours must be > 0");
  if (horizon_steps < 1) throw ValidationError("controller " + id + ": horizon must have >= 1 step");
  if (building.has_comfort_bounds() && !has_heat_source())
    throw ValidationError("controller " + id + " has comfort bounds but no heat source");
}

ControllerState ControllerState::initial(const ControllerModel& model) {
  ControllerState s;
  s.temperature = model.building.t_init;
  s.battery_soc = model.battery ? model.battery->soc_init : 0.0;
  s.tank_soc = model.tank ? model.tank->soc_init : 0.0;
  return s;
}

std::array<double, Setpoints::kCount> Setpoints::to_array() const {
  return {heat_pump_power, boiler_heat, chp_fuel, battery_charge, battery_discharge,
          tank_in,         tank_out,    space_heat, dhw_shortfall};
}

Setpoints Setpoints::from_array(const std::array<double, kCount>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
}

TimeGrid horizon_grid(const ControllerModel& model, std::size_t k0) {
  TimeGrid sim{0, model.step_hours, k0 + 1};
  return TimeGrid{sim.hour_of(k0), model.step_hours, model.horizon_steps};
}

namespace {

void check_input(const ControllerModel& model, const MpcInput& input) {
  const std::size_t n = model.horizon_steps;
  if (input.sigma.size() != n)
    throw ValidationError("controller " + model.id + ": sigma has " +
                          std::to_string(input.sigma.size()) + " steps, horizon has " +
                          std::to_string(n));
  if (input.band) {
    if (input.band->committed.size() != n)
      throw ValidationError("controller " + model.id + ": band length differs from horizon");
    if (input.band_steps > n) throw ValidationError("band_steps exceeds horizon");
    if (!(input.band->half_width >= 0.0)) throw ValidationError("band half_width must be >= 0");
  }
  if (input.global_limit && !(*input.global_limit >= 0.0))
    throw ValidationError("global limit must be >= 0");
}

double net_lower(const MpcInput& in, std::size_t k) {
  return in.global_limit ? -*in.global_limit - in.sigma[k] : -lp::kInf;
}
double net_upper(const MpcInput& in, std::size_t k) {
  return in.global_limit ? *in.global_limit - in.sigma[k] : lp::kInf;
}
double band_row_lower(const MpcInput& in, std::size_t k) {
  return in.band->committed[k] - in.band->half_width - in.sigma[k];
}
double band_row_upper(const MpcInput& in, std::size_t k) {
  return in.band->committed[k] + in.band->half_width - in.sigma[k];
}

double value_or_zero(const std::vector<double>& x, const std::vector<std::size_t>& idx, std::size_t k) {
  return idx.empty() ? 0.0 : x[idx[k]];
}

} // namespace

MpcProblem build_problem(const ControllerModel& model, const MpcInput& input) {
  check_input(model, input);
  const std::size_t n = model.horizon_steps;
  const double dt = model.step_hours;
  const TariffSchedule& tariff = model.tariff;
  const ExogenousSeries& fc = model.forecast;

  MpcProblem out;
  lp::LpProblem& lp = out.lp;
  MpcLayout& lay = out.layout;
  lay.grid = horizon_grid(model, input.k0);
  const HorizonContext ctx{lay.grid, tariff.fuel_price};

  // Per-step balance rows first so device emitters can attach coefficients.
  std::vector<double> t_out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = fc.wrap(input.k0 + k);
    t_out[k] = fc.t_out[a];
    const double pv = model.pv ? pv_output(fc.irradiance[a], *model.pv) : 0.0;
    lay.balance.electric.push_back(lp.add_row(lp::Row::equal({}, fc.base_load[a] - pv)));
    lay.balance.heat.push_back(lp.add_row(lp::Row::equal({}, fc.dhw_draw[a])));
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double price = tariff_price(tariff, lay.grid.hour_of(k));
    const std::size_t imp = lp.add_var(0.0, lp::kInf, price * dt);
    const std::size_t exp = lp.add_var(0.0, lp::kInf, -tariff.export_price * dt);
    const std::size_t net = lp.add_var(net_lower(input, k), net_upper(input, k));
    // unserved hot water, capped by the draw so it never feeds space heat
    const std::size_t dhw = lp.add_var(0.0, fc.dhw_draw[fc.wrap(input.k0 + k)], tariff.c_p_conf * dt);
    lay.import.push_back(imp);
    lay.export_.push_back(exp);
    lay.net.push_back(net);
    lay.dhw_shortfall.push_back(dhw);
    lp.rows[lay.balance.electric[k]].terms.push_back({imp, 1.0});
    lp.rows[lay.balance.electric[k]].terms.push_back({exp, -1.0});
    lp.rows[lay.balance.heat[k]].terms.push_back({dhw, 1.0});
    lp.add_row(lp::Row::equal({{net, 1.0}, {imp, -1.0}, {exp, 1.0}}, 0.0));
  }

  lay.building = emit_building(model.building, input.x0.temperature, t_out, tariff.c_p_conf, ctx, lp,
                               lay.balance);
  if (model.heat_pump) lay.heat_pump = emit_heat_pump(*model.heat_pump, ctx, lp, lay.balance);
  if (model.boiler) lay.boiler = emit_boiler(*model.boiler, ctx, lp, lay.balance);
  if (model.chp) lay.chp = emit_chp(*model.chp, ctx, lp, lay.balance);
  if (model.battery) {
    lay.battery = emit_battery(*model.battery, input.x0.battery_soc, ctx, lp, lay.balance);
    const std::size_t slack = lp.add_var(0.0, lp::kInf, kTerminalPenalty);
    lay.terminal_slack.push_back(slack);
    lp.add_row(lp::Row::greater_equal({{lay.battery->soc.back(), 1.0}, {slack, 1.0}},
                                      kTerminalFraction * input.x0.battery_soc));
  }
  if (model.tank) {
    lay.tank = emit_tank(*model.tank, input.x0.tank_soc, ctx, lp, lay.balance);
    const std::size_t slack = lp.add_var(0.0, lp::kInf, kTerminalPenalty);
    lay.terminal_slack.push_back(slack);
    lp.add_row(lp::Row::greater_equal({{lay.tank->soc.back(), 1.0}, {slack, 1.0}},
                                      kTerminalFraction * input.x0.tank_soc));
  }

  // Deadband around the committed aggregate:
  //   c - hw - sigma <= net - over + under <= c + hw - sigma
  if (input.band) {
    for (std::size_t k = 0; k < input.band_steps; ++k) {
      const std::size_t over = lp.add_var(0.0, lp::kInf, tariff.c_p_grid * dt);
      const std::size_t under = lp.add_var(0.0, lp::kInf, tariff.c_p_grid * dt);
      lay.band_over.push_back(over);
      lay.band_under.push_back(under);
      lay.band_rows.push_back(lp.add_row(lp::Row::range(
          {{lay.net[k], 1.0}, {over, -1.0}, {under, 1.0}}, band_row_lower(input, k),
          band_row_upper(input, k))));
    }
  }
  return out;
}

MpcPlan extract_plan(const ControllerModel& model, const MpcInput& input, const MpcProblem& problem,
                     const lp::LpSolution& solution) {
  const std::size_t n = model.horizon_steps;
  const double dt = model.step_hours;
  const auto& x = solution.x;
  const MpcLayout& lay = problem.layout;
  const TariffSchedule& tariff = model.tariff;

  MpcPlan plan;
  plan.net_load = Profile(n);
  plan.import = Profile(n);
  plan.export_ = Profile(n);
  plan.schedule.resize(n);
  plan.pivots = solution.pivots;
  plan.objective = solution.objective_value;
  CostBreakdown& cost = plan.cost;

  for (std::size_t k = 0; k < n; ++k) {
    // Clip round-off so that the plan honors the bounds exactly.
    const auto nn = [](double v) { return v < 0.0 ? 0.0 : v; };
    plan.import[k] = nn(x[lay.import[k]]);
    plan.export_[k] = nn(x[lay.export_[k]]);
    plan.net_load[k] = x[lay.net[k]];
    Setpoints& s = plan.schedule[k];
    if (lay.heat_pump) s.heat_pump_power = nn(x[lay.heat_pump->power[k]]);
    if (lay.boiler) s.boiler_heat = nn(x[lay.boiler->heat[k]]);
    if (lay.chp) s.chp_fuel = nn(x[lay.chp->fuel[k]]);
    if (lay.battery) {
      s.battery_charge = nn(x[lay.battery->charge[k]]);
      s.battery_discharge = nn(x[lay.battery->discharge[k]]);
      plan.battery_soc.push_back(x[lay.battery->soc[k]]);
    }
    if (lay.tank) {
      s.tank_in = nn(x[lay.tank->in[k]]);
      s.tank_out = nn(x[lay.tank->out[k]]);
      plan.tank_soc.push_back(x[lay.tank->soc[k]]);
    }
    s.space_heat = nn(x[lay.building.space_heat[k]]);
    s.dhw_shortfall = nn(x[lay.dhw_shortfall[k]]);
    plan.temperature.push_back(x[lay.building.temperature[k]]);

    const double price = tariff_price(tariff, lay.grid.hour_of(k));
    cost.opex += (price * x[lay.import[k]] - tariff.export_price * x[lay.export_[k]]) * dt;
    if (lay.boiler) cost.opex += tariff.fuel_price / model.boiler->efficiency * dt * x[lay.boiler->heat[k]];
    if (lay.chp) cost.opex += tariff.fuel_price * dt * x[lay.chp->fuel[k]];
    cost.comfort += tariff.c_p_conf * dt *
                    (value_or_zero(x, lay.building.comfort_low, k) +
                     value_or_zero(x, lay.building.comfort_high, k) + x[lay.dhw_shortfall[k]]);
  }
  for (std::size_t k = 0; k < lay.band_rows.size(); ++k)
    cost.grid += tariff.c_p_grid * dt * (x[lay.band_over[k]] + x[lay.band_under[k]]);
  for (std::size_t s : lay.terminal_slack) cost.terminal += kTerminalPenalty * x[s];
  (void)input;
  return plan;
}

namespace {

MpcPlan finish(const ControllerModel& model, const MpcInput& input, const MpcProblem& problem,
               const lp::LpSolution& sol) {
  if (sol.status != lp::Status::Optimal)
    throw MpcInfeasible("controller " + model.id + ": MPC problem " + lp::to_string(sol.status) +
                        " at step " + std::to_string(input.k0));
  return extract_plan(model, input, problem, sol);
}

} // namespace

MpcPlan solve_mpc(const ControllerModel& model, const MpcInput& input) {
  MpcProblem problem = build_problem(model, input);
  const lp::LpSolution sol = lp::solve_lp(problem.lp);
  return finish(model, input, problem, sol);
}

struct MpcController::Cache {
  MpcProblem problem;
  lp::SimplexSolver solver;
  std::size_t k0;
  ControllerState x0;
  bool has_band;
  std::size_t band_steps;
  bool has_limit;
};

MpcController::MpcController(ControllerModel model) : model_(std::move(model)) { model_.validate(); }
MpcController::~MpcController() = default;
MpcController::MpcController(MpcController&&) noexcept = default;
MpcController& MpcController::operator=(MpcController&&) noexcept = default;

MpcPlan MpcController::solve(const MpcInput& input) {
  const bool reuse = cache_ && cache_->k0 == input.k0 && cache_->x0 == input.x0 &&
                     cache_->has_band == input.band.has_value() &&
                     cache_->band_steps == (input.band ? input.band_steps : 0) &&
                     cache_->has_limit == input.global_limit.has_value();
  if (!reuse) {
    MpcProblem problem = build_problem(model_, input);
    lp::SimplexSolver solver(problem.lp);
    cache_ = std::make_unique<Cache>(Cache{std::move(problem), std::move(solver), input.k0, input.x0,
                                           input.band.has_value(),
                                           input.band ? input.band_steps : 0,
                                           input.global_limit.has_value()});
  } else {
    check_input(model_, input);
    const MpcLayout& lay = cache_->problem.layout;
    for (std::size_t k = 0; k < lay.net.size(); ++k)
      cache_->solver.set_var_bounds(lay.net[k], net_lower(input, k), net_upper(input, k));
    for (std::size_t k = 0; k < lay.band_rows.size(); ++k)
      cache_->solver.set_row_bounds(lay.band_rows[k], band_row_lower(input, k), band_row_upper(input, k));
  }
  const lp::LpSolution sol = cache_->solver.solve();
  return finish(model_, input, cache_->problem, sol);
}

} // namespace gridweave
