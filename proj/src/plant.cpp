#include "gridweave/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "gridweave/devices.hpp"

namespace gridweave {

Profile SimResult::realized_profile() const {
  std::vector<double> v;
  v.reserve(steps.size());
  for (const auto& s : steps) v.push_back(s.realized);
  return Profile(std::move(v));
}

Profile SimResult::scheduled_profile() const {
  std::vector<double> v;
  v.reserve(steps.size());
  for (const auto& s : steps) v.push_back(s.scheduled);
  return Profile(std::move(v));
}

std::vector<double> ar1_series(std::size_t n, double phi, double sigma, std::uint64_t seed) {
  std::vector<double> e(n, 0.0);
  if (sigma == 0.0 || n == 0) return e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double innovation = sigma * std::sqrt(1.0 - phi * phi);
  e[0] = sigma * z(rng);
  for (std::size_t k = 1; k < n; ++k) e[k] = phi * e[k - 1] + innovation * z(rng);
  return e;
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 of (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double comfort_gap(const RcBuilding& b, int hour, double t) {
  const auto h = static_cast<std::size_t>(hour);
  double gap = 0.0;
  if (std::isfinite(b.comfort_min[h])) gap += std::max(0.0, b.comfort_min[h] - t);
  if (std::isfinite(b.comfort_max[h])) gap += std::max(0.0, t - b.comfort_max[h]);
  return gap;
}

} // namespace

SimResult run_closed_loop(const Scenario& sc, const SimConfig& cfg, ControllerLink* link_in) {
  sc.validate();
  const std::size_t days = cfg.days.value_or(sc.days);
  const std::uint64_t seed = cfg.seed.value_or(sc.seed);
  if (days < 1) throw ValidationError("days must be >= 1");
  const std::size_t nb = sc.buildings.size();
  for (const auto& m : sc.buildings) {
    if (m.step_hours != 1.0 || m.horizon_steps != 24)
      throw ValidationError("closed-loop runs use hourly steps and a 24-step horizon (building " + m.id + ")");
  }
  const std::size_t n = 24;
  const double dt = 1.0;
  const std::size_t total = days * 24;

  std::unique_ptr<LocalLink> local;
  if (!link_in) local = std::make_unique<LocalLink>(sc.buildings);
  ControllerLink& link = link_in ? *link_in : *local;
  if (link.size() != nb) throw ValidationError("controller link does not match the scenario's buildings");
  for (std::size_t i = 0; i < nb; ++i)
    if (link.id(i) != sc.buildings[i].id)
      throw ValidationError("controller " + std::to_string(i) + " is '" + link.id(i) + "', expected '" +
                            sc.buildings[i].id + "'");

  SimResult r;
  r.scenario = sc.name;
  r.tariff_name = sc.tariff_name;
  r.tariff = sc.tariff;
  r.coordinate = cfg.coordinate;
  r.seed = seed;
  r.days = days;
  r.step_hours = dt;
  r.half_width = sc.band_half_width;
  r.global_limit = cfg.coordinate ? sc.global_limit : std::nullopt;
  r.buses = sc.building_bus;
  for (const auto& b : sc.network.buses) r.network_buses.push_back(b.id);
  std::vector<ControllerState> x;
  for (const auto& m : sc.buildings) {
    r.ids.push_back(m.id);
    x.push_back(ControllerState::initial(m));
  }
  r.initial = x;
  r.buildings.assign(nb, {});

  // forecast errors
  const bool noisy = !cfg.perfect_forecast;
  std::vector<double> irr_noise =
      noisy ? ar1_series(total, sc.noise.phi, sc.noise.irradiance_sigma, stream_seed(seed, 0)) : std::vector<double>(total, 0.0);
  std::vector<std::vector<double>> load_noise(nb);
  for (std::size_t i = 0; i < nb; ++i)
    load_noise[i] = noisy ? ar1_series(total, sc.noise.phi, sc.noise.base_load_sigma, stream_seed(seed, i + 1))
                          : std::vector<double>(total, 0.0);

  IsoState state(r.ids, n);
  std::vector<Profile> seed_plans(nb, Profile(n));
  std::optional<std::size_t> seed_step;
  Band day_band{Profile(n), sc.band_half_width};
  std::uint64_t round_id = 0;

  for (std::size_t k = 0; k < total; ++k) {
    const int h = static_cast<int>(k % 24);
    auto round = [&](const char* phase, std::optional<Band> band, std::size_t band_steps) {
      state.seed(seed_plans, seed_step && *seed_step + 1 == k);
      RoundContext ctx;
      ctx.k0 = k;
      ctx.x0 = x;
      ctx.band = std::move(band);
      ctx.band_steps = band_steps;
      ctx.global_limit = r.global_limit;
      ctx.coordinate = cfg.coordinate;
      ctx.round_id = round_id++;
      RoundResult res;
      try {
        res = run_round(link, state, ctx, sc.convergence);
      } catch (const Error& e) {
        throw RuntimeFailure("day " + std::to_string(k / 24) + " hour " + std::to_string(h) + " (" + phase +
                             "): " + e.what());
      }
      r.rounds.push_back(RoundLog{ctx.round_id, k, phase, res.iterations_used, res.converged, res.residual});
      for (std::size_t i = 0; i < nb; ++i) seed_plans[i] = res.plans[i].net_load;
      seed_step = k;
      return res;
    };

    if (h == 0) {
      RoundResult da = round("day_ahead", std::nullopt, 0);
      day_band = commit_day_ahead(da, sc.band_half_width);
      r.committed_days.push_back(day_band.committed);
    }
    std::optional<Band> band;
    const std::size_t band_steps = 24 - static_cast<std::size_t>(h);
    if (cfg.coordinate) {
      Band hb{Profile(n), sc.band_half_width};
      for (std::size_t j = 0; j < band_steps; ++j) hb.committed[j] = day_band.committed[static_cast<std::size_t>(h) + j];
      band = std::move(hb);
    }
    RoundResult res = round("intraday", std::move(band), cfg.coordinate ? band_steps : 0);

    // apply the first move to the true plant
    StepLog log;
    log.step = k;
    log.hour = h;
    log.committed = day_band.committed[static_cast<std::size_t>(h)];
    log.low_tariff = sc.tariff.is_low_tariff(h);
    const int next_hour = static_cast<int>((k + 1) % 24);
    const double irr_err = irr_noise[k];
    for (std::size_t i = 0; i < nb; ++i) {
      const ControllerModel& m = sc.buildings[i];
      const ExogenousSeries& f = m.forecast;
      const std::size_t kk = f.wrap(k);
      const Setpoints& sp = res.plans[i].first_step;
      BuildingStep bs;
      bs.applied = sp;

      const double base_f = f.base_load[kk];
      const double irr_f = f.irradiance[kk];
      bs.base_load = std::max(0.0, base_f + load_noise[i][k]);
      const double irr = irr_f > 0.0 ? std::max(0.0, irr_f + irr_err) : irr_f;
      const double pv_f = m.pv ? pv_output(irr_f, *m.pv) : 0.0;
      bs.pv = m.pv ? pv_output(irr, *m.pv) : 0.0;

      bs.temperature = step_building(x[i].temperature, sp.space_heat, f.t_out[kk], dt, m.building);
      bs.battery_soc = m.battery ? step_battery(x[i].battery_soc, sp.battery_charge, sp.battery_discharge, dt, *m.battery)
                                 : x[i].battery_soc;
      bs.tank_soc = m.tank ? step_tank(x[i].tank_soc, sp.tank_in, sp.tank_out, dt, *m.tank) : x[i].tank_soc;

      const double devices = sp.heat_pump_power + sp.battery_charge - sp.battery_discharge -
                             (m.chp ? m.chp->eta_e * sp.chp_fuel : 0.0);
      const double net = bs.base_load - bs.pv + devices;
      bs.import = std::max(net, 0.0);
      bs.export_ = std::max(-net, 0.0);
      bs.balance_residual = std::abs(bs.import - bs.export_ - bs.base_load + bs.pv - devices);

      const double fuel = (m.boiler ? sp.boiler_heat / m.boiler->efficiency : 0.0) + sp.chp_fuel;
      bs.energy_cost = (bs.import * tariff_price(m.tariff, h) - bs.export_ * m.tariff.export_price +
                        fuel * m.tariff.fuel_price) *
                       dt;
      bs.comfort_cost = m.tariff.c_p_conf * dt *
                        ((m.building.has_comfort_bounds() ? comfort_gap(m.building, next_hour, bs.temperature) : 0.0) +
                         sp.dhw_shortfall);

      log.scheduled += res.plans[i].net_load[0];
      log.realized += net;
      log.forecast_error += (bs.base_load - base_f) - (bs.pv - pv_f);

      x[i] = ControllerState{bs.temperature, bs.battery_soc, bs.tank_soc};
      r.buildings[i].push_back(bs);
    }
    log.violation = std::max(0.0, std::abs(log.realized - log.committed) - sc.band_half_width);
    if (r.global_limit) {
      log.global_excess = std::max(0.0, std::abs(log.realized) - *r.global_limit);
      log.scheduled_excess = std::max(0.0, std::abs(log.scheduled) - *r.global_limit);
    }
    r.steps.push_back(log);
  }

  if (cfg.run_power_flow) {
    std::vector<double> p(sc.network.buses.size(), 0.0);
    for (std::size_t k = 0; k < total; ++k) {
      std::fill(p.begin(), p.end(), 0.0);
      for (std::size_t i = 0; i < nb; ++i) {
        const auto& bs = r.buildings[i][k];
        p[sc.network.index_of(sc.building_bus[i])] += bs.import - bs.export_;
      }
      r.power_flow.push_back(solve_power_flow(sc.network, injection_at_power_factor(p)));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MetricsTable compute_metrics(const SimResult& r, const TariffSchedule& tariff) {
  const double dt = r.step_hours;
  double low_sum = 0.0, high_sum = 0.0;
  std::size_t low_n = 0, high_n = 0;
  double total_energy = 0.0, import_energy = 0.0, export_energy = 0.0;
  double viol = 0.0, excess = 0.0;
  std::size_t viol_steps = 0, excess_steps = 0;
  double peak = 0.0, peak_import = -std::numeric_limits<double>::infinity(), sched_peak = 0.0;
  int peak_hour = 0, peak_import_hour = 0;
  std::array<double, 24> hour_sum{};
  std::array<std::size_t, 24> hour_n{};
  for (const auto& s : r.steps) {
    if (tariff.is_low_tariff(s.hour)) {
      low_sum += s.realized;
      ++low_n;
    } else {
      high_sum += s.realized;
      ++high_n;
    }
    total_energy += std::abs(s.realized) * dt;
    import_energy += std::max(s.realized, 0.0) * dt;
    export_energy += std::max(-s.realized, 0.0) * dt;
    viol += s.violation * dt;
    if (s.violation > 0.0) ++viol_steps;
    excess += s.global_excess * dt;
    if (s.global_excess > 0.0) ++excess_steps;
    if (std::abs(s.realized) > peak) {
      peak = std::abs(s.realized);
      peak_hour = s.hour;
    }
    if (s.realized > peak_import) {
      peak_import = s.realized;
      peak_import_hour = s.hour;
    }
    sched_peak = std::max(sched_peak, std::abs(s.scheduled));
    hour_sum[static_cast<std::size_t>(s.hour)] += s.realized;
    ++hour_n[static_cast<std::size_t>(s.hour)];
  }
  int mean_peak_hour = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < 24; ++h) {
    if (hour_n[h] == 0) continue;
    double m = hour_sum[h] / static_cast<double>(hour_n[h]);
    if (m > best) {
      best = m;
      mean_peak_hour = static_cast<int>(h);
    }
  }
  if (r.steps.empty()) peak_import = 0.0;

  double energy_cost = 0.0, comfort_cost = 0.0;
  for (const auto& b : r.buildings)
    for (const auto& s : b) {
      energy_cost += s.energy_cost;
      comfort_cost += s.comfort_cost;
    }

  std::size_t converged = 0;
  int max_it = 0;
  double it_sum = 0.0;
  for (const auto& rl : r.rounds) {
    converged += rl.converged ? 1 : 0;
    max_it = std::max(max_it, rl.iterations);
    it_sum += rl.iterations;
  }

  MetricsTable t;
  t.emplace_back("mean_power_low_tariff_kw", low_n ? low_sum / static_cast<double>(low_n) : 0.0);
  t.emplace_back("mean_power_high_tariff_kw", high_n ? high_sum / static_cast<double>(high_n) : 0.0);
  t.emplace_back("total_energy_kwh", total_energy);
  t.emplace_back("import_energy_kwh", import_energy);
  t.emplace_back("export_energy_kwh", export_energy);
  t.emplace_back("band_violation_total_kwh", viol);
  t.emplace_back("band_violation_mean_kwh", viol_steps ? viol / static_cast<double>(viol_steps) : 0.0);
  t.emplace_back("band_violation_relative", total_energy > 0.0 ? viol / total_energy : 0.0);
  t.emplace_back("band_violation_steps", static_cast<double>(viol_steps));
  t.emplace_back("global_excess_total_kwh", excess);
  t.emplace_back("global_excess_steps", static_cast<double>(excess_steps));
  t.emplace_back("iso_fee_chf", tariff.c_p_grid * viol + tariff.c_global * excess);
  t.emplace_back("peak_abs_kw", peak);
  t.emplace_back("peak_hour", peak_hour);
  t.emplace_back("peak_import_kw", peak_import);
  t.emplace_back("peak_import_hour", peak_import_hour);
  t.emplace_back("mean_profile_peak_hour", mean_peak_hour);
  t.emplace_back("scheduled_peak_abs_kw", sched_peak);
  t.emplace_back("energy_cost_chf", energy_cost);
  t.emplace_back("comfort_cost_chf", comfort_cost);
  t.emplace_back("rounds", static_cast<double>(r.rounds.size()));
  t.emplace_back("rounds_converged", static_cast<double>(converged));
  t.emplace_back("max_iterations", max_it);
  t.emplace_back("mean_iterations", r.rounds.empty() ? 0.0 : it_sum / static_cast<double>(r.rounds.size()));
  if (!r.power_flow.empty()) {
    DeviationReport d = deviation_report(r.power_flow);
    t.emplace_back("pf_max_voltage_deviation_pu", d.max_voltage_deviation);
    t.emplace_back("pf_max_angle_deg", d.max_angle_deg);
  }
  return t;
}

double metric(const MetricsTable& table, const std::string& name) {
  for (const auto& [k, v] : table)
    if (k == name) return v;
  throw ValidationError("no metric named '" + name + "'");
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path& p) : out_(p) {
    if (!out_) throw RuntimeFailure("cannot write " + p.string());
  }
  CsvWriter& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(num(v)); }
  CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  void end() {
    out_ << '\n';
    first_ = true;
  }

private:
  std::ofstream out_;
  bool first_ = true;
};

// Reads a headered CSV into string cells.
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ValidationError("column '" + name + "' missing");
  }
};

RawCsv read_raw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  RawCsv csv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (csv.header.empty()) {
      csv.header = std::move(cells);
    } else {
      if (cells.size() != csv.header.size()) throw ValidationError(p.string() + ": ragged row");
      csv.rows.push_back(std::move(cells));
    }
  }
  if (csv.header.empty()) throw ValidationError(p.string() + " is empty");
  return csv;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("'" + s + "' is not a number");
  }
}

} // namespace

void write_outputs(const SimResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t nb = r.ids.size();

  {
    CsvWriter w(dir / "run_info.csv");
    w.cell("key").cell("value").end();
    w.cell("scenario").cell(r.scenario).end();
    w.cell("tariff").cell(r.tariff_name).end();
    w.cell("coordination").cell(r.coordinate ? "on" : "off").end();
    w.cell("seed").cell(std::to_string(r.seed)).end();
    w.cell("days").cell(r.days).end();
    w.cell("step_hours").cell(r.step_hours).end();
    w.cell("band_half_width").cell(r.half_width).end();
    w.cell("global_limit").cell(r.global_limit ? num(*r.global_limit) : std::string("none")).end();
    w.cell("export_price").cell(r.tariff.export_price).end();
    w.cell("fuel_price").cell(r.tariff.fuel_price).end();
    w.cell("c_p_conf").cell(r.tariff.c_p_conf).end();
    w.cell("c_p_grid").cell(r.tariff.c_p_grid).end();
    w.cell("c_global").cell(r.tariff.c_global).end();
    for (std::size_t h = 0; h < 24; ++h) {
      char key[32];
      std::snprintf(key, sizeof key, "import_price_h%02zu", h);
      w.cell(key).cell(r.tariff.import_price[h]).end();
    }
  }
  {
    CsvWriter w(dir / "slack_profile.csv");
    w.cell("step").cell("hour").cell("scheduled_kw").cell("realized_kw").cell("forecast_error_kw").cell("low_tariff").end();
    for (const auto& s : r.steps)
      w.cell(s.step).cell(s.hour).cell(s.scheduled).cell(s.realized).cell(s.forecast_error).cell(s.low_tariff ? 1 : 0).end();
  }
  {
    CsvWriter w(dir / "band.csv");
    w.cell("step").cell("hour").cell("committed_kw").cell("lower_kw").cell("upper_kw").cell("violation_kw")
        .cell("global_excess_kw").cell("scheduled_excess_kw").end();
    for (const auto& s : r.steps)
      w.cell(s.step).cell(s.hour).cell(s.committed).cell(s.committed - r.half_width).cell(s.committed + r.half_width)
          .cell(s.violation).cell(s.global_excess).cell(s.scheduled_excess).end();
  }
  {
    CsvWriter w(dir / "soc.csv");
    w.cell("step").cell("hour").cell("battery_soc_total_kwh").cell("tank_soc_total_kwh");
    for (const auto& id : r.ids) w.cell(id + "_temperature_c").cell(id + "_battery_soc_kwh").cell(id + "_tank_soc_kwh");
    w.end();
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      double bat = 0.0, tank = 0.0;
      for (std::size_t i = 0; i < nb; ++i) {
        bat += r.buildings[i][k].battery_soc;
        tank += r.buildings[i][k].tank_soc;
      }
      w.cell(k).cell(r.steps[k].hour).cell(bat).cell(tank);
      for (std::size_t i = 0; i < nb; ++i)
        w.cell(r.buildings[i][k].temperature).cell(r.buildings[i][k].battery_soc).cell(r.buildings[i][k].tank_soc);
      w.end();
    }
  }
  {
    CsvWriter w(dir / "iterations.csv");
    w.cell("round").cell("step").cell("phase").cell("iterations").cell("converged").cell("residual_kw").end();
    for (const auto& rl : r.rounds)
      w.cell(std::to_string(rl.round)).cell(rl.step).cell(rl.phase).cell(rl.iterations).cell(rl.converged ? 1 : 0)
          .cell(rl.residual).end();
  }
  {
    CsvWriter w(dir / "costs.csv");
    w.cell("step").cell("building").cell("import_kw").cell("export_kw").cell("base_load_kw").cell("pv_kw")
        .cell("energy_cost_chf").cell("comfort_cost_chf").cell("balance_residual_kw");
    for (const char* name : {"heat_pump_power", "boiler_heat", "chp_fuel", "battery_charge", "battery_discharge",
                             "tank_in", "tank_out", "space_heat", "dhw_shortfall"})
      w.cell(name);
    w.end();
    for (std::size_t k = 0; k < r.steps.size(); ++k)
      for (std::size_t i = 0; i < nb; ++i) {
        const auto& b = r.buildings[i][k];
        w.cell(k).cell(r.ids[i]).cell(b.import).cell(b.export_).cell(b.base_load).cell(b.pv).cell(b.energy_cost)
            .cell(b.comfort_cost).cell(b.balance_residual);
        for (double v : b.applied.to_array()) w.cell(v);
        w.end();
      }
  }
  {
    CsvWriter w(dir / "bus_injections.csv");
    w.cell("step");
    for (const auto& bus : r.network_buses) w.cell(bus);
    w.end();
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      w.cell(k);
      for (const auto& bus : r.network_buses) {
        double p = 0.0;
        for (std::size_t i = 0; i < nb; ++i)
          if (r.buses[i] == bus) p += r.buildings[i][k].import - r.buildings[i][k].export_;
        w.cell(p);
      }
      w.end();
    }
  }
  if (!r.power_flow.empty()) {
    CsvWriter w(dir / "powerflow.csv");
    w.cell("step").cell("max_voltage_deviation_pu").cell("max_angle_deg").cell("slack_p_kw").cell("losses_kw")
        .cell("iterations");
    for (const auto& bus : r.network_buses) w.cell("v_" + bus);
    for (const auto& bus : r.network_buses) w.cell("angle_" + bus);
    w.end();
    for (std::size_t k = 0; k < r.power_flow.size(); ++k) {
      const auto& s = r.power_flow[k];
      DeviationReport d = deviation_report(std::span<const PowerFlowSolution>(&s, 1));
      w.cell(k).cell(d.max_voltage_deviation).cell(d.max_angle_deg).cell(s.slack_p_kw).cell(s.losses_kw)
          .cell(s.iterations);
      for (double v : s.v_pu) w.cell(v);
      for (double a : s.angle_deg) w.cell(a);
      w.end();
    }
  }
  {
    CsvWriter w(dir / "metrics.csv");
    w.cell("metric").cell("value").end();
    for (const auto& [k, v] : compute_metrics(r, r.tariff)) w.cell(k).cell(v).end();
  }
}

MetricsTable report_from_directory(const std::filesystem::path& dir) {
  SimResult r;
  std::map<std::string, std::string> info;
  {
    RawCsv c = read_raw(dir / "run_info.csv");
    for (const auto& row : c.rows) info[row[0]] = row[1];
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = info.find(k);
    if (it == info.end()) throw ValidationError("run_info.csv lacks '" + k + "'");
    return it->second;
  };
  r.tariff_name = get("tariff");
  r.step_hours = to_double(get("step_hours"));
  r.half_width = to_double(get("band_half_width"));
  if (get("global_limit") != "none") r.global_limit = to_double(get("global_limit"));
  r.tariff.export_price = to_double(get("export_price"));
  r.tariff.fuel_price = to_double(get("fuel_price"));
  r.tariff.c_p_conf = to_double(get("c_p_conf"));
  r.tariff.c_p_grid = to_double(get("c_p_grid"));
  r.tariff.c_global = to_double(get("c_global"));
  for (std::size_t h = 0; h < 24; ++h) {
    char key[32];
    std::snprintf(key, sizeof key, "import_price_h%02zu", h);
    r.tariff.import_price[h] = to_double(get(key));
  }

  RawCsv slack = read_raw(dir / "slack_profile.csv");
  RawCsv band = read_raw(dir / "band.csv");
  if (slack.rows.size() != band.rows.size()) throw ValidationError("slack_profile.csv and band.csv differ in length");
  for (std::size_t k = 0; k < slack.rows.size(); ++k) {
    const auto& s = slack.rows[k];
    const auto& b = band.rows[k];
    StepLog l;
    l.step = static_cast<std::size_t>(to_double(s[slack.col("step")]));
    l.hour = static_cast<int>(to_double(s[slack.col("hour")]));
    l.scheduled = to_double(s[slack.col("scheduled_kw")]);
    l.realized = to_double(s[slack.col("realized_kw")]);
    l.forecast_error = to_double(s[slack.col("forecast_error_kw")]);
    l.low_tariff = s[slack.col("low_tariff")] == "1";
    l.committed = to_double(b[band.col("committed_kw")]);
    l.violation = to_double(b[band.col("violation_kw")]);
    l.global_excess = to_double(b[band.col("global_excess_kw")]);
    l.scheduled_excess = to_double(b[band.col("scheduled_excess_kw")]);
    r.steps.push_back(l);
  }

  RawCsv it = read_raw(dir / "iterations.csv");
  for (const auto& row : it.rows) {
    RoundLog rl;
    rl.round = static_cast<std::uint64_t>(to_double(row[it.col("round")]));
    rl.step = static_cast<std::size_t>(to_double(row[it.col("step")]));
    rl.phase = row[it.col("phase")];
    rl.iterations = static_cast<int>(to_double(row[it.col("iterations")]));
    rl.converged = row[it.col("converged")] == "1";
    rl.residual = to_double(row[it.col("residual_kw")]);
    r.rounds.push_back(rl);
  }

  RawCsv costs = read_raw(dir / "costs.csv");
  std::map<std::string, std::size_t> index;
  for (const auto& row : costs.rows) {
    const std::string& id = row[costs.col("building")];
    auto [pos, inserted] = index.emplace(id, r.ids.size());
    if (inserted) {
      r.ids.push_back(id);
      r.buildings.emplace_back();
    }
    BuildingStep bs;
    bs.import = to_double(row[costs.col("import_kw")]);
    bs.export_ = to_double(row[costs.col("export_kw")]);
    bs.energy_cost = to_double(row[costs.col("energy_cost_chf")]);
    bs.comfort_cost = to_double(row[costs.col("comfort_cost_chf")]);
    r.buildings[pos->second].push_back(bs);
  }

  if (std::filesystem::exists(dir / "powerflow.csv")) {
    RawCsv pf = read_raw(dir / "powerflow.csv");
    for (const auto& row : pf.rows) {
      PowerFlowSolution s;
      for (std::size_t c = 0; c < pf.header.size(); ++c) {
        if (pf.header[c].rfind("v_", 0) == 0) s.v_pu.push_back(to_double(row[c]));
        else if (pf.header[c].rfind("angle_", 0) == 0) s.angle_deg.push_back(to_double(row[c]));
      }
      r.power_flow.push_back(std::move(s));
    }
  }
  return compute_metrics(r, r.tariff);
}

std::vector<PowerFlowSolution> replay_power_flow(const Network& net, const std::filesystem::path& csv) {
  RawCsv c = read_raw(csv);
  std::vector<std::size_t> cols;
  for (const auto& bus : net.buses) cols.push_back(c.col(bus.id));
  std::vector<PowerFlowSolution> out;
  std::vector<double> p(net.buses.size());
  for (const auto& row : c.rows) {
    for (std::size_t b = 0; b < cols.size(); ++b) p[b] = to_double(row[cols[b]]);
    out.push_back(solve_power_flow(net, injection_at_power_factor(p)));
  }
  return out;
}

} // namespace gridweave
