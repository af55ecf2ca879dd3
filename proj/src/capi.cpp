#include "gridweave/gridweave.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "gridweave/plant.hpp"
#include "gridweave/transport.hpp"

struct gw_scenario {
  gridweave::Scenario scenario;
};

struct gw_result {
  std::optional<gridweave::SimResult> sim;
  gridweave::MetricsTable metrics;
};

namespace {

thread_local std::string last_error;

gw_status fail(gw_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
gw_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const gridweave::ValidationError& e) {
    return fail(GW_ERR_VALIDATION, e.what());
  } catch (const gridweave::Error& e) {
    return fail(GW_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return fail(GW_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(GW_ERR_RUNTIME, "unknown failure");
  }
}

gridweave::SimConfig to_config(const gw_sim_options* o) {
  gridweave::SimConfig c;
  gw_sim_options d;
  gw_sim_options_init(&d);
  if (!o) o = &d;
  c.coordinate = o->coordinate != 0;
  if (o->days < 0) throw gridweave::ValidationError("days must be >= 0");
  if (o->days > 0) c.days = static_cast<std::size_t>(o->days);
  if (o->has_seed) c.seed = o->seed;
  c.perfect_forecast = o->perfect_forecast != 0;
  c.run_power_flow = o->power_flow != 0;
  return c;
}

} // namespace

extern "C" {

const char* gw_last_error(void) { return last_error.c_str(); }
const char* gw_version(void) { return "0.1.0"; }

gw_status gw_scenario_load(const char* path, gw_scenario** out) {
  if (!path || !out) return fail(GW_ERR_USAGE, "gw_scenario_load: null argument");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<gw_scenario>();
    s->scenario = gridweave::load_scenario(path);
    *out = s.release();
    return GW_OK;
  });
}

void gw_scenario_free(gw_scenario* scenario) { delete scenario; }

gw_status gw_scenario_set_tariff(gw_scenario* s, const char* name) {
  if (!s || !name) return fail(GW_ERR_USAGE, "gw_scenario_set_tariff: null argument");
  return guarded([&] {
    s->scenario.set_tariff(name);
    return GW_OK;
  });
}

gw_status gw_scenario_set_weather(gw_scenario* s, const char* csv_path) {
  if (!s || !csv_path) return fail(GW_ERR_USAGE, "gw_scenario_set_weather: null argument");
  return guarded([&] {
    s->scenario.set_weather(csv_path);
    return GW_OK;
  });
}

gw_status gw_scenario_set_global_limit(gw_scenario* s, double kw) {
  if (!s) return fail(GW_ERR_USAGE, "gw_scenario_set_global_limit: null scenario");
  if (kw > 0.0 && std::isfinite(kw)) s->scenario.global_limit = kw;
  else if (kw <= 0.0) s->scenario.global_limit.reset();
  else return fail(GW_ERR_VALIDATION, "global limit must be finite");
  return GW_OK;
}

gw_status gw_scenario_set_convergence(gw_scenario* s, double epsilon_kw, int max_iterations) {
  if (!s) return fail(GW_ERR_USAGE, "gw_scenario_set_convergence: null scenario");
  return guarded([&] {
    gridweave::ConvergenceConfig c{epsilon_kw, max_iterations};
    c.validate();
    s->scenario.convergence = c;
    return GW_OK;
  });
}

gw_status gw_scenario_set_half_width(gw_scenario* s, double kw) {
  if (!s) return fail(GW_ERR_USAGE, "gw_scenario_set_half_width: null scenario");
  if (!(kw >= 0.0) || !std::isfinite(kw)) return fail(GW_ERR_VALIDATION, "band half width must be >= 0");
  s->scenario.band_half_width = kw;
  return GW_OK;
}

size_t gw_scenario_building_count(const gw_scenario* s) { return s ? s->scenario.buildings.size() : 0; }

const char* gw_scenario_building_id(const gw_scenario* s, size_t index) {
  if (!s || index >= s->scenario.buildings.size()) return nullptr;
  return s->scenario.buildings[index].id.c_str();
}

void gw_sim_options_init(gw_sim_options* o) {
  if (!o) return;
  o->coordinate = 1;
  o->days = 0;
  o->has_seed = 0;
  o->seed = 0;
  o->perfect_forecast = 0;
  o->power_flow = 1;
}

gw_status gw_simulate(const gw_scenario* s, const gw_sim_options* options, gw_result** out) {
  if (!s || !out) return fail(GW_ERR_USAGE, "gw_simulate: null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<gw_result>();
    r->sim = gridweave::run_closed_loop(s->scenario, to_config(options));
    r->metrics = gridweave::compute_metrics(*r->sim, r->sim->tariff);
    *out = r.release();
    return GW_OK;
  });
}

gw_status gw_serve_iso(const gw_scenario* s, const gw_sim_options* options, const char* endpoint, double timeout_s,
                       gw_listen_callback on_listen, void* user, gw_result** out) {
  if (!s || !out) return fail(GW_ERR_USAGE, "gw_serve_iso: null argument");
  if (!(timeout_s > 0.0)) return fail(GW_ERR_USAGE, "gw_serve_iso: timeout must be > 0");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> ids;
    for (const auto& b : s->scenario.buildings) ids.push_back(b.id);
    gridweave::transport::IsoServer server(
        ids, 24, endpoint ? endpoint : "",
        std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0)));
    if (on_listen) on_listen(server.port(), user);
    auto r = std::make_unique<gw_result>();
    try {
      r->sim = gridweave::run_closed_loop(s->scenario, to_config(options), &server);
    } catch (...) {
      server.finish(false, 0);
      throw;
    }
    const auto& last = r->sim->rounds.back();
    server.finish(last.converged, last.iterations);
    r->metrics = gridweave::compute_metrics(*r->sim, r->sim->tariff);
    *out = r.release();
    return GW_OK;
  });
}

gw_status gw_run_controller(const gw_scenario* s, const char* building_id, const char* endpoint, size_t* solves_out) {
  if (!s || !building_id) return fail(GW_ERR_USAGE, "gw_run_controller: null argument");
  return guarded([&] {
    for (const auto& b : s->scenario.buildings) {
      if (b.id == building_id) {
        std::size_t n = gridweave::transport::run_controller(b, endpoint ? endpoint : "");
        if (solves_out) *solves_out = n;
        return GW_OK;
      }
    }
    return fail(GW_ERR_VALIDATION, std::string("scenario has no building '") + building_id + "'");
  });
}

void gw_result_free(gw_result* result) { delete result; }

gw_status gw_result_write(const gw_result* r, const char* dir) {
  if (!r || !dir) return fail(GW_ERR_USAGE, "gw_result_write: null argument");
  if (!r->sim) return fail(GW_ERR_USAGE, "gw_result_write: result holds no simulation");
  return guarded([&] {
    gridweave::write_outputs(*r->sim, dir);
    return GW_OK;
  });
}

size_t gw_result_metric_count(const gw_result* r) { return r ? r->metrics.size() : 0; }

gw_status gw_result_metric(const gw_result* r, size_t index, const char** name, double* value) {
  if (!r || !name || !value) return fail(GW_ERR_USAGE, "gw_result_metric: null argument");
  if (index >= r->metrics.size()) return fail(GW_ERR_USAGE, "gw_result_metric: index out of range");
  *name = r->metrics[index].first.c_str();
  *value = r->metrics[index].second;
  return GW_OK;
}

gw_status gw_result_metric_by_name(const gw_result* r, const char* name, double* value) {
  if (!r || !name || !value) return fail(GW_ERR_USAGE, "gw_result_metric_by_name: null argument");
  for (const auto& [k, v] : r->metrics) {
    if (k == name) {
      *value = v;
      return GW_OK;
    }
  }
  return fail(GW_ERR_USAGE, std::string("no metric named '") + name + "'");
}

size_t gw_result_step_count(const gw_result* r) { return (r && r->sim) ? r->sim->steps.size() : 0; }

gw_status gw_result_step(const gw_result* r, size_t index, gw_step* out) {
  if (!r || !out) return fail(GW_ERR_USAGE, "gw_result_step: null argument");
  if (!r->sim || index >= r->sim->steps.size()) return fail(GW_ERR_USAGE, "gw_result_step: index out of range");
  const auto& s = r->sim->steps[index];
  *out = gw_step{s.hour, s.scheduled, s.realized, s.forecast_error, s.committed, s.violation, s.global_excess};
  return GW_OK;
}

gw_status gw_report(const char* dir, gw_result** out) {
  if (!dir || !out) return fail(GW_ERR_USAGE, "gw_report: null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<gw_result>();
    r->metrics = gridweave::report_from_directory(dir);
    *out = r.release();
    return GW_OK;
  });
}

gw_status gw_powerflow_replay(const gw_scenario* s, const char* injections_csv, const char* out_csv,
                              double* max_voltage_deviation_pu, double* max_angle_deg) {
  if (!s || !injections_csv) return fail(GW_ERR_USAGE, "gw_powerflow_replay: null argument");
  return guarded([&] {
    const auto& net = s->scenario.network;
    auto sols = gridweave::replay_power_flow(net, injections_csv);
    if (out_csv) {
      std::ofstream o(out_csv);
      if (!o) throw gridweave::RuntimeFailure(std::string("cannot write ") + out_csv);
      o << "step,max_voltage_deviation_pu,max_angle_deg,slack_p_kw,losses_kw";
      for (const auto& b : net.buses) o << ",v_" << b.id;
      o << '\n';
      char buf[40];
      auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
      };
      for (std::size_t k = 0; k < sols.size(); ++k) {
        auto d = gridweave::deviation_report(std::span<const gridweave::PowerFlowSolution>(&sols[k], 1));
        o << k << ',' << num(d.max_voltage_deviation) << ',' << num(d.max_angle_deg) << ',' << num(sols[k].slack_p_kw)
          << ',' << num(sols[k].losses_kw);
        for (double v : sols[k].v_pu) o << ',' << num(v);
        o << '\n';
      }
    }
    auto d = gridweave::deviation_report(sols);
    if (max_voltage_deviation_pu) *max_voltage_deviation_pu = d.max_voltage_deviation;
    if (max_angle_deg) *max_angle_deg = d.max_angle_deg;
    return GW_OK;
  });
}

} // extern "C"
