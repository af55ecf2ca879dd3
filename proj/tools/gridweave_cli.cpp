// gridweave command line. Talks to the library through the C interface only.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridweave/gridweave.h"

namespace {

struct ScenarioHandle {
  gw_scenario* p = nullptr;
  ~ScenarioHandle() { gw_scenario_free(p); }
};

struct ResultHandle {
  gw_result* p = nullptr;
  ~ResultHandle() { gw_result_free(p); }
};

int report_failure(gw_status s) {
  std::fprintf(stderr, "error: %s\n", gw_last_error());
  return static_cast<int>(s);
}

struct RunFlags {
  std::string scenario;
  std::string tariff;
  std::string coordination = "on";
  int days = 0;
  std::optional<double> epsilon;
  int max_iters = 0;
  std::string global_limit;
  std::optional<double> half_width;
  std::optional<std::uint64_t> seed;
  std::string weather;
  bool perfect = false;
  bool no_powerflow = false;
  std::string out;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--scenario", f.scenario, "scenario file")->required();
  cmd->add_option("--tariff", f.tariff, "day-night | ahead24")->check(CLI::IsMember({"day-night", "ahead24"}));
  cmd->add_option("--coordination", f.coordination, "on | off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--days", f.days, "simulated days")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", f.epsilon, "convergence threshold in kW");
  cmd->add_option("--max-iters", f.max_iters, "iteration cap per round")->check(CLI::PositiveNumber);
  cmd->add_option("--global-limit", f.global_limit, "slack-bus limit in kW, or 'none'");
  cmd->add_option("--half-width", f.half_width, "band half width in kW");
  cmd->add_option("--seed", f.seed, "forecast-error seed");
  cmd->add_option("--weather", f.weather, "weather CSV replacing the scenario's");
  cmd->add_flag("--perfect-forecast", f.perfect, "realized series equal the forecasts");
  cmd->add_flag("--no-powerflow", f.no_powerflow, "skip the a-posteriori power flow");
  cmd->add_option("--out", f.out, "output directory")->required();
}

// Loads the scenario and applies overrides.
gw_status prepare(const RunFlags& f, ScenarioHandle& sc, gw_sim_options& opts) {
  gw_status s = gw_scenario_load(f.scenario.c_str(), &sc.p);
  if (s != GW_OK) return s;
  if (!f.tariff.empty() && (s = gw_scenario_set_tariff(sc.p, f.tariff.c_str())) != GW_OK) return s;
  if (!f.weather.empty() && (s = gw_scenario_set_weather(sc.p, f.weather.c_str())) != GW_OK) return s;
  if (!f.global_limit.empty()) {
    double kw = 0.0;
    if (f.global_limit != "none") {
      char* end = nullptr;
      kw = std::strtod(f.global_limit.c_str(), &end);
      if (end == f.global_limit.c_str() || *end != '\0' || !(kw > 0.0)) {
        std::fprintf(stderr, "error: --global-limit expects a positive number or 'none'\n");
        return GW_ERR_USAGE;
      }
    }
    if ((s = gw_scenario_set_global_limit(sc.p, kw)) != GW_OK) return s;
  }
  if (f.half_width && (s = gw_scenario_set_half_width(sc.p, *f.half_width)) != GW_OK) return s;
  if (f.epsilon || f.max_iters > 0) {
    double eps = f.epsilon.value_or(0.1);
    int it = f.max_iters > 0 ? f.max_iters : 50;
    if ((s = gw_scenario_set_convergence(sc.p, eps, it)) != GW_OK) return s;
  }
  gw_sim_options_init(&opts);
  opts.coordinate = f.coordination == "on";
  opts.days = f.days;
  if (f.seed) {
    opts.has_seed = 1;
    opts.seed = *f.seed;
  }
  opts.perfect_forecast = f.perfect ? 1 : 0;
  opts.power_flow = f.no_powerflow ? 0 : 1;
  return GW_OK;
}

void print_metrics(const gw_result* r) {
  std::printf("metric,value\n");
  for (size_t i = 0; i < gw_result_metric_count(r); ++i) {
    const char* name = nullptr;
    double v = 0.0;
    if (gw_result_metric(r, i, &name, &v) == GW_OK) std::printf("%s,%.17g\n", name, v);
  }
}

int finish_run(gw_status s, ResultHandle& res, const std::string& out) {
  if (s != GW_OK) return report_failure(s);
  if ((s = gw_result_write(res.p, out.c_str())) != GW_OK) return report_failure(s);
  print_metrics(res.p);
  return 0;
}

void on_listen(uint16_t port, void*) {
  std::fprintf(stderr, "ISO listening on port %u\n", static_cast<unsigned>(port));
  std::fflush(stderr);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridweave: distributed MPC microgrid simulator"};
  app.require_subcommand(1);

  RunFlags sim;
  auto* simulate = app.add_subcommand("simulate", "closed-loop run in one process");
  add_run_flags(simulate, sim);

  RunFlags iso;
  std::string listen;
  double timeout_s = 30.0;
  auto* serve = app.add_subcommand("serve-iso", "closed-loop run with controllers connecting over TCP");
  add_run_flags(serve, iso);
  serve->add_option("--listen", listen, "host:port (default $GRIDWEAVE_ISO_ADDR or 127.0.0.1:7878)");
  serve->add_option("--timeout", timeout_s, "controller timeout in seconds")->check(CLI::PositiveNumber);

  std::string ctl_scenario, ctl_id, ctl_connect;
  auto* controller = app.add_subcommand("controller", "serve one building's MPC for a remote ISO");
  controller->add_option("--scenario", ctl_scenario, "scenario file")->required();
  controller->add_option("--id", ctl_id, "building id")->required();
  controller->add_option("--connect", ctl_connect, "ISO host:port (default $GRIDWEAVE_ISO_ADDR or 127.0.0.1:7878)");

  std::string pf_scenario, pf_injections, pf_out;
  auto* powerflow = app.add_subcommand("powerflow", "replay bus injections through the network");
  powerflow->add_option("--scenario", pf_scenario, "scenario file with the network")->required();
  powerflow->add_option("--injections", pf_injections, "bus_injections.csv of a run")->required();
  powerflow->add_option("--out", pf_out, "per-step CSV to write");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "metrics table from a run directory");
  report->add_option("--dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (simulate->parsed()) {
    ScenarioHandle sc;
    gw_sim_options opts;
    gw_status s = prepare(sim, sc, opts);
    if (s != GW_OK) return s == GW_ERR_USAGE ? 1 : report_failure(s);
    ResultHandle res;
    return finish_run(gw_simulate(sc.p, &opts, &res.p), res, sim.out);
  }
  if (serve->parsed()) {
    ScenarioHandle sc;
    gw_sim_options opts;
    gw_status s = prepare(iso, sc, opts);
    if (s != GW_OK) return s == GW_ERR_USAGE ? 1 : report_failure(s);
    ResultHandle res;
    return finish_run(gw_serve_iso(sc.p, &opts, listen.c_str(), timeout_s, on_listen, nullptr, &res.p), res, iso.out);
  }
  if (controller->parsed()) {
    ScenarioHandle sc;
    gw_status s = gw_scenario_load(ctl_scenario.c_str(), &sc.p);
    if (s != GW_OK) return report_failure(s);
    size_t solves = 0;
    s = gw_run_controller(sc.p, ctl_id.c_str(), ctl_connect.c_str(), &solves);
    if (s != GW_OK) return report_failure(s);
    std::fprintf(stderr, "%s: %zu solves\n", ctl_id.c_str(), solves);
    return 0;
  }
  if (powerflow->parsed()) {
    ScenarioHandle sc;
    gw_status s = gw_scenario_load(pf_scenario.c_str(), &sc.p);
    if (s != GW_OK) return report_failure(s);
    double dv = 0.0, da = 0.0;
    s = gw_powerflow_replay(sc.p, pf_injections.c_str(), pf_out.empty() ? nullptr : pf_out.c_str(), &dv, &da);
    if (s != GW_OK) return report_failure(s);
    std::printf("metric,value\npf_max_voltage_deviation_pu,%.17g\npf_max_angle_deg,%.17g\n", dv, da);
    return 0;
  }
  if (report->parsed()) {
    ResultHandle res;
    gw_status s = gw_report(report_dir.c_str(), &res.p);
    if (s != GW_OK) return report_failure(s);
    print_metrics(res.p);
    return 0;
  }
  return 1;
}
