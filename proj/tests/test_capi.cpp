#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gridweave/gridweave.h"

namespace fs = std::filesystem;

namespace {

const std::string kScenario = std::string(GW_DATA_DIR) + "/benchmark8.scenario";

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("gw_capi_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  return d;
}

int cli(const std::string& args, const fs::path& stdout_to = "/dev/null") {
  const std::string cmd = std::string(GW_CLI_PATH) + " " + args + " >" + stdout_to.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scenario {
  gw_scenario* p = nullptr;
  Scenario() { REQUIRE(gw_scenario_load(kScenario.c_str(), &p) == GW_OK); }
  ~Scenario() { gw_scenario_free(p); }
};

std::map<std::string, double> metrics_of(const gw_result* r) {
  std::map<std::string, double> m;
  for (size_t i = 0; i < gw_result_metric_count(r); ++i) {
    const char* name = nullptr;
    double v = 0;
    REQUIRE(gw_result_metric(r, i, &name, &v) == GW_OK);
    m[name] = v;
  }
  return m;
}

} // namespace

TEST_CASE("scenario handle") {
  CHECK(std::strlen(gw_version()) > 0);
  gw_scenario* p = nullptr;
  CHECK(gw_scenario_load(nullptr, &p) == GW_ERR_USAGE);
  CHECK(gw_scenario_load("/no/such.scenario", &p) == GW_ERR_VALIDATION);
  CHECK(std::string(gw_last_error()).find("/no/such.scenario") != std::string::npos);
  CHECK(p == nullptr);

  Scenario sc;
  CHECK(gw_scenario_building_count(sc.p) == 8);
  CHECK(std::string(gw_scenario_building_id(sc.p, 0)) == "sfh1");
  CHECK(gw_scenario_building_id(sc.p, 8) == nullptr);
  CHECK(gw_scenario_set_tariff(sc.p, "weekend") == GW_ERR_VALIDATION);
  CHECK(gw_scenario_set_tariff(sc.p, "ahead24") == GW_OK);
  CHECK(gw_scenario_set_convergence(sc.p, 0.0, 5) == GW_ERR_VALIDATION);
  CHECK(gw_scenario_set_half_width(sc.p, -1.0) == GW_ERR_VALIDATION);
  CHECK(gw_scenario_set_global_limit(sc.p, 0.0) == GW_OK);
  CHECK(gw_scenario_set_weather(sc.p, "/no/weather.csv") == GW_ERR_VALIDATION);
  gw_scenario_free(nullptr);
}

TEST_CASE("simulate, write and report through the C interface") {
  Scenario sc;
  gw_sim_options o;
  gw_sim_options_init(&o);
  CHECK(o.coordinate == 1);
  o.days = 1;
  o.power_flow = 0;
  gw_result* r = nullptr;
  CHECK(gw_simulate(nullptr, &o, &r) == GW_ERR_USAGE);
  REQUIRE(gw_simulate(sc.p, &o, &r) == GW_OK);
  REQUIRE(gw_result_step_count(r) == 24);
  gw_step st;
  CHECK(gw_result_step(r, 5, &st) == GW_OK);
  CHECK(st.hour == 5);
  CHECK(st.forecast_error_kw == doctest::Approx(st.realized_kw - st.scheduled_kw));
  CHECK(gw_result_step(r, 24, &st) == GW_ERR_USAGE);
  double v = 0;
  CHECK(gw_result_metric_by_name(r, "total_energy_kwh", &v) == GW_OK);
  CHECK(v > 0.0);
  CHECK(gw_result_metric_by_name(r, "pf_max_voltage_deviation_pu", &v) == GW_ERR_USAGE);

  const auto dir = scratch("run");
  REQUIRE(gw_result_write(r, dir.c_str()) == GW_OK);
  gw_result* back = nullptr;
  REQUIRE(gw_report(dir.c_str(), &back) == GW_OK);
  const auto a = metrics_of(r), b = metrics_of(back);
  REQUIRE(a.size() == b.size());
  for (const auto& [k, x] : a) {
    INFO(k);
    CHECK(b.at(k) == doctest::Approx(x).epsilon(1e-12).scale(1e-12));
  }
  gw_result_free(back);
  gw_result_free(r);
  fs::remove_all(dir);
  CHECK(gw_report(dir.c_str(), &back) == GW_ERR_VALIDATION);
}

TEST_CASE("infeasible limit is a runtime failure") {
  Scenario sc;
  REQUIRE(gw_scenario_set_global_limit(sc.p, 1.0) == GW_OK);
  gw_sim_options o;
  gw_sim_options_init(&o);
  o.days = 1;
  gw_result* r = nullptr;
  CHECK(gw_simulate(sc.p, &o, &r) == GW_ERR_RUNTIME);
  CHECK(std::string(gw_last_error()).find("infeasible") != std::string::npos);
  CHECK(r == nullptr);
}

TEST_CASE("command line exit codes") {
  CHECK(cli("--help") == 0);
  CHECK(cli("") == 1);
  CHECK(cli("simulate --scenario " + kScenario) == 1);            // no --out
  CHECK(cli("simulate --tariff flat --scenario x --out y") == 1); // not a tariff
  CHECK(cli("simulate --scenario /no/such.scenario --out /tmp/x") == 2);
  CHECK(cli("report --dir /no/such/run") == 2);
  const auto dir = scratch("infeasible");
  CHECK(cli("simulate --scenario " + kScenario + " --days 1 --global-limit 1 --out " + dir.string()) == 3);
  CHECK(cli("simulate --scenario " + kScenario + " --days 1 --global-limit -3 --out " + dir.string()) == 1);
  fs::remove_all(dir);
}

TEST_CASE("same arguments, same bytes") {
  const auto a = scratch("a"), b = scratch("b");
  const std::string args = "simulate --scenario " + kScenario + " --days 1 --seed 9 --tariff ahead24 --out ";
  REQUIRE(cli(args + a.string(), a.string() + ".stdout") == 0);
  REQUIRE(cli(args + b.string(), b.string() + ".stdout") == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    INFO(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++files;
  }
  CHECK(files == 9);
  CHECK(slurp(a.string() + ".stdout") == slurp(b.string() + ".stdout"));

  // report and powerflow read the directory back
  const auto rep = scratch("report.csv");
  REQUIRE(cli("report --dir " + a.string(), rep) == 0);
  CHECK(slurp(rep) == slurp(a / "metrics.csv"));
  const auto pf = scratch("pf.csv");
  CHECK(cli("powerflow --scenario " + kScenario + " --injections " + (a / "bus_injections.csv").string() +
            " --out " + pf.string()) == 0);
  CHECK(fs::file_size(pf) > 0);

  for (const auto& p : {a, b}) {
    fs::remove_all(p);
    fs::remove(p.string() + ".stdout");
  }
  fs::remove(rep);
  fs::remove(pf);
}
