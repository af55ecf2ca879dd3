#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridweave/scenario.hpp"

using namespace gridweave;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GW_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A scratch copy of the data directory, so relative series paths still resolve.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("gw_scenario_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::copy(kData / "loads", dir / "loads", fs::copy_options::recursive);
    fs::copy(kData / "weather", dir / "weather", fs::copy_options::recursive);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& text, const std::string& name = "s.scenario") const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::string error_of(const fs::path& p) {
  try {
    load_scenario(p);
  } catch (const ValidationError& e) {
    return e.what();
  }
  FAIL("scenario was accepted");
  return {};
}

} // namespace

TEST_CASE("shipped benchmark fleet") {
  const auto sc = load_scenario(kData / "benchmark8.scenario");
  REQUIRE(sc.buildings.size() == 8);
  int mfh = 0, sfh = 0, hp = 0, boiler = 0, chp = 0, battery = 0, tank = 0;
  for (const auto& b : sc.buildings) {
    (b.id.rfind("mfh", 0) == 0 ? mfh : sfh)++;
    hp += b.heat_pump ? 1 : 0;
    boiler += b.boiler ? 1 : 0;
    chp += b.chp ? 1 : 0;
    battery += b.battery ? 1 : 0;
    tank += b.tank ? 1 : 0;
    // exactly one heat source per building
    CHECK((b.heat_pump ? 1 : 0) + (b.boiler ? 1 : 0) + (b.chp ? 1 : 0) == 1);
  }
  CHECK(mfh == 2);
  CHECK(sfh == 6);
  CHECK(hp == 3);
  CHECK(boiler == 4);
  CHECK(chp == 1);
  CHECK(battery == 6);
  CHECK(tank == 4);
  CHECK(sc.network.buses.size() == 9);
  CHECK(sc.network.lines.size() == 8);
  CHECK(sc.band_half_width == 2.0);
  REQUIRE(sc.global_limit);
  CHECK(*sc.global_limit == 15.0);
  CHECK(sc.days == 3);
  CHECK(sc.seed == 42);
  // visitation follows the bus order along the feeder
  for (std::size_t i = 1; i < sc.buildings.size(); ++i)
    CHECK(sc.network.index_of(sc.building_bus[i - 1]) < sc.network.index_of(sc.building_bus[i]));
  for (const auto& b : sc.buildings) {
    CHECK(b.forecast.size() >= 24);
    CHECK(b.forecast.size() % 24 == 0);
  }
}

TEST_CASE("empty scenario") {
  Scratch s;
  CHECK(error_of(s.write("")).find("empty") != std::string::npos);
  CHECK(error_of(s.write("# nothing here\n")).find("empty") != std::string::npos);
  CHECK_FALSE(error_of(s.write("- a\n- b\n")).empty());
}

TEST_CASE("negative tank capacity") {
  Scratch s;
  const auto text = replace_once(slurp(kData / "benchmark8.scenario"), "tank: {capacity: 34.8", "tank: {capacity: -1");
  const auto msg = error_of(s.write(text));
  CHECK(msg.find("capacity") != std::string::npos);
}

TEST_CASE("unknown keys are named with their line") {
  Scratch s;
  const auto base = slurp(kData / "benchmark8.scenario");
  const auto text = replace_once(base, "days: 3\n", "days: 3\nnights: 2\n");
  std::size_t line = 1;
  for (char c : text.substr(0, text.find("nights:"))) line += c == '\n' ? 1 : 0;
  const auto msg = error_of(s.write(text));
  CHECK(msg.find("nights") != std::string::npos);
  CHECK(msg.find(":" + std::to_string(line)) != std::string::npos);

  const auto nested = replace_once(base, "  phi: 0.8\n", "  phi: 0.8\n  colour: red\n");
  CHECK(error_of(s.write(nested)).find("colour") != std::string::npos);
}

TEST_CASE("missing series file names the path") {
  Scratch s;
  const auto text = replace_once(slurp(kData / "benchmark8.scenario"), "weather: weather/winter.csv", "weather: weather/autumn.csv");
  CHECK(error_of(s.write(text)).find("autumn.csv") != std::string::npos);
}

TEST_CASE("schema errors") {
  Scratch s;
  const auto base = slurp(kData / "benchmark8.scenario");
  CHECK_FALSE(error_of(s.write(replace_once(base, "tariff: day-night", "tariff: weekend"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "days: 3", "days: zero"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "bus: n3", "bus: n9"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "bus: n3", "bus: n1"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "id: sfh4", "id: sfh3"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "{from: n7, to: n8", "{from: n7, to: n7"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "epsilon: 0.1", "epsilon: -0.1"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "phi: 0.8", "phi: 1.0"))).empty());
  CHECK_FALSE(error_of(s.write(replace_once(base, "band_half_width: 2.0", "band_half_width: -2"))).empty());
  CHECK_FALSE(error_of(s.write(base + "days: 4\n")).empty()); // duplicate key
}

TEST_CASE("optional global limit") {
  Scratch s;
  const auto text = replace_once(slurp(kData / "benchmark8.scenario"), "global_limit: 15.0", "");
  const auto sc = load_scenario(s.write(text));
  CHECK_FALSE(sc.global_limit);
}

TEST_CASE("tariff and weather overrides") {
  auto sc = load_scenario(kData / "benchmark8.scenario");
  sc.set_tariff("ahead24");
  CHECK(sc.tariff_name == "ahead24");
  for (const auto& b : sc.buildings) CHECK(tariff_price(b.tariff, 18) == doctest::Approx(0.21));
  CHECK_THROWS_AS(sc.set_tariff("flat"), ValidationError);
  CHECK_THROWS_AS(tariff_by_name("flat"), ValidationError);

  const double winter = sc.buildings[0].forecast.t_out[12];
  sc.set_weather(kData / "weather" / "summer.csv");
  CHECK(sc.buildings[0].forecast.t_out[12] > winter);
  for (const auto& b : sc.buildings) CHECK(b.forecast.t_out == sc.buildings[0].forecast.t_out);
  CHECK_THROWS_AS(sc.set_weather(kData / "weather" / "none.csv"), ValidationError);
}

TEST_CASE("series CSV reader") {
  Scratch s;
  const auto t = read_csv(s.write("a,b\n1,2\n# note\n3,4.5\n", "ok.csv"));
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.column("b") == std::vector<double>{2, 4.5});
  CHECK_THROWS_AS(t.column("c"), ValidationError);
  CHECK_THROWS_AS(read_csv(s.write("a,b\n1\n", "short.csv")), ValidationError);
  CHECK_THROWS_AS(read_csv(s.write("a,b\n1,x\n", "text.csv")), ValidationError);
  CHECK_THROWS_AS(read_csv(s.write("a,b\n", "bare.csv")), ValidationError);
  try {
    read_csv(s.write("a,b\n1,2\n1,nan\n", "nan.csv"));
    FAIL("nan accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nan.csv:3") != std::string::npos);
  }
}
