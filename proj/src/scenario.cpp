#include "gridweave/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace gridweave {

void NoiseConfig::validate() const {
  if (!(phi >= 0.0 && phi < 1.0)) throw ValidationError("noise.phi must be in [0, 1)");
  if (!(base_load_sigma >= 0.0) || !std::isfinite(base_load_sigma))
    throw ValidationError("noise.base_load_sigma must be >= 0");
  if (!(irradiance_sigma >= 0.0) || !std::isfinite(irradiance_sigma))
    throw ValidationError("noise.irradiance_sigma must be >= 0");
}

TariffSchedule tariff_by_name(const std::string& name) {
  if (name == "day-night") return TariffSchedule::day_night();
  if (name == "ahead24") return TariffSchedule::ahead_24h();
  throw ValidationError("unknown tariff '" + name + "' (expected day-night or ahead24)");
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw ValidationError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open series file " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      out.push_back(cell);
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      t.columns.resize(cells.size());
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " columns");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        double v = std::stod(cells[c], &used);
        if (used != cells[c].size() || !std::isfinite(v)) throw std::invalid_argument(cells[c]);
        t.columns[c].push_back(v);
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": '" + cells[c] + "' is not a number");
      }
    }
  }
  if (t.header.empty() || t.columns.front().empty()) throw ValidationError("series file " + path.string() + " is empty");
  return t;
}

namespace {

/// A YAML mapping whose keys are checked off as they are read; leftovers
/// are reported as unknown.
class Section {
public:
  Section(YAML::Node node, std::string path, const std::string& file) : node_(node), path_(std::move(path)), file_(file) {
    if (!node_.IsMap()) fail(node_, "must be a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    std::string where = file_;
    if (at.Mark().line >= 0) where += ":" + std::to_string(at.Mark().line + 1);
    throw ValidationError(where + ": " + (path_.empty() ? std::string("scenario") : path_) + ": " + msg);
  }
  [[noreturn]] void fail_field(const std::string& key, const std::string& msg) const {
    throw ValidationError(location(key) + ": field '" + full(key) + "' " + msg);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_[key].IsDefined() && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    seen_.insert(key);
    YAML::Node n = node_[key];
    if (!n.IsDefined() || n.IsNull()) {
      if (def) return *def;
      fail_field(key, "is required");
    }
    try {
      double v = n.as<double>();
      if (!std::isfinite(v)) fail_field(key, "must be finite");
      return v;
    } catch (const YAML::Exception&) {
      fail_field(key, "must be a number");
    }
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    seen_.insert(key);
    YAML::Node n = node_[key];
    if (!n.IsDefined() || n.IsNull()) {
      if (def) return *def;
      fail_field(key, "is required");
    }
    if (!n.IsScalar()) fail_field(key, "must be a string");
    return n.as<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    seen_.insert(key);
    YAML::Node n = node_[key];
    if (!n.IsDefined() || n.IsNull()) return def;
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail_field(key, "must be true or false");
    }
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    double v = number(key, static_cast<double>(def));
    if (v < 0 || v != std::floor(v)) fail_field(key, "must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    YAML::Node n = node_[key];
    if (!n.IsDefined() || n.IsNull()) fail_field(key, "is required");
    return Section(n, full(key), file_);
  }

  void finish() const {
    std::set<std::string> keys;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      std::string where = file_;
      if (it->first.Mark().line >= 0) where += ":" + std::to_string(it->first.Mark().line + 1);
      // yaml-cpp keeps both copies of a repeated key
      if (!keys.insert(key).second) throw ValidationError(where + ": field '" + full(key) + "' given twice");
      if (!seen_.count(key)) throw ValidationError(where + ": unknown field '" + full(key) + "'");
    }
  }

  /// Runs a validator and rethrows its message tagged with this section.
  template <class F>
  void check(F&& f) const {
    try {
      f();
    } catch (const ValidationError& e) {
      fail(node_, e.what());
    }
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

private:
  std::string location(const std::string& key) const {
    YAML::Node n = node_[key];
    std::string where = file_;
    int line = (n.IsDefined() ? n.Mark().line : node_.Mark().line);
    if (line >= 0) where += ":" + std::to_string(line + 1);
    return where;
  }

  YAML::Node node_;
  std::string path_;
  const std::string& file_;
  std::set<std::string> seen_;
};

std::vector<double> cycle_to(const std::vector<double>& v, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i % v.size()];
  return out;
}

struct Weather {
  std::vector<double> t_out, irradiance;
};

Weather read_weather(const std::filesystem::path& p) {
  CsvTable t = read_csv(p);
  return Weather{t.column("t_out"), t.column("irradiance")};
}

void install_weather(ExogenousSeries& s, const Weather& w) {
  const std::size_t n = std::max({w.t_out.size(), s.base_load.size(), s.dhw_draw.size()});
  s.t_out = cycle_to(w.t_out, n);
  s.irradiance = cycle_to(w.irradiance, n);
  s.base_load = cycle_to(s.base_load, n);
  s.dhw_draw = cycle_to(s.dhw_draw, n);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
  std::filesystem::path p(rel);
  return p.is_absolute() ? p : base / p;
}

ControllerModel read_building(Section& b, const std::filesystem::path& dir, const Weather& weather,
                              const TariffSchedule& tariff) {
  ControllerModel m;
  m.tariff = tariff;
  m.id = b.string("id");
  b.string("type", std::string("building")); // informational

  {
    Section e = b.child("envelope");
    const double c = e.number("heat_capacity");
    const double u = e.number("loss_coefficient");
    const double t0 = e.number("t_init", 20.0);
    if (e.boolean("comfort", true)) {
      m.building = RcBuilding::with_default_comfort(c, u, t0);
      const double day = e.number("comfort_min_day", 20.0);
      const double night = e.number("comfort_min_night", 17.0);
      const double hi = e.number("comfort_max", 24.0);
      for (std::size_t h = 0; h < 24; ++h) {
        m.building.comfort_min[h] = (h >= 7 && h < 22) ? day : night;
        m.building.comfort_max[h] = hi;
      }
    } else {
      m.building.heat_capacity = c;
      m.building.loss_coefficient = u;
      m.building.t_init = t0;
    }
    e.check([&] { m.building.validate(); });
    e.finish();
  }
  if (b.has("heat_pump")) {
    Section s = b.child("heat_pump");
    HeatPump hp;
    hp.cop = s.number("cop", hp.cop);
    hp.p_max = s.number("p_max", hp.p_max);
    s.check([&] { hp.validate(); });
    s.finish();
    m.heat_pump = hp;
  }
  if (b.has("boiler")) {
    Section s = b.child("boiler");
    GasBoiler g;
    g.efficiency = s.number("efficiency", g.efficiency);
    g.q_max = s.number("q_max", g.q_max);
    s.check([&] { g.validate(); });
    s.finish();
    m.boiler = g;
  }
  if (b.has("chp")) {
    Section s = b.child("chp");
    Chp c;
    c.eta_e = s.number("eta_e", c.eta_e);
    c.eta_th = s.number("eta_th", c.eta_th);
    c.fuel_max = s.number("fuel_max", c.fuel_max);
    s.check([&] { c.validate(); });
    s.finish();
    m.chp = c;
  }
  if (b.has("battery")) {
    Section s = b.child("battery");
    Battery bat;
    bat.capacity = s.number("capacity");
    bat.p_charge_max = s.number("p_charge_max", bat.capacity / 2.0);
    bat.p_discharge_max = s.number("p_discharge_max", bat.capacity / 2.0);
    bat.eta_c = s.number("eta_c", bat.eta_c);
    bat.eta_d = s.number("eta_d", bat.eta_d);
    bat.soc_init = s.number("soc_init", bat.capacity / 2.0);
    s.check([&] { bat.validate(); });
    s.finish();
    m.battery = bat;
  }
  if (b.has("tank")) {
    Section s = b.child("tank");
    HotWaterTank t;
    t.capacity = s.number("capacity");
    t.standing_loss = s.number("standing_loss", t.standing_loss);
    t.q_charge_max = s.number("q_charge_max", t.q_charge_max);
    t.soc_init = s.number("soc_init", t.capacity / 3.0);
    s.check([&] { t.validate(); });
    s.finish();
    m.tank = t;
  }
  if (b.has("pv")) {
    Section s = b.child("pv");
    PvArray pv;
    pv.area = s.number("area");
    pv.efficiency = s.number("efficiency", pv.efficiency);
    s.check([&] { pv.validate(); });
    s.finish();
    m.pv = pv;
  }

  const std::filesystem::path loads = resolve(dir, b.string("loads"));
  const double load_scale = b.number("load_scale", 1.0);
  const double dhw_scale = b.number("dhw_scale", 1.0);
  if (load_scale < 0.0) b.fail_field("load_scale", "must be >= 0");
  if (dhw_scale < 0.0) b.fail_field("dhw_scale", "must be >= 0");
  CsvTable lt = read_csv(loads);
  m.forecast.base_load = lt.column("base_load");
  m.forecast.dhw_draw = lt.column("dhw_draw");
  for (double& v : m.forecast.base_load) v *= load_scale;
  for (double& v : m.forecast.dhw_draw) v *= dhw_scale;
  install_weather(m.forecast, weather);
  b.check([&] { m.validate(); });
  return m;
}

} // namespace

void Scenario::set_tariff(const std::string& n) {
  tariff = tariff_by_name(n);
  tariff_name = n;
  for (auto& b : buildings) {
    TariffSchedule t = tariff;
    t.export_price = b.tariff.export_price;
    t.fuel_price = b.tariff.fuel_price;
    t.c_p_conf = b.tariff.c_p_conf;
    t.c_p_grid = b.tariff.c_p_grid;
    t.c_global = b.tariff.c_global;
    b.tariff = t;
  }
  if (!buildings.empty()) {
    tariff.export_price = buildings.front().tariff.export_price;
    tariff.fuel_price = buildings.front().tariff.fuel_price;
    tariff.c_p_conf = buildings.front().tariff.c_p_conf;
    tariff.c_p_grid = buildings.front().tariff.c_p_grid;
    tariff.c_global = buildings.front().tariff.c_global;
  }
  tariff.validate();
}

void Scenario::set_weather(const std::filesystem::path& csv) {
  Weather w = read_weather(csv);
  for (auto& b : buildings) install_weather(b.forecast, w);
  weather_path = csv;
}

void Scenario::validate() const {
  if (buildings.size() != building_bus.size()) throw ValidationError("every building needs a bus");
  std::set<std::string> ids;
  for (const auto& b : buildings) {
    b.validate();
    if (!ids.insert(b.id).second) throw ValidationError("duplicate building id '" + b.id + "'");
  }
  network.validate();
  for (const auto& bus : building_bus) {
    if (network.buses[network.index_of(bus)].slack) throw ValidationError("building on the slack bus '" + bus + "'");
  }
  tariff.validate();
  convergence.validate();
  noise.validate();
  if (!(band_half_width >= 0.0)) throw ValidationError("band_half_width must be >= 0");
  if (global_limit && !(*global_limit > 0.0)) throw ValidationError("global_limit must be > 0");
  if (days < 1) throw ValidationError("days must be >= 1");
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string file = path.string();
  YAML::Node root;
  try {
    root = YAML::LoadFile(file);
  } catch (const YAML::BadFile&) {
    throw ValidationError("cannot open scenario file " + file);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(file + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ValidationError(file + ": scenario is empty");
  if (!root.IsMap()) throw ValidationError(file + ": scenario must be a mapping of sections");

  const std::filesystem::path dir = path.parent_path();
  Scenario sc;
  sc.source = path;
  Section top(root, "", file);
  sc.name = top.string("name", path.stem().string());
  sc.days = top.count("days", 3);
  sc.seed = top.count("seed", 1);
  sc.band_half_width = top.number("band_half_width", 2.0);
  if (sc.band_half_width < 0.0) top.fail_field("band_half_width", "must be >= 0");
  sc.global_limit = top.optional_number("global_limit");
  if (sc.global_limit && !(*sc.global_limit > 0.0)) top.fail_field("global_limit", "must be > 0");

  sc.tariff_name = top.string("tariff", std::string("day-night"));
  try {
    sc.tariff = tariff_by_name(sc.tariff_name);
  } catch (const ValidationError& e) {
    top.fail_field("tariff", std::string("is invalid: ") + e.what());
  }
  if (top.has("prices")) {
    Section p = top.child("prices");
    sc.tariff.export_price = p.number("export", sc.tariff.export_price);
    sc.tariff.fuel_price = p.number("fuel", sc.tariff.fuel_price);
    sc.tariff.c_p_conf = p.number("comfort", sc.tariff.c_p_conf);
    sc.tariff.c_p_grid = p.number("grid", sc.tariff.c_p_grid);
    sc.tariff.c_global = p.number("global", sc.tariff.c_global);
    p.check([&] { sc.tariff.validate(); });
    p.finish();
  }
  if (top.has("convergence")) {
    Section c = top.child("convergence");
    sc.convergence.epsilon = c.number("epsilon", sc.convergence.epsilon);
    sc.convergence.max_iterations = static_cast<int>(c.count("max_iterations", 50));
    c.check([&] { sc.convergence.validate(); });
    c.finish();
  }
  if (top.has("noise")) {
    Section n = top.child("noise");
    sc.noise.phi = n.number("phi", sc.noise.phi);
    sc.noise.base_load_sigma = n.number("base_load_sigma", sc.noise.base_load_sigma);
    sc.noise.irradiance_sigma = n.number("irradiance_sigma", sc.noise.irradiance_sigma);
    n.check([&] { sc.noise.validate(); });
    n.finish();
  }

  {
    Section net = top.child("network");
    sc.network.base_kv = net.number("base_kv", 0.4);
    sc.network.base_kva = net.number("base_kva", 100.0);
    YAML::Node buses = net.raw("buses");
    if (!buses.IsSequence() || buses.size() == 0) net.fail_field("buses", "must be a non-empty list");
    for (std::size_t i = 0; i < buses.size(); ++i) {
      Section b(buses[i], net.full("buses[" + std::to_string(i) + "]"), file);
      NetBus bus;
      bus.id = b.string("id");
      bus.slack = b.boolean("slack", false);
      b.finish();
      sc.network.buses.push_back(bus);
    }
    YAML::Node lines = net.raw("lines");
    if (!lines.IsSequence()) net.fail_field("lines", "must be a list");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      Section l(lines[i], net.full("lines[" + std::to_string(i) + "]"), file);
      NetLine line;
      try {
        line.from = sc.network.index_of(l.string("from"));
        line.to = sc.network.index_of(l.string("to"));
      } catch (const ValidationError& e) {
        l.fail(lines[i], e.what());
      }
      line.r_ohm_per_km = l.number("r_ohm_per_km");
      line.x_ohm_per_km = l.number("x_ohm_per_km");
      line.length_m = l.number("length_m");
      l.finish();
      sc.network.lines.push_back(line);
    }
    net.check([&] { sc.network.validate(); });
    net.finish();
  }

  sc.weather_path = resolve(dir, top.string("weather"));
  Weather weather = read_weather(sc.weather_path);

  YAML::Node buildings = top.raw("buildings");
  if (!buildings.IsDefined() || !buildings.IsSequence() || buildings.size() == 0)
    top.fail_field("buildings", "must be a non-empty list");
  struct Entry {
    std::size_t bus_index;
    std::size_t order;
    ControllerModel model;
    std::string bus;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < buildings.size(); ++i) {
    Section b(buildings[i], "buildings[" + std::to_string(i) + "]", file);
    ControllerModel m = read_building(b, dir, weather, sc.tariff);
    const std::string bus = b.string("bus");
    std::size_t bus_index = 0;
    try {
      bus_index = sc.network.index_of(bus);
    } catch (const ValidationError& e) {
      b.fail_field("bus", e.what());
    }
    b.finish();
    entries.push_back(Entry{bus_index, i, std::move(m), bus});
  }
  top.finish();

  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.bus_index < b.bus_index; });
  for (auto& e : entries) {
    sc.buildings.push_back(std::move(e.model));
    sc.building_bus.push_back(e.bus);
  }
  std::set<std::string> used;
  for (const auto& bus : sc.building_bus)
    if (!used.insert(bus).second) throw ValidationError(file + ": bus '" + bus + "' hosts more than one building");
  sc.validate();
  return sc;
}

} // namespace gridweave
