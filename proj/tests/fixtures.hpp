#pragma once

// Small hand-made models shared by the unit tests.

#include <cmath>
#include <string>
#include <vector>

#include "gridweave/mpc.hpp"

namespace fixture {

inline gridweave::ExogenousSeries flat_series(std::size_t n, double t_out, double base_load,
                                              double irradiance = 0.0, double dhw = 0.0) {
  gridweave::ExogenousSeries s;
  s.t_out.assign(n, t_out);
  s.irradiance.assign(n, irradiance);
  s.base_load.assign(n, base_load);
  s.dhw_draw.assign(n, dhw);
  return s;
}

// A daylight bell on the irradiance and a cool night.
inline gridweave::ExogenousSeries winter_day(double base_load = 0.5, double dhw = 0.3) {
  gridweave::ExogenousSeries s;
  for (int h = 0; h < 24; ++h) {
    s.t_out.push_back(2.0 + 4.0 * std::sin((h - 9) * 3.14159265358979 / 12.0));
    s.irradiance.push_back(h >= 8 && h <= 16 ? 0.4 * std::sin((h - 7) * 3.14159265358979 / 10.0) : 0.0);
    s.base_load.push_back(base_load * ((h >= 7 && h <= 9) || (h >= 18 && h <= 21) ? 2.0 : 1.0));
    s.dhw_draw.push_back(h == 7 || h == 19 ? 3.0 * dhw : dhw);
  }
  return s;
}

inline gridweave::ControllerModel idle_house(const std::string& id = "idle") {
  gridweave::ControllerModel m;
  m.id = id;
  m.building.heat_capacity = 10.0;
  m.building.loss_coefficient = 0.0;
  m.forecast = flat_series(24, 20.0, 0.0);
  m.tariff = gridweave::TariffSchedule::day_night();
  return m;
}

// Heat pump, PV, tank and battery under the default comfort box.
inline gridweave::ControllerModel full_house(const std::string& id = "house") {
  gridweave::ControllerModel m;
  m.id = id;
  m.building = gridweave::RcBuilding::with_default_comfort(12.0, 0.16, 20.0);
  m.heat_pump = gridweave::HeatPump{3.0, 3.0};
  m.pv = gridweave::PvArray{30.0, 0.15};
  m.battery = gridweave::Battery{3.0, 1.5, 1.5, 0.95, 0.95, 1.5};
  m.tank = gridweave::HotWaterTank{20.0, 0.01, 6.0, 8.0};
  m.forecast = winter_day();
  m.tariff = gridweave::TariffSchedule::day_night();
  return m;
}

inline gridweave::ControllerModel boiler_house(const std::string& id = "boiler") {
  gridweave::ControllerModel m = full_house(id);
  m.heat_pump.reset();
  m.boiler = gridweave::GasBoiler{0.9, 12.0};
  return m;
}

inline gridweave::ControllerModel chp_house(const std::string& id = "chp") {
  gridweave::ControllerModel m = full_house(id);
  m.heat_pump.reset();
  m.battery.reset();
  m.pv.reset();
  m.chp = gridweave::Chp{0.3, 0.6, 20.0};
  m.building = gridweave::RcBuilding::with_default_comfort(40.0, 0.5, 20.0);
  m.forecast = winter_day(2.0, 1.5);
  return m;
}

inline gridweave::MpcInput local_input(const gridweave::ControllerModel& m, std::size_t k0 = 0) {
  gridweave::MpcInput in;
  in.k0 = k0;
  in.x0 = gridweave::ControllerState::initial(m);
  in.sigma = gridweave::Profile(m.horizon_steps);
  return in;
}

} // namespace fixture
