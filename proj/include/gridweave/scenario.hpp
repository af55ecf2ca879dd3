#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridweave/coordinator.hpp"
#include "gridweave/core.hpp"
#include "gridweave/mpc.hpp"
#include "gridweave/powerflow.hpp"

namespace gridweave {

/// AR(1) forecast-error model: e(k) = phi * e(k-1) + w(k). The sigmas are
/// marginal standard deviations of e.
struct NoiseConfig {
  double phi = 0.8;
  double base_load_sigma = 0.15; // kW, per building
  double irradiance_sigma = 0.03; // kW/m2, shared by all buildings
  void validate() const;
};

struct Scenario {
  std::string name;
  std::filesystem::path source; // file the scenario was read from
  std::string tariff_name = "day-night";
  TariffSchedule tariff = TariffSchedule::day_night();
  std::vector<ControllerModel> buildings; // visitation order: ascending bus index
  std::vector<std::string> building_bus;  // bus id per building
  Network network;
  double band_half_width = 2.0;
  std::optional<double> global_limit;
  ConvergenceConfig convergence;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  std::size_t days = 3;
  std::filesystem::path weather_path;

  /// Applies a tariff to every building.
  void set_tariff(const std::string& name);
  /// Replaces the weather series of every building.
  void set_weather(const std::filesystem::path& csv);
  void validate() const;
};

/// Reads a YAML scenario. Relative series paths resolve against the
/// scenario's directory.
Scenario load_scenario(const std::filesystem::path& path);

TariffSchedule tariff_by_name(const std::string& name);

/// Columns of a series CSV by header name; every row must be complete.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

} // namespace gridweave
