#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "gridweave/error.hpp"

namespace gridweave {

/// Discretization of a prediction horizon or a simulation run.
/// Hours of day wrap modulo 24.
struct TimeGrid {
  int start_hour = 0;
  double step_hours = 1.0;
  std::size_t n_steps = 24;

  /// Hour of day (0-23) at which step `k` starts.
  int hour_of(std::size_t k) const;
  void validate() const;
};

/// Power values (kW) over a time grid.
class Profile {
public:
  Profile() = default;
  explicit Profile(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit Profile(std::vector<double> values);
  Profile(std::initializer_list<double> values);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& raw() const { return values_; }

  Profile& operator+=(const Profile& other);
  Profile& operator-=(const Profile& other);
  bool operator==(const Profile&) const = default;

  /// Largest absolute element (0 for an empty profile).
  double max_abs() const;

  /// Drops the first value and re-appends it at the end. With a 24-step
  /// hourly horizon the appended step has the same hour of day as the
  /// dropped one.
  Profile rolled() const;

private:
  std::vector<double> values_;
};

Profile operator+(Profile lhs, const Profile& rhs);
Profile operator-(Profile lhs, const Profile& rhs);

/// Element-wise sum in list order. An empty list yields a zero profile of
/// length `n_if_empty`.
Profile aggregate(std::span<const Profile> profiles, std::size_t n_if_empty = 0);

/// Prices and penalty coefficients.
struct TariffSchedule {
  std::array<double, 24> import_price{}; // CHF/kWh_e by hour of day
  double export_price = 0.1;             // CHF/kWh_e
  double fuel_price = 0.08;              // CHF/kWh_fuel
  double c_p_conf = 10.0;                // CHF/(K h)
  double c_p_grid = 0.5;                 // CHF/kW_e, committed-profile violation
  double c_global = 0.25;                // CHF/kW_e, global power limit excess

  double min_import_price() const;
  /// True when `hour` carries the schedule's lowest import price.
  bool is_low_tariff(int hour) const;
  void validate() const;

  /// 0.24 CHF/kWh from 07:00 to 22:00, 0.13 otherwise.
  static TariffSchedule day_night();
  /// 0.16 CHF/kWh from 11:00 to 17:00, 0.21 otherwise.
  static TariffSchedule ahead_24h();
};

double tariff_price(const TariffSchedule& schedule, int hour);

/// Committed aggregate profile with a symmetric deadband.
struct Band {
  Profile committed;
  double half_width = 2.0;

  double lower(std::size_t k) const { return committed[k] - half_width; }
  double upper(std::size_t k) const { return committed[k] + half_width; }
};

/// Per step: max(0, |actual - committed| - half_width).
Profile band_violation(const Profile& actual, const Band& band);

} // namespace gridweave
