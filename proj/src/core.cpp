#include "gridweave/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridweave {

int TimeGrid::hour_of(std::size_t k) const {
  const double h = static_cast<double>(start_hour) + static_cast<double>(k) * step_hours;
  const long whole = static_cast<long>(std::floor(h + 1e-9));
  return static_cast<int>(((whole % 24) + 24) % 24);
}

void TimeGrid::validate() const {
  if (n_steps < 1) throw ValidationError("time grid needs at least one step");
  if (!(step_hours > 0.0) || !std::isfinite(step_hours))
    throw ValidationError("time grid step must be positive");
}

Profile::Profile(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("profile values must be finite");
}

Profile::Profile(std::initializer_list<double> values) : Profile(std::vector<double>(values)) {}

Profile& Profile::operator+=(const Profile& other) {
  if (other.size() != size())
    throw ValidationError("profile length mismatch: " + std::to_string(size()) + " vs " +
                          std::to_string(other.size()));
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Profile& Profile::operator-=(const Profile& other) {
  if (other.size() != size())
    throw ValidationError("profile length mismatch: " + std::to_string(size()) + " vs " +
                          std::to_string(other.size()));
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

double Profile::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Profile Profile::rolled() const {
  if (values_.empty()) return *this;
  std::vector<double> out(values_.begin() + 1, values_.end());
  out.push_back(values_.front());
  Profile p;
  p.values_ = std::move(out);
  return p;
}

Profile operator+(Profile lhs, const Profile& rhs) { return lhs += rhs; }
Profile operator-(Profile lhs, const Profile& rhs) { return lhs -= rhs; }

Profile aggregate(std::span<const Profile> profiles, std::size_t n_if_empty) {
  if (profiles.empty()) return Profile(n_if_empty);
  Profile sum(profiles.front().size());
  for (const auto& p : profiles) sum += p;
  return sum;
}

double TariffSchedule::min_import_price() const {
  return *std::min_element(import_price.begin(), import_price.end());
}

bool TariffSchedule::is_low_tariff(int hour) const {
  return tariff_price(*this, hour) <= min_import_price();
}

void TariffSchedule::validate() const {
  for (int h = 0; h < 24; ++h) {
    const double p = import_price[static_cast<std::size_t>(h)];
    if (!std::isfinite(p) || p < 0.0)
      throw ValidationError("import price at hour " + std::to_string(h) + " must be >= 0");
    if (p < export_price)
      throw ValidationError("import price at hour " + std::to_string(h) +
                            " is below the export price");
  }
  const auto non_negative = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(std::string(name) + " must be >= 0");
  };
  non_negative(export_price, "export_price");
  non_negative(fuel_price, "fuel_price");
  non_negative(c_p_conf, "c_p_conf");
  non_negative(c_p_grid, "c_p_grid");
  non_negative(c_global, "c_global");
}

TariffSchedule TariffSchedule::day_night() {
  TariffSchedule t;
  for (int h = 0; h < 24; ++h) t.import_price[static_cast<std::size_t>(h)] = (h >= 7 && h < 22) ? 0.24 : 0.13;
  return t;
}

TariffSchedule TariffSchedule::ahead_24h() {
  TariffSchedule t;
  for (int h = 0; h < 24; ++h) t.import_price[static_cast<std::size_t>(h)] = (h >= 11 && h < 17) ? 0.16 : 0.21;
  return t;
}

double tariff_price(const TariffSchedule& schedule, int hour) {
  return schedule.import_price.at(static_cast<std::size_t>(hour));
}

Profile band_violation(const Profile& actual, const Band& band) {
  if (actual.size() != band.committed.size())
    throw ValidationError("band and profile lengths differ");
  Profile out(actual.size());
  for (std::size_t k = 0; k < actual.size(); ++k)
    out[k] = std::max(0.0, std::abs(actual[k] - band.committed[k]) - band.half_width);
  return out;
}

} // namespace gridweave
