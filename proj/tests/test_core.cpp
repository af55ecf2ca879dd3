#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "gridweave/core.hpp"

using namespace gridweave;

TEST_CASE("tariff prices by hour") {
  const auto dn = TariffSchedule::day_night();
  const auto a24 = TariffSchedule::ahead_24h();
  CHECK(tariff_price(dn, 8) == doctest::Approx(0.24));
  CHECK(tariff_price(dn, 23) == doctest::Approx(0.13));
  CHECK(tariff_price(a24, 18) == doctest::Approx(0.21));

  // boundaries of the windows
  CHECK(tariff_price(dn, 6) == doctest::Approx(0.13));
  CHECK(tariff_price(dn, 7) == doctest::Approx(0.24));
  CHECK(tariff_price(dn, 21) == doctest::Approx(0.24));
  CHECK(tariff_price(dn, 22) == doctest::Approx(0.13));
  CHECK(tariff_price(a24, 10) == doctest::Approx(0.21));
  CHECK(tariff_price(a24, 11) == doctest::Approx(0.16));
  CHECK(tariff_price(a24, 16) == doctest::Approx(0.16));
  CHECK(tariff_price(a24, 17) == doctest::Approx(0.21));
}

TEST_CASE("tariff schedule is total and piecewise constant") {
  for (const auto& t : {TariffSchedule::day_night(), TariffSchedule::ahead_24h()}) {
    int changes = 0;
    for (int h = 0; h < 24; ++h) {
      const double p = tariff_price(t, h);
      CHECK(p >= t.export_price);
      if (p != tariff_price(t, (h + 1) % 24)) ++changes;
    }
    CHECK(changes == 2);
    CHECK_NOTHROW(t.validate());
  }
  CHECK(TariffSchedule::day_night().is_low_tariff(3));
  CHECK_FALSE(TariffSchedule::day_night().is_low_tariff(12));
  CHECK(TariffSchedule::ahead_24h().is_low_tariff(12));
}

TEST_CASE("tariff validation") {
  auto t = TariffSchedule::day_night();
  t.export_price = 0.2;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = TariffSchedule::day_night();
  t.c_p_grid = -1.0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  CHECK_THROWS(tariff_price(TariffSchedule::day_night(), 24));
}

TEST_CASE("aggregate") {
  const std::vector<Profile> two{Profile{1, 2}, Profile{3, 4}};
  CHECK(aggregate(two) == Profile{4, 6});
  CHECK(aggregate(std::vector<Profile>{}, 3) == Profile(3));
  const std::vector<Profile> one{Profile{1.5, -2}};
  CHECK(aggregate(one) == one.front());
  const std::vector<Profile> bad{Profile{1, 2}, Profile{1, 2, 3}};
  CHECK_THROWS_AS(aggregate(bad), ValidationError);
}

TEST_CASE("aggregate is order independent up to round-off") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int t = 0; t < 50; ++t) {
    std::vector<Profile> ps;
    for (int i = 0; i < 5; ++i) {
      Profile p(24);
      for (std::size_t k = 0; k < 24; ++k) p[k] = u(rng);
      ps.push_back(p);
    }
    const Profile a = aggregate(ps);
    std::shuffle(ps.begin(), ps.end(), rng);
    const Profile b = aggregate(ps);
    for (std::size_t k = 0; k < 24; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }
}

TEST_CASE("band violation") {
  const Band b{Profile(3, 10.0), 2.0};
  CHECK(band_violation(Profile(3, 10.0), b) == Profile(3));
  CHECK(band_violation(Profile{13, 11, 7.5}, b) == Profile{1, 0, 0.5});
  CHECK(band_violation(Profile{6}, Band{Profile{10}, 2.0})[0] == doctest::Approx(2.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20), w(0, 5);
  for (int t = 0; t < 100; ++t) {
    Profile p(24);
    for (std::size_t k = 0; k < 24; ++k) p[k] = u(rng);
    CHECK(band_violation(p, Band{p, w(rng)}).max_abs() == 0.0);
  }
}

TEST_CASE("profiles") {
  CHECK_THROWS_AS(Profile({1.0, std::nan("")}), ValidationError);
  CHECK(Profile{1, 2, 3}.rolled() == Profile{2, 3, 1});
  CHECK(Profile{-4, 3}.max_abs() == 4.0);
  TimeGrid g{22, 1.0, 4};
  CHECK(g.hour_of(0) == 22);
  CHECK(g.hour_of(2) == 0);
  CHECK(g.hour_of(3) == 1);
  CHECK_THROWS_AS((TimeGrid{0, 0.0, 1}.validate()), ValidationError);
  CHECK_THROWS_AS((TimeGrid{0, 1.0, 0}.validate()), ValidationError);
}
