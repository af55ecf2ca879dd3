#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "gridweave/powerflow.hpp"
#include "gridweave/scenario.hpp"
#include "oracles.hpp"

using namespace gridweave;

namespace {

Network two_bus(double r = 0.02, double x = 0.01) {
  Network n;
  n.buses = {{"grid", true, ""}, {"house", false, ""}};
  n.lines = {{0, 1, r * 1000.0 / 50.0, x * 1000.0 / 50.0, 50.0}};
  return n;
}

Network benchmark() { return load_scenario(GW_DATA_DIR "/benchmark8.scenario").network; }

BusInjection pq(std::vector<double> p, std::vector<double> q) { return BusInjection{std::move(p), std::move(q)}; }

double max_dev(const PowerFlowSolution& s) {
  double d = 0;
  for (double v : s.v_pu) d = std::max(d, std::abs(v - 1.0));
  return d;
}

// Complex power balance at every non-slack bus, recomputed from the solution.
double balance_error(const Network& net, const BusInjection& inj, const PowerFlowSolution& s) {
  using C = std::complex<double>;
  const std::size_t n = net.buses.size();
  std::vector<C> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(s.v_pu[i], s.angle_deg[i] * 3.14159265358979323846 / 180.0);
  std::vector<C> cur(n, C{});
  const double zb = net.base_impedance();
  for (const auto& l : net.lines) {
    const C yl = 1.0 / C(l.resistance() / zb, l.reactance() / zb);
    const C f = yl * (v[l.from] - v[l.to]);
    cur[l.from] += f;
    cur[l.to] -= f;
  }
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (net.buses[i].slack) continue;
    const C s_inj = v[i] * std::conj(cur[i]);
    const C want(-inj.p_kw[i] / net.base_kva, -inj.q_kvar[i] / net.base_kva);
    worst = std::max(worst, std::abs(s_inj - want));
  }
  return worst;
}

} // namespace

TEST_CASE("no load, flat voltage") {
  const auto net = benchmark();
  const std::vector<double> zero(net.buses.size(), 0.0);
  const auto s = solve_power_flow(net, injection_at_power_factor(zero));
  CHECK(s.iterations == 0);
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    CHECK(s.v_pu[i] == 1.0);
    CHECK(s.angle_deg[i] == 0.0);
  }
  const auto d = deviation_report(std::span<const PowerFlowSolution>(&s, 1));
  CHECK(d.max_voltage_deviation == 0.0);
  CHECK(d.max_angle_deg == 0.0);
}

TEST_CASE("two buses agree with Gauss-Seidel") {
  for (auto [p, q] : {std::pair{10.0, 3.0}, {25.0, 8.2}, {-12.0, 0.0}, {40.0, -5.0}}) {
    const auto net = two_bus();
    const auto inj = pq({0, p}, {0, q});
    PowerFlowOptions tight;
    tight.tolerance = 1e-12;
    const auto s = solve_power_flow(net, inj, tight);
    const auto g = oracle::gauss_seidel(net, inj);
    CHECK(std::abs(s.v_pu[1] - std::abs(g.v[1])) < 1e-6);
    CHECK(std::abs(s.angle_deg[1] - std::arg(g.v[1]) * 180.0 / 3.14159265358979323846) < 1e-6);
  }
}

TEST_CASE("export lifts the voltage") {
  const auto s = solve_power_flow(two_bus(), pq({0, -15.0}, {0, 0.0}));
  CHECK(s.v_pu[1] > 1.0);
  const auto l = solve_power_flow(two_bus(), pq({0, 15.0}, {0, 0.0}));
  CHECK(l.v_pu[1] < 1.0);
}

TEST_CASE("power factor sets the reactive share") {
  const std::vector<double> p{0.0, 10.0, -4.0};
  const auto inj = injection_at_power_factor(p);
  CHECK(inj.q_kvar[1] == doctest::Approx(10.0 * std::sqrt(1 - 0.95 * 0.95) / 0.95));
  CHECK(inj.q_kvar[2] < 0.0);
  CHECK(inj.q_kvar[0] == 0.0);
  CHECK_THROWS_AS(injection_at_power_factor(p, 0.0), ValidationError);
  CHECK(injection_at_power_factor(p, 1.0).q_kvar[1] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("shipped feeder against Gauss-Seidel") {
  const auto net = benchmark();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6.0, 9.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p(net.buses.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = net.buses[i].slack ? 0.0 : u(rng);
    const auto inj = injection_at_power_factor(p);
    PowerFlowOptions tight;
    tight.tolerance = 1e-12;
    const auto s = solve_power_flow(net, inj, tight);
    const auto g = oracle::gauss_seidel(net, inj);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(s.v_pu[i] - std::abs(g.v[i])) < 1e-6);
      CHECK(std::abs(s.angle_deg[i] - std::arg(g.v[i]) * 180.0 / 3.14159265358979323846) < 1e-6);
    }
  }
}

TEST_CASE("converged solutions balance, lose power and feed it from the slack") {
  const auto net = benchmark();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-8.0, 10.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> p(net.buses.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = net.buses[i].slack ? 0.0 : u(rng);
    const auto inj = injection_at_power_factor(p);
    const auto s = solve_power_flow(net, inj);
    CHECK(s.max_mismatch < 1e-6);
    CHECK(balance_error(net, inj, s) < 1e-6);
    CHECK(s.losses_kw >= 0.0);
    double sum = 0;
    for (double x : p) sum += x;
    // slack supplies the loads plus the losses; the mismatch tolerance bounds the gap
    CHECK(std::abs(s.slack_p_kw - (sum + s.losses_kw)) < 1e-6 * net.base_kva * static_cast<double>(p.size()));
  }
}

TEST_CASE("halving the loading shrinks the deviation") {
  const auto net = benchmark();
  std::vector<double> p(net.buses.size(), 6.0);
  p[net.slack_index()] = 0.0;
  double last = max_dev(solve_power_flow(net, injection_at_power_factor(p)));
  for (int h = 0; h < 5; ++h) {
    for (auto& x : p) x *= 0.5;
    const double d = max_dev(solve_power_flow(net, injection_at_power_factor(p)));
    CHECK(d < last);
    last = d;
  }
}

TEST_CASE("deviation report takes maxima over buses and steps") {
  PowerFlowSolution a, b;
  a.v_pu = {1.0, 0.99, 0.985};
  a.angle_deg = {0, -0.5, -1.25};
  b.v_pu = {1.0, 1.004, 1.002};
  b.angle_deg = {0, 2.0, 0.5};
  const std::vector<PowerFlowSolution> both{a, b};
  const auto d = deviation_report(both);
  CHECK(d.max_voltage_deviation == doctest::Approx(0.015));
  CHECK(d.max_angle_deg == 2.0);
  const auto one = deviation_report(std::span<const PowerFlowSolution>(&a, 1));
  CHECK(one.max_voltage_deviation == doctest::Approx(0.015));
  CHECK(one.max_angle_deg == 1.25);
  CHECK(deviation_report({}).max_voltage_deviation == 0.0);
}

TEST_CASE("broken networks are rejected") {
  auto n = two_bus();
  n.buses[0].slack = false;
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n = two_bus();
  n.buses[1].slack = true;
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n = two_bus();
  n.buses.push_back({"island", false, ""});
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n = two_bus();
  n.lines[0].to = 7;
  CHECK_THROWS_AS(n.validate(), ValidationError);
  n = two_bus();
  CHECK_THROWS_AS(solve_power_flow(n, pq({0}, {0})), ValidationError);
}

TEST_CASE("an overloaded feeder does not converge") {
  const auto net = two_bus();
  try {
    solve_power_flow(net, pq({0, 5000.0}, {0, 2000.0}));
    FAIL("expected non-convergence");
  } catch (const PowerFlowNonConvergence& e) {
    CHECK(e.mismatch() > 1e-6);
  }
}
