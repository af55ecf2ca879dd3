#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gridweave/lp.hpp"
#include "oracles.hpp"

using namespace gridweave::lp;

namespace {

double primal_residual(const LpProblem& p, const std::vector<double>& x) {
  double r = 0.0;
  for (std::size_t j = 0; j < p.n_vars; ++j) {
    r = std::max(r, p.lower[j] - x[j]);
    r = std::max(r, x[j] - p.upper[j]);
  }
  for (const auto& row : p.rows) {
    double s = 0.0;
    for (const auto& t : row.terms) s += t.coef * x[t.var];
    r = std::max(r, row.lower - s);
    r = std::max(r, s - row.upper);
  }
  return r;
}

} // namespace

TEST_CASE("two-variable example") {
  LpProblem p;
  p.add_var(0, 1, -1);
  p.add_var(0, 1, -1);
  p.add_row(Row::less_equal({{0, 1}, {1, 1}}, 1));
  const auto s = solve_lp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(-1.0));
  CHECK(s.x[0] + s.x[1] == doctest::Approx(1.0));
}

TEST_CASE("contradictory constraints are infeasible") {
  LpProblem p;
  p.add_var(-kInf, kInf, 1);
  p.add_row(Row::greater_equal({{0, 1}}, 2));
  p.add_row(Row::less_equal({{0, 1}}, 1));
  CHECK(solve_lp(p).status == Status::Infeasible);

  LpProblem q;
  q.add_var(0, 1, 0);
  q.add_row(Row::greater_equal({{0, 1}}, 2));
  CHECK(solve_lp(q).status == Status::Infeasible);
}

TEST_CASE("unbounded ray") {
  LpProblem p;
  p.add_var(0, kInf, -1);
  p.add_var(0, kInf, 0);
  p.add_row(Row::less_equal({{0, 1}, {1, -1}}, 3));
  CHECK(solve_lp(p).status == Status::Unbounded);
}

TEST_CASE("free variables and equality rows") {
  // min x - y, x + y = 4, x - y >= -2, x, y free -> x = 1, y = 3
  LpProblem p;
  p.add_var(-kInf, kInf, 1);
  p.add_var(-kInf, kInf, -1);
  p.add_row(Row::equal({{0, 1}, {1, 1}}, 4));
  p.add_row(Row::greater_equal({{0, 1}, {1, -1}}, -2));
  const auto s = solve_lp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(-2.0));
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(3.0));
}

TEST_CASE("malformed problems are rejected") {
  LpProblem p;
  p.add_var(0, 1, 0);
  p.rows.push_back(Row::less_equal({{3, 1}}, 1));
  CHECK_THROWS_AS(p.validate(), gridweave::ValidationError);
  LpProblem q;
  q.add_var(2, 1, 0);
  CHECK_THROWS_AS(q.validate(), gridweave::ValidationError);
  CHECK_THROWS_AS(solve_lp(q), gridweave::ValidationError);
}

TEST_CASE("random LPs agree with vertex enumeration") {
  std::mt19937_64 rng(20240611);
  int optimal = 0, infeasible = 0, unbounded = 0;
  for (int t = 0; t < 300; ++t) {
    const LpProblem p = oracle::random_lp(rng);
    const auto want = oracle::enumerate_vertices(p);
    const auto got = solve_lp(p);
    INFO("case " << t);
    REQUIRE(got.status == want.status);
    if (got.status == Status::Optimal) {
      ++optimal;
      CHECK(got.objective_value == doctest::Approx(want.objective).epsilon(1e-6).scale(1.0));
      CHECK(primal_residual(p, got.x) < 1e-8);
    } else if (got.status == Status::Infeasible) {
      ++infeasible;
    } else {
      ++unbounded;
    }
  }
  // the generator must exercise every outcome
  CHECK(optimal >= 100);
  CHECK(infeasible > 0);
  CHECK(unbounded > 0);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    const LpProblem p = oracle::random_lp(rng);
    const auto a = solve_lp(p), b = solve_lp(p);
    CHECK(a.status == b.status);
    CHECK(a.pivots == b.pivots);
    CHECK(a.x == b.x);
  }
}

TEST_CASE("warm start after bound changes matches a cold solve") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 60; ++t) {
    LpProblem p = oracle::random_lp(rng);
    if (p.rows.empty()) continue;
    SimplexSolver warm(p);
    if (warm.solve().status != Status::Optimal) continue;
    // shift one row and one variable
    const std::size_t r = 0;
    const double lo = p.rows[r].lower + u(rng), hi = std::max(lo, p.rows[r].upper + u(rng));
    warm.set_row_bounds(r, lo, hi);
    p.rows[r].lower = lo;
    p.rows[r].upper = hi;
    const double vlo = std::isfinite(p.lower[0]) ? p.lower[0] - 1 : p.lower[0];
    warm.set_var_bounds(0, vlo, p.upper[0]);
    p.lower[0] = vlo;
    const auto w = warm.solve();
    const auto c = solve_lp(p);
    REQUIRE(w.status == c.status);
    if (c.status == Status::Optimal) CHECK(w.objective_value == doctest::Approx(c.objective_value).scale(1.0));
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("degenerate problem terminates") {
  // many redundant constraints through the optimum
  LpProblem p;
  for (int j = 0; j < 3; ++j) p.add_var(0, kInf, -1);
  for (int i = 1; i <= 20; ++i)
    p.add_row(Row::less_equal({{0, 1.0 * i}, {1, 1.0 * i}, {2, 1.0 * i}}, 0.0));
  p.add_row(Row::less_equal({{0, 1}}, 0));
  const auto s = solve_lp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(0.0));
}

TEST_CASE("pivot budget is enforced") {
  // x_j <= sum of earlier x plus 1 chains the basis changes
  LpProblem p;
  for (int j = 0; j < 8; ++j) p.add_var(0, kInf, -1.0);
  for (std::size_t j = 0; j < 8; ++j) {
    std::vector<Term> t{{j, 1.0}};
    for (std::size_t i = 0; i < j; ++i) t.push_back({i, -1.0});
    p.add_row(Row::less_equal(t, 1.0));
  }
  const auto full = solve_lp(p);
  REQUIRE(full.status == Status::Optimal);
  REQUIRE(full.pivots > 2);
  SimplexOptions o;
  o.max_pivots = 2;
  CHECK_THROWS_AS(solve_lp(p, o), MaxIterationsExceeded);
}

TEST_CASE("mps dump") {
  LpProblem p;
  p.add_var(0, 1, -1);
  p.add_var(-kInf, kInf, 2);
  p.add_row(Row::range({{0, 1}, {1, 1}}, -1, 1));
  std::ostringstream os;
  write_mps(p, os, "T");
  const std::string s = os.str();
  CHECK(s.find("NAME") == 0);
  CHECK(s.find("ROWS") != std::string::npos);
  CHECK(s.find("RANGES") != std::string::npos);
  CHECK(s.find(" FR ") != std::string::npos);
  CHECK(s.find("ENDATA") != std::string::npos);
}
