#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "gridweave/error.hpp"

namespace gridweave::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  std::size_t var;
  double coef;
};

enum class Relation { LessEqual, Equal, GreaterEqual, Range };

/// A linear row `lower <= sum(coef * x[var]) <= upper`. Either side may be
/// infinite; the named constructors cover the usual relations.
struct Row {
  std::vector<Term> terms;
  double lower = -kInf;
  double upper = kInf;

  static Row less_equal(std::vector<Term> terms, double rhs) { return {std::move(terms), -kInf, rhs}; }
  static Row greater_equal(std::vector<Term> terms, double rhs) { return {std::move(terms), rhs, kInf}; }
  static Row equal(std::vector<Term> terms, double rhs) { return {std::move(terms), rhs, rhs}; }
  static Row range(std::vector<Term> terms, double lo, double hi) { return {std::move(terms), lo, hi}; }

  Relation relation() const;
};

/// minimize objective . x  subject to rows and per-variable bounds.
struct LpProblem {
  std::size_t n_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t add_var(double lo, double hi, double cost = 0.0);
  std::size_t add_row(Row row);
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

struct LpSolution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  std::size_t pivots = 0;
};

/// Thrown when the pivot budget is exhausted.
class MaxIterationsExceeded : public RuntimeFailure {
public:
  using RuntimeFailure::RuntimeFailure;
};

struct SimplexOptions {
  std::size_t max_pivots = 10000;
  std::size_t degenerate_before_bland = 500;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
};

/// Bounded-variable primal simplex over a dense tableau.
///
/// Every row gets a logical variable w = a.x carrying the row bounds, so the
/// tableau holds B^-1 [A | -I] and the slack basis is the starting point.
/// Phase 1 minimizes the sum of bound infeasibilities of the basic
/// variables; phase 2 uses Dantzig pricing and switches to Bland's rule for
/// the rest of the solve after a run of degenerate pivots. Ratio-test ties
/// go to the lowest variable index.
///
/// The solver keeps its basis between calls: after changing bounds with
/// set_var_bounds / set_row_bounds, solve() restarts from the previous
/// optimal basis.
class SimplexSolver {
public:
  explicit SimplexSolver(LpProblem problem, SimplexOptions options = {});

  LpSolution solve();

  void set_var_bounds(std::size_t var, double lo, double hi);
  void set_row_bounds(std::size_t row, double lo, double hi);

  const LpProblem& problem() const { return problem_; }
  std::size_t total_pivots() const { return total_pivots_; }

private:
  enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

  double& at(std::size_t r, std::size_t j) { return tableau_[r * cols_ + j]; }
  double at(std::size_t r, std::size_t j) const { return tableau_[r * cols_ + j]; }

  void build_slack_basis();
  void refactor();
  void recompute_basic_values();
  void place_nonbasic(std::size_t j);
  bool any_infeasible() const;
  void phase_costs(bool phase_one, std::vector<double>& costs) const;
  void compute_reduced_costs(const std::vector<double>& costs);
  bool run_phase(bool phase_one, std::size_t& pivots);
  void pivot(std::size_t row, std::size_t col);
  LpSolution extract(Status status, std::size_t pivots) const;

  LpProblem problem_;
  SimplexOptions options_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> tableau_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> cost_;
  std::vector<double> value_;
  std::vector<double> reduced_;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> pivot_nonzeros_;
  std::size_t total_pivots_ = 0;
  std::size_t pivots_since_refactor_ = 0;
  bool solved_once_ = false;
};

/// One-shot cold solve.
LpSolution solve_lp(const LpProblem& problem, SimplexOptions options = {});

/// Fixed-column MPS dump for cross-checking with external solvers.
void write_mps(const LpProblem& problem, std::ostream& out, const std::string& name = "GRIDWEAVE");

} // namespace gridweave::lp
