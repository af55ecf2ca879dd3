#include "gridweave/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace gridweave::lp {

namespace {
constexpr double kDropTol = 1e-14;
constexpr double kTieTol = 1e-12;
constexpr double kDegenerateStep = 1e-12;
constexpr std::size_t kRefreshEvery = 64;
constexpr std::size_t kRefactorAfter = 4000;
} // namespace

Relation Row::relation() const {
  if (lower == upper) return Relation::Equal;
  if (std::isinf(lower)) return Relation::LessEqual;
  if (std::isinf(upper)) return Relation::GreaterEqual;
  return Relation::Range;
}

std::size_t LpProblem::add_var(double lo, double hi, double cost) {
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(cost);
  return n_vars++;
}

std::size_t LpProblem::add_row(Row row) {
  rows.push_back(std::move(row));
  return rows.size() - 1;
}

void LpProblem::validate() const {
  if (objective.size() != n_vars || lower.size() != n_vars || upper.size() != n_vars)
    throw ValidationError("LP vectors disagree with n_vars");
  for (std::size_t j = 0; j < n_vars; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
      throw ValidationError("LP variable " + std::to_string(j) + " has lower > upper");
    if (!std::isfinite(objective[j]))
      throw ValidationError("LP cost of variable " + std::to_string(j) + " is not finite");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (std::isnan(row.lower) || std::isnan(row.upper) || row.lower > row.upper)
      throw ValidationError("LP row " + std::to_string(r) + " has lower > upper");
    for (const auto& t : row.terms) {
      if (t.var >= n_vars)
        throw ValidationError("LP row " + std::to_string(r) + " references variable " +
                              std::to_string(t.var) + " >= n_vars");
      if (!std::isfinite(t.coef))
        throw ValidationError("LP row " + std::to_string(r) + " has a non-finite coefficient");
    }
  }
}

const char* to_string(Status s) {
  switch (s) {
  case Status::Optimal: return "optimal";
  case Status::Infeasible: return "infeasible";
  case Status::Unbounded: return "unbounded";
  }
  return "?";
}

SimplexSolver::SimplexSolver(LpProblem problem, SimplexOptions options)
    : problem_(std::move(problem)), options_(options) {
  problem_.validate();
  m_ = problem_.rows.size();
  n_ = problem_.n_vars;
  cols_ = n_ + m_;
  lo_.resize(cols_);
  hi_.resize(cols_);
  cost_.assign(cols_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    lo_[j] = problem_.lower[j];
    hi_[j] = problem_.upper[j];
    cost_[j] = problem_.objective[j];
  }
  for (std::size_t r = 0; r < m_; ++r) {
    lo_[n_ + r] = problem_.rows[r].lower;
    hi_[n_ + r] = problem_.rows[r].upper;
  }
  build_slack_basis();
}

void SimplexSolver::build_slack_basis() {
  tableau_.assign(m_ * cols_, 0.0);
  value_.assign(cols_, 0.0);
  reduced_.assign(cols_, 0.0);
  state_.assign(cols_, VarState::AtLower);
  basis_.resize(m_);
  // B = -I for the logical basis, so B^-1 [A | -I] = [-A | I].
  for (std::size_t r = 0; r < m_; ++r) {
    for (const auto& t : problem_.rows[r].terms) at(r, t.var) -= t.coef;
    at(r, n_ + r) = 1.0;
    basis_[r] = n_ + r;
    state_[n_ + r] = VarState::Basic;
  }
  for (std::size_t j = 0; j < n_; ++j) place_nonbasic(j);
  pivots_since_refactor_ = 0;
}

void SimplexSolver::place_nonbasic(std::size_t j) {
  if (std::isfinite(lo_[j])) {
    state_[j] = VarState::AtLower;
    value_[j] = lo_[j];
  } else if (std::isfinite(hi_[j])) {
    state_[j] = VarState::AtUpper;
    value_[j] = hi_[j];
  } else {
    state_[j] = VarState::FreeZero;
    value_[j] = 0.0;
  }
}

void SimplexSolver::set_var_bounds(std::size_t var, double lo, double hi) {
  if (var >= n_ || std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw ValidationError("invalid bounds for LP variable " + std::to_string(var));
  problem_.lower[var] = lo;
  problem_.upper[var] = hi;
  lo_[var] = lo;
  hi_[var] = hi;
  switch (state_[var]) {
  case VarState::Basic: break;
  case VarState::AtLower:
    if (std::isfinite(lo)) value_[var] = lo;
    else place_nonbasic(var);
    break;
  case VarState::AtUpper:
    if (std::isfinite(hi)) value_[var] = hi;
    else place_nonbasic(var);
    break;
  case VarState::FreeZero: place_nonbasic(var); break;
  }
}

void SimplexSolver::set_row_bounds(std::size_t row, double lo, double hi) {
  if (row >= m_ || std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw ValidationError("invalid bounds for LP row " + std::to_string(row));
  problem_.rows[row].lower = lo;
  problem_.rows[row].upper = hi;
  const std::size_t j = n_ + row;
  lo_[j] = lo;
  hi_[j] = hi;
  switch (state_[j]) {
  case VarState::Basic: break;
  case VarState::AtLower:
    if (std::isfinite(lo)) value_[j] = lo;
    else place_nonbasic(j);
    break;
  case VarState::AtUpper:
    if (std::isfinite(hi)) value_[j] = hi;
    else place_nonbasic(j);
    break;
  case VarState::FreeZero: place_nonbasic(j); break;
  }
}

void SimplexSolver::refactor() {
  if (m_ == 0) return;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(cols_));
  for (std::size_t r = 0; r < m_; ++r) {
    for (const auto& t : problem_.rows[r].terms)
      full(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t.var)) += t.coef;
    full(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n_ + r)) = -1.0;
  }
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
  for (std::size_t r = 0; r < m_; ++r) basis.col(static_cast<Eigen::Index>(r)) = full.col(static_cast<Eigen::Index>(basis_[r]));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) {
    build_slack_basis();
    return;
  }
  const Eigen::MatrixXd t = lu.solve(full);
  for (std::size_t r = 0; r < m_; ++r)
    for (std::size_t j = 0; j < cols_; ++j) {
      const double v = t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      at(r, j) = std::abs(v) < kDropTol ? 0.0 : v;
    }
  for (std::size_t r = 0; r < m_; ++r) {
    for (std::size_t s = 0; s < m_; ++s) at(s, basis_[r]) = (s == r) ? 1.0 : 0.0;
  }
  pivots_since_refactor_ = 0;
}

void SimplexSolver::recompute_basic_values() {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < cols_; ++j)
    if (state_[j] != VarState::Basic && value_[j] != 0.0) active.push_back(j);
  for (std::size_t r = 0; r < m_; ++r) {
    double v = 0.0;
    const double* row = &tableau_[r * cols_];
    for (std::size_t j : active) v -= row[j] * value_[j];
    value_[basis_[r]] = v;
  }
}

bool SimplexSolver::any_infeasible() const {
  const double tol = options_.feasibility_tol;
  for (std::size_t r = 0; r < m_; ++r) {
    const std::size_t j = basis_[r];
    if (value_[j] < lo_[j] - tol || value_[j] > hi_[j] + tol) return true;
  }
  return false;
}

void SimplexSolver::phase_costs(bool phase_one, std::vector<double>& costs) const {
  if (!phase_one) {
    costs = cost_;
    return;
  }
  costs.assign(cols_, 0.0);
  const double tol = options_.feasibility_tol;
  for (std::size_t r = 0; r < m_; ++r) {
    const std::size_t j = basis_[r];
    if (value_[j] < lo_[j] - tol) costs[j] = -1.0;
    else if (value_[j] > hi_[j] + tol) costs[j] = 1.0;
  }
}

void SimplexSolver::compute_reduced_costs(const std::vector<double>& costs) {
  reduced_ = costs;
  for (std::size_t r = 0; r < m_; ++r) {
    const double cb = costs[basis_[r]];
    if (cb == 0.0) continue;
    const double* row = &tableau_[r * cols_];
    for (std::size_t j = 0; j < cols_; ++j)
      if (row[j] != 0.0) reduced_[j] -= cb * row[j];
  }
  for (std::size_t r = 0; r < m_; ++r) reduced_[basis_[r]] = 0.0;
}

void SimplexSolver::pivot(std::size_t p, std::size_t q) {
  double* prow = &tableau_[p * cols_];
  const double inv = 1.0 / prow[q];
  pivot_nonzeros_.clear();
  for (std::size_t j = 0; j < cols_; ++j) {
    if (prow[j] == 0.0) continue;
    prow[j] *= inv;
    if (std::abs(prow[j]) < kDropTol) prow[j] = 0.0;
    else pivot_nonzeros_.push_back(j);
  }
  prow[q] = 1.0;
  for (std::size_t r = 0; r < m_; ++r) {
    if (r == p) continue;
    double* row = &tableau_[r * cols_];
    const double f = row[q];
    if (f == 0.0) continue;
    for (std::size_t j : pivot_nonzeros_) {
      double v = row[j] - f * prow[j];
      row[j] = std::abs(v) < kDropTol ? 0.0 : v;
    }
    row[q] = 0.0;
  }
  const double f = reduced_[q];
  if (f != 0.0) {
    for (std::size_t j : pivot_nonzeros_) reduced_[j] -= f * prow[j];
    reduced_[q] = 0.0;
  }
  ++pivots_since_refactor_;
}

bool SimplexSolver::run_phase(bool phase_one, std::size_t& pivots) {
  std::vector<double> costs;
  phase_costs(phase_one, costs);
  compute_reduced_costs(costs);
  bool bland = false;
  std::size_t degenerate_run = 0;
  std::size_t since_refresh = 0;
  const double dtol = options_.optimality_tol;

  for (;;) {
    if (phase_one) {
      if (!any_infeasible()) return true;
      phase_costs(true, costs);
      compute_reduced_costs(costs);
    } else if (since_refresh >= kRefreshEvery) {
      recompute_basic_values();
      compute_reduced_costs(costs);
      since_refresh = 0;
    }

    // Pricing.
    std::size_t q = cols_;
    int dir = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic || lo_[j] == hi_[j]) continue;
      const double d = reduced_[j];
      int cand = 0;
      if (d < -dtol && (s == VarState::AtLower || s == VarState::FreeZero)) cand = 1;
      else if (d > dtol && (s == VarState::AtUpper || s == VarState::FreeZero)) cand = -1;
      if (cand == 0) continue;
      if (bland) {
        q = j;
        dir = cand;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = cand;
      }
    }
    if (q == cols_) return true;

    // Ratio test.
    const double ftol = options_.feasibility_tol;
    double step = kInf;
    std::size_t leave_row = m_; // m_ marks a bound flip of the entering variable
    std::size_t leave_var = cols_;
    bool leave_at_upper = false;
    if (std::isfinite(lo_[q]) && std::isfinite(hi_[q])) {
      step = hi_[q] - lo_[q];
      leave_var = q;
    }
    for (std::size_t r = 0; r < m_; ++r) {
      const double a = -at(r, q) * dir;
      if (std::abs(a) <= options_.pivot_tol) continue;
      const std::size_t j = basis_[r];
      const double z = value_[j];
      double lim;
      bool to_upper;
      if (phase_one && z < lo_[j] - ftol) {
        if (a < 0.0) continue;
        lim = (lo_[j] - z) / a;
        to_upper = false;
      } else if (phase_one && z > hi_[j] + ftol) {
        if (a > 0.0) continue;
        lim = (hi_[j] - z) / a;
        to_upper = true;
      } else if (a > 0.0) {
        if (!std::isfinite(hi_[j])) continue;
        lim = std::max(0.0, (hi_[j] - z) / a);
        to_upper = true;
      } else {
        if (!std::isfinite(lo_[j])) continue;
        lim = std::max(0.0, (lo_[j] - z) / a);
        to_upper = false;
      }
      if (lim < step - kTieTol || (lim <= step + kTieTol && j < leave_var)) {
        step = std::min(step, lim);
        leave_row = r;
        leave_var = j;
        leave_at_upper = to_upper;
      }
    }

    if (!std::isfinite(step)) {
      if (phase_one) return true; // no finite breakpoint: cannot reduce infeasibility along q
      return false;
    }
    if (++pivots > options_.max_pivots)
      throw MaxIterationsExceeded("simplex exceeded " + std::to_string(options_.max_pivots) + " pivots");
    ++total_pivots_;
    ++since_refresh;

    if (step <= kDegenerateStep) {
      if (++degenerate_run >= options_.degenerate_before_bland) bland = true;
    } else {
      degenerate_run = 0;
    }

    const double delta = step * dir;
    if (delta != 0.0) {
      for (std::size_t r = 0; r < m_; ++r) {
        const double t = at(r, q);
        if (t != 0.0) value_[basis_[r]] -= t * delta;
      }
    }
    if (leave_row == m_) {
      // Entering variable runs to its opposite bound.
      if (dir > 0) {
        state_[q] = VarState::AtUpper;
        value_[q] = hi_[q];
      } else {
        state_[q] = VarState::AtLower;
        value_[q] = lo_[q];
      }
      continue;
    }
    value_[q] += delta;
    const std::size_t out = basis_[leave_row];
    pivot(leave_row, q);
    basis_[leave_row] = q;
    state_[q] = VarState::Basic;
    if (leave_at_upper && lo_[out] != hi_[out]) {
      state_[out] = VarState::AtUpper;
      value_[out] = hi_[out];
    } else {
      state_[out] = VarState::AtLower;
      value_[out] = lo_[out];
    }
  }
}

LpSolution SimplexSolver::extract(Status status, std::size_t pivots) const {
  LpSolution sol;
  sol.status = status;
  sol.pivots = pivots;
  sol.x.assign(value_.begin(), value_.begin() + static_cast<std::ptrdiff_t>(n_));
  double obj = 0.0;
  for (std::size_t j = 0; j < n_; ++j) obj += cost_[j] * sol.x[j];
  sol.objective_value = obj;
  return sol;
}

LpSolution SimplexSolver::solve() {
  if (pivots_since_refactor_ > kRefactorAfter) refactor();
  std::size_t pivots = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    recompute_basic_values();
    if (any_infeasible()) {
      run_phase(true, pivots);
      recompute_basic_values();
      if (any_infeasible()) return extract(Status::Infeasible, pivots);
    }
    if (!run_phase(false, pivots)) return extract(Status::Unbounded, pivots);
    recompute_basic_values();

    // Certify against the original rows rather than the tableau.
    double worst = 0.0;
    for (std::size_t j = 0; j < n_; ++j)
      worst = std::max({worst, lo_[j] - value_[j], value_[j] - hi_[j]});
    for (std::size_t r = 0; r < m_; ++r) {
      double act = 0.0;
      for (const auto& t : problem_.rows[r].terms) act += t.coef * value_[t.var];
      worst = std::max({worst, lo_[n_ + r] - act, act - hi_[n_ + r]});
    }
    if (worst < 1e-8) {
      solved_once_ = true;
      return extract(Status::Optimal, pivots);
    }
    refactor();
  }
  throw RuntimeFailure("simplex lost feasibility to round-off after refactorization");
}

LpSolution solve_lp(const LpProblem& problem, SimplexOptions options) {
  SimplexSolver solver(problem, options);
  return solver.solve();
}

void write_mps(const LpProblem& problem, std::ostream& out, const std::string& name) {
  auto row_name = [](std::size_t r) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "R%07zu", r);
    return std::string(buf);
  };
  auto col_name = [](std::size_t j) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "C%07zu", j);
    return std::string(buf);
  };
  auto line = [&out](const char* f1, const std::string& f2, const std::string& f3, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %12.6g\n", f1, f2.c_str(), f3.c_str(), v);
    out << buf;
  };

  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  COST\n";
  std::vector<bool> skip(problem.rows.size(), false);
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    const auto& row = problem.rows[r];
    const char* kind = "G";
    if (std::isinf(row.lower) && std::isinf(row.upper)) {
      skip[r] = true;
      continue;
    }
    switch (row.relation()) {
    case Relation::Equal: kind = "E"; break;
    case Relation::LessEqual: kind = "L"; break;
    case Relation::GreaterEqual:
    case Relation::Range: kind = "G"; break;
    }
    out << " " << kind << "  " << row_name(r) << "\n";
  }

  std::vector<std::map<std::size_t, double>> columns(problem.n_vars);
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    if (skip[r]) continue;
    for (const auto& t : problem.rows[r].terms) columns[t.var][r] += t.coef;
  }
  out << "COLUMNS\n";
  for (std::size_t j = 0; j < problem.n_vars; ++j) {
    if (problem.objective[j] != 0.0) line("", col_name(j), "COST", problem.objective[j]);
    for (const auto& [r, v] : columns[j]) line("", col_name(j), row_name(r), v);
  }
  out << "RHS\n";
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    if (skip[r]) continue;
    const auto& row = problem.rows[r];
    const double rhs = row.relation() == Relation::LessEqual ? row.upper : row.lower;
    if (rhs != 0.0) line("", "RHS", row_name(r), rhs);
  }
  out << "RANGES\n";
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    if (skip[r] || problem.rows[r].relation() != Relation::Range) continue;
    line("", "RNG", row_name(r), problem.rows[r].upper - problem.rows[r].lower);
  }
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < problem.n_vars; ++j) {
    const double lo = problem.lower[j];
    const double hi = problem.upper[j];
    if (lo == hi) {
      line("FX", "BND", col_name(j), lo);
      continue;
    }
    if (std::isinf(lo) && std::isinf(hi)) {
      out << " FR BND       " << col_name(j) << "\n";
      continue;
    }
    if (std::isinf(lo)) out << " MI BND       " << col_name(j) << "\n";
    else if (lo != 0.0) line("LO", "BND", col_name(j), lo);
    if (std::isfinite(hi)) line("UP", "BND", col_name(j), hi);
  }
  out << "ENDATA\n";
}

} // namespace gridweave::lp
