#include "gridweave/powerflow.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace gridweave {

using cd = std::complex<double>;

std::size_t Network::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].slack) return i;
  throw ValidationError("network has no slack bus");
}

std::size_t Network::index_of(const std::string& bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return i;
  throw ValidationError("unknown bus '" + bus_id + "'");
}

void Network::validate() const {
  if (buses.size() < 1) throw ValidationError("network has no buses");
  std::size_t slacks = 0;
  for (const auto& b : buses) slacks += b.slack ? 1 : 0;
  if (slacks != 1) throw ValidationError("network needs exactly one slack bus, found " + std::to_string(slacks));
  if (!(base_kv > 0.0) || !(base_kva > 0.0)) throw ValidationError("network base voltage and power must be > 0");
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& ln = lines[l];
    if (ln.from >= buses.size() || ln.to >= buses.size() || ln.from == ln.to)
      throw ValidationError("line " + std::to_string(l) + " has invalid endpoints");
    if (!(ln.length_m > 0.0)) throw ValidationError("line " + std::to_string(l) + " needs a positive length");
    if (ln.r_ohm_per_km < 0.0 || ln.x_ohm_per_km < 0.0 || (ln.r_ohm_per_km == 0.0 && ln.x_ohm_per_km == 0.0))
      throw ValidationError("line " + std::to_string(l) + " needs a nonzero, non-negative impedance");
  }
  // connectivity from the slack
  std::vector<bool> seen(buses.size(), false);
  std::vector<std::size_t> stack{slack_index()};
  seen[stack.back()] = true;
  while (!stack.empty()) {
    std::size_t b = stack.back();
    stack.pop_back();
    for (const auto& ln : lines) {
      std::size_t other = ln.from == b ? ln.to : (ln.to == b ? ln.from : SIZE_MAX);
      if (other != SIZE_MAX && !seen[other]) {
        seen[other] = true;
        stack.push_back(other);
      }
    }
  }
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (!seen[i]) throw ValidationError("bus '" + buses[i].id + "' is not connected to the slack bus");
}

BusInjection injection_at_power_factor(std::span<const double> p_kw, double power_factor) {
  if (!(power_factor > 0.0 && power_factor <= 1.0)) throw ValidationError("power factor must be in (0, 1]");
  const double k = std::tan(std::acos(power_factor));
  BusInjection inj;
  inj.p_kw.assign(p_kw.begin(), p_kw.end());
  inj.q_kvar.reserve(p_kw.size());
  for (double p : p_kw) inj.q_kvar.push_back(p * k);
  return inj;
}

namespace {

Eigen::MatrixXcd admittance(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  const double zb = net.base_impedance();
  for (const auto& ln : net.lines) {
    cd yl = 1.0 / cd(ln.resistance() / zb, ln.reactance() / zb);
    auto f = static_cast<Eigen::Index>(ln.from), t = static_cast<Eigen::Index>(ln.to);
    y(f, f) += yl;
    y(t, t) += yl;
    y(f, t) -= yl;
    y(t, f) -= yl;
  }
  return y;
}

} // namespace

PowerFlowSolution solve_power_flow(const Network& net, const BusInjection& inj, const PowerFlowOptions& opts) {
  net.validate();
  const std::size_t n = net.buses.size();
  if (inj.p_kw.size() != n || inj.q_kvar.size() != n)
    throw ValidationError("injections must give one value per bus");
  const std::size_t slack = net.slack_index();
  const Eigen::MatrixXcd y = admittance(net);

  // specified injections (generation positive) in p.u.
  std::vector<double> p_spec(n), q_spec(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(inj.p_kw[i]) || !std::isfinite(inj.q_kvar[i])) throw ValidationError("injections must be finite");
    p_spec[i] = -inj.p_kw[i] / net.base_kva;
    q_spec[i] = -inj.q_kvar[i] / net.base_kva;
  }

  std::vector<std::size_t> pq;
  for (std::size_t i = 0; i < n; ++i)
    if (i != slack) pq.push_back(i);
  const auto m = static_cast<Eigen::Index>(pq.size());

  std::vector<double> v(n, 1.0), th(n, 0.0);
  std::vector<double> p_calc(n), q_calc(n);
  auto compute = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double p = 0.0, q = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        cd yik = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (yik == cd(0.0, 0.0)) continue;
        double d = th[i] - th[k];
        p += v[i] * v[k] * (yik.real() * std::cos(d) + yik.imag() * std::sin(d));
        q += v[i] * v[k] * (yik.real() * std::sin(d) - yik.imag() * std::cos(d));
      }
      p_calc[i] = p;
      q_calc[i] = q;
    }
  };
  auto mismatch = [&] {
    double worst = 0.0;
    for (std::size_t i : pq) {
      worst = std::max(worst, std::abs(p_spec[i] - p_calc[i]));
      worst = std::max(worst, std::abs(q_spec[i] - q_calc[i]));
    }
    return worst;
  };

  PowerFlowSolution sol;
  compute();
  double mis = mismatch();
  int it = 0;
  while (mis >= opts.tolerance) {
    if (it >= opts.max_iterations) {
      throw PowerFlowNonConvergence("power flow did not converge in " + std::to_string(opts.max_iterations) +
                                        " iterations, mismatch " + std::to_string(mis) + " p.u.",
                                    mis);
    }
    ++it;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    Eigen::VectorXd rhs(2 * m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const std::size_t i = pq[static_cast<std::size_t>(a)];
      const auto ii = static_cast<Eigen::Index>(i);
      rhs(a) = p_spec[i] - p_calc[i];
      rhs(m + a) = q_spec[i] - q_calc[i];
      const double gii = y(ii, ii).real(), bii = y(ii, ii).imag();
      for (Eigen::Index b = 0; b < m; ++b) {
        const std::size_t k = pq[static_cast<std::size_t>(b)];
        const auto kk = static_cast<Eigen::Index>(k);
        if (i == k) {
          jac(a, b) = -q_calc[i] - bii * v[i] * v[i];          // dP/dth
          jac(a, m + b) = p_calc[i] / v[i] + gii * v[i];       // dP/dV
          jac(m + a, b) = p_calc[i] - gii * v[i] * v[i];       // dQ/dth
          jac(m + a, m + b) = q_calc[i] / v[i] - bii * v[i];   // dQ/dV
        } else {
          const cd yik = y(ii, kk);
          if (yik == cd(0.0, 0.0)) continue;
          const double d = th[i] - th[k];
          const double g = yik.real(), bb = yik.imag();
          jac(a, b) = v[i] * v[k] * (g * std::sin(d) - bb * std::cos(d));
          jac(a, m + b) = v[i] * (g * std::cos(d) + bb * std::sin(d));
          jac(m + a, b) = -v[i] * v[k] * (g * std::cos(d) + bb * std::sin(d));
          jac(m + a, m + b) = v[i] * (g * std::sin(d) - bb * std::cos(d));
        }
      }
    }
    Eigen::VectorXd dx = jac.partialPivLu().solve(rhs);
    for (Eigen::Index a = 0; a < m; ++a) {
      const std::size_t i = pq[static_cast<std::size_t>(a)];
      th[i] += dx(a);
      v[i] += dx(m + a);
    }
    compute();
    mis = mismatch();
    if (!std::isfinite(mis)) throw PowerFlowNonConvergence("power flow diverged", mis);
  }

  sol.iterations = it;
  sol.max_mismatch = mis;
  sol.v_pu = v;
  sol.angle_deg.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.angle_deg[i] = th[i] * 180.0 / std::numbers::pi;
  sol.slack_p_kw = p_calc[slack] * net.base_kva;
  sol.slack_q_kvar = q_calc[slack] * net.base_kva;
  double total_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) total_p += p_calc[i];
  sol.losses_kw = total_p * net.base_kva;
  return sol;
}

DeviationReport deviation_report(std::span<const PowerFlowSolution> solutions) {
  DeviationReport r;
  for (const auto& s : solutions) {
    for (double v : s.v_pu) r.max_voltage_deviation = std::max(r.max_voltage_deviation, std::abs(v - 1.0));
    for (double a : s.angle_deg) r.max_angle_deg = std::max(r.max_angle_deg, std::abs(a));
  }
  return r;
}

} // namespace gridweave
