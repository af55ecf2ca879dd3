#include "gridweave/coordinator.hpp"

#include <cmath>

namespace gridweave {

LocalLink::LocalLink(std::vector<ControllerModel> models) {
  controllers_.reserve(models.size());
  for (auto& m : models) controllers_.emplace_back(std::move(m));
}

PlanReply LocalLink::request(std::size_t index, const PlanRequest& request) {
  MpcPlan plan = controllers_.at(index).solve(request.input);
  return PlanReply{std::move(plan.net_load), plan.schedule.front()};
}

void ConvergenceConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("convergence epsilon must be > 0");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
}

IsoState::IsoState(std::vector<std::string> ids_, std::size_t n)
    : ids(std::move(ids_)), n_steps(n), current(ids.size(), Profile(n)),
      previous(ids.size(), Profile(n)), previous_step(ids.size(), Profile(n)) {}

void IsoState::seed(const std::vector<Profile>& plans, bool roll) {
  if (plans.size() != ids.size()) throw ValidationError("seed plans do not cover the controller set");
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (plans[i].size() != n_steps) throw ValidationError("seed plan for " + ids[i] + " has wrong length");
    previous_step[i] = roll ? plans[i].rolled() : plans[i];
  }
}

Profile sigma_for(const IsoState& state, std::size_t i, int l) {
  const std::size_t n = state.ids.size();
  if (i >= n) throw ValidationError("controller index out of range");
  if (l < 1) throw ValidationError("iteration numbers start at 1");
  const auto& later = (l == 1) ? state.previous_step : state.previous;
  if (state.current.size() != n || later.size() != n)
    throw ValidationError("ISO state does not hold a plan for every registered controller");
  Profile sigma(state.n_steps);
  for (std::size_t j = 0; j < i; ++j) sigma += state.current[j];
  for (std::size_t j = i + 1; j < n; ++j) sigma += later[j];
  return sigma;
}

RoundResult run_round(ControllerLink& link, IsoState& state, const RoundContext& ctx,
                      const ConvergenceConfig& cfg) {
  cfg.validate();
  const std::size_t n = state.ids.size();
  if (n == 0) throw ValidationError("no controllers registered");
  if (link.size() != n || ctx.x0.size() != n)
    throw ValidationError("controller link, ISO state and initial states disagree on the controller set");

  RoundResult result;
  result.plans.resize(n);
  state.iteration = 0;
  state.aggregate_history.assign(1, Profile(state.n_steps));

  const int max_iter = ctx.coordinate ? cfg.max_iterations : 1;
  for (int l = 1; l <= max_iter; ++l) {
    state.iteration = l;
    for (std::size_t i = 0; i < n; ++i) {
      PlanRequest req;
      req.round = ctx.round_id;
      req.iteration = l;
      req.input.k0 = ctx.k0;
      req.input.x0 = ctx.x0[i];
      if (ctx.coordinate) {
        req.input.sigma = sigma_for(state, i, l);
        req.input.band = ctx.band;
        req.input.band_steps = ctx.band ? ctx.band_steps : 0;
        req.input.global_limit = ctx.global_limit;
      } else {
        req.input.sigma = Profile(state.n_steps);
      }
      try {
        result.plans[i] = link.request(i, req);
      } catch (const Error& e) {
        throw RuntimeFailure("round at step " + std::to_string(ctx.k0) + " aborted: controller " +
                             state.ids[i] + " failed in iteration " + std::to_string(l) + ": " + e.what());
      }
      if (result.plans[i].net_load.size() != state.n_steps)
        throw RuntimeFailure("controller " + state.ids[i] + " returned a plan of wrong length");
      state.current[i] = result.plans[i].net_load;
    }
    Profile u = aggregate(state.current, state.n_steps);
    result.residual = (u - state.aggregate_history.back()).max_abs();
    state.aggregate_history.push_back(u);
    state.previous = state.current;
    result.iterations_used = l;
    result.aggregate = std::move(u);
    if (!ctx.coordinate || result.residual < cfg.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Band commit_day_ahead(const RoundResult& round, double half_width) {
  if (!(half_width >= 0.0)) throw ValidationError("band half_width must be >= 0");
  return Band{round.aggregate, half_width};
}

} // namespace gridweave
