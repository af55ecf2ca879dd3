#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "gridweave/coordinator.hpp"
#include "gridweave/transport.hpp"

using namespace gridweave;

namespace {

// Controllers that ignore sigma and always answer with the same plan.
class ConstantLink final : public ControllerLink {
public:
  ConstantLink(std::vector<std::string> ids, std::vector<Profile> plans)
      : ids_(std::move(ids)), plans_(std::move(plans)) {}
  std::size_t size() const override { return ids_.size(); }
  const std::string& id(std::size_t i) const override { return ids_.at(i); }
  PlanReply request(std::size_t i, const PlanRequest& req) override {
    calls.push_back({i, req.iteration});
    sigmas.push_back(req.input.sigma);
    return {plans_.at(i), Setpoints{}};
  }
  std::vector<std::pair<std::size_t, int>> calls;
  std::vector<Profile> sigmas;

private:
  std::vector<std::string> ids_;
  std::vector<Profile> plans_;
};

// A controller pair that never settles: each answers twice the other plus one.
class SeesawLink final : public ControllerLink {
public:
  std::size_t size() const override { return 2; }
  const std::string& id(std::size_t i) const override { return ids_.at(i); }
  PlanReply request(std::size_t, const PlanRequest& req) override {
    Profile p(req.input.sigma.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = 1.0 + 2.0 * req.input.sigma[k];
    return {p, Setpoints{}};
  }

private:
  std::vector<std::string> ids_{"a", "b"};
};

class FailingLink final : public ControllerLink {
public:
  std::size_t size() const override { return 2; }
  const std::string& id(std::size_t i) const override { return ids_.at(i); }
  PlanReply request(std::size_t i, const PlanRequest& req) override {
    if (i == 1 && req.iteration == 2) throw MpcInfeasible("no feasible plan");
    return {Profile(24, 1.0 + static_cast<double>(req.iteration)), Setpoints{}};
  }

private:
  std::vector<std::string> ids_{"first", "second"};
};

RoundContext context(std::size_t n) {
  RoundContext ctx;
  ctx.x0.resize(n);
  return ctx;
}

} // namespace

TEST_CASE("sigma from current and previous plans") {
  IsoState s({"c1", "c2", "c3"}, 2);
  s.current[0] = Profile{1, 1};
  s.previous[2] = Profile{3, 3};
  s.current[2] = Profile{100, 100}; // not yet valid for controller 2
  CHECK(sigma_for(s, 1, 2) == Profile{4, 4});

  // controller 1 sees only the previous sweep of the others
  s.previous[1] = Profile{2, 0.5};
  CHECK(sigma_for(s, 0, 2) == Profile{5, 3.5});
  // the last one sees only the current sweep
  s.current[1] = Profile{0, 7};
  CHECK(sigma_for(s, 2, 2) == Profile{1, 8});
}

TEST_CASE("first sweep uses the previous time step") {
  IsoState s({"c1", "c2", "c3"}, 3);
  s.seed({Profile{9, 9, 9}, Profile{1, 2, 3}, Profile{4, 5, 6}}, false);
  CHECK(sigma_for(s, 0, 1) == Profile{5, 7, 9});
  s.seed({Profile{9, 9, 9}, Profile{1, 2, 3}, Profile{4, 5, 6}}, true);
  CHECK(sigma_for(s, 0, 1) == Profile{7, 9, 5});
}

TEST_CASE("sigma of a lone controller is zero") {
  IsoState s({"only"}, 24);
  s.previous_step[0] = Profile(24, 3.0);
  CHECK(sigma_for(s, 0, 1) == Profile(24));
  CHECK(sigma_for(s, 0, 5) == Profile(24));
  CHECK_THROWS_AS(sigma_for(s, 1, 1), ValidationError);
  CHECK_THROWS_AS(sigma_for(s, 0, 0), ValidationError);
}

TEST_CASE("constant controllers converge at the second sweep") {
  const std::vector<Profile> plans{Profile(24, 1.5), Profile(24, -0.25), Profile(24, 4.0)};
  ConstantLink link({"a", "b", "c"}, plans);
  IsoState state({"a", "b", "c"}, 24);
  const auto r = run_round(link, state, context(3), ConvergenceConfig{});
  CHECK(r.converged);
  CHECK(r.iterations_used == 2);
  CHECK(r.aggregate == aggregate(plans));
  CHECK(r.residual == 0.0);
  // visits in registration order, one sweep after the other
  const std::vector<std::pair<std::size_t, int>> want{{0, 1}, {1, 1}, {2, 1}, {0, 2}, {1, 2}, {2, 2}};
  CHECK(link.calls == want);
  // sweep 2, controller b: a from this sweep, c from the last one
  CHECK(link.sigmas[4] == Profile(24, 5.5));
  // U^0 = 0, U^1, U^2
  REQUIRE(state.aggregate_history.size() == 3);
  CHECK(state.aggregate_history[0] == Profile(24));
  CHECK(state.aggregate_history[2] == aggregate(plans));
}

TEST_CASE("infinite epsilon stops after one sweep") {
  ConstantLink link({"a", "b"}, {Profile(24, 1.0), Profile(24, 2.0)});
  IsoState state({"a", "b"}, 24);
  ConvergenceConfig cfg{std::numeric_limits<double>::infinity(), 50};
  const auto r = run_round(link, state, context(2), cfg);
  CHECK(r.converged);
  CHECK(r.iterations_used == 1);
  CHECK(r.aggregate == Profile(24, 3.0));
}

TEST_CASE("one real controller confirms its plan in the second sweep") {
  LocalLink link({fixture::full_house("h")});
  IsoState state({"h"}, 24);
  auto ctx = context(1);
  ctx.x0[0] = ControllerState::initial(fixture::full_house());
  const auto r = run_round(link, state, ctx, ConvergenceConfig{});
  CHECK(r.converged);
  CHECK(r.iterations_used == 2);
  CHECK(state.aggregate_history[1] == state.aggregate_history[2]);
}

TEST_CASE("houses with fixed loads settle at their sum") {
  std::vector<ControllerModel> ms;
  for (double load : {1.0, 2.5, 0.75}) {
    auto m = fixture::idle_house("h" + std::to_string(ms.size()));
    m.forecast = fixture::flat_series(24, 20, load);
    ms.push_back(m);
  }
  LocalLink link(ms);
  IsoState state({"h0", "h1", "h2"}, 24);
  auto ctx = context(3);
  ctx.global_limit = 10.0;
  ctx.band = Band{Profile(24, 4.0), 2.0};
  ctx.band_steps = 24;
  const auto r = run_round(link, state, ctx, ConvergenceConfig{});
  CHECK(r.converged);
  CHECK(r.iterations_used == 2);
  for (std::size_t k = 0; k < 24; ++k) CHECK(r.aggregate[k] == doctest::Approx(4.25));
}

TEST_CASE("a round that does not settle reports it") {
  SeesawLink link;
  IsoState state({"a", "b"}, 4);
  ConvergenceConfig cfg{0.1, 7};
  const auto r = run_round(link, state, context(2), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations_used == 7);
  CHECK(r.residual >= 0.1);
  CHECK(state.aggregate_history.size() == 8);
}

TEST_CASE("aggregate of every sweep is the sum of that sweep's plans") {
  SeesawLink link;
  IsoState state({"a", "b"}, 4);
  ConvergenceConfig cfg{0.1, 5};
  run_round(link, state, context(2), cfg);
  CHECK(state.aggregate_history.back() == aggregate(state.current));
}

TEST_CASE("controller failure aborts the round with context") {
  FailingLink link;
  IsoState state({"first", "second"}, 24);
  auto ctx = context(2);
  ctx.k0 = 13;
  try {
    run_round(link, state, ctx, ConvergenceConfig{});
    FAIL("expected an abort");
  } catch (const RuntimeFailure& e) {
    const std::string msg = e.what();
    CHECK(msg.find("second") != std::string::npos);
    CHECK(msg.find("iteration 2") != std::string::npos);
    CHECK(msg.find("step 13") != std::string::npos);
  }
}

TEST_CASE("coordination off: one sweep, no sigma") {
  ConstantLink link({"a", "b"}, {Profile(24, 1.0), Profile(24, 2.0)});
  IsoState state({"a", "b"}, 24);
  state.previous_step[1] = Profile(24, 7.0);
  auto ctx = context(2);
  ctx.coordinate = false;
  const auto r = run_round(link, state, ctx, ConvergenceConfig{});
  CHECK(r.iterations_used == 1);
  for (const auto& s : link.sigmas) CHECK(s == Profile(24));
}

TEST_CASE("configuration checks") {
  CHECK_THROWS_AS((ConvergenceConfig{0.0, 5}.validate()), ValidationError);
  CHECK_THROWS_AS((ConvergenceConfig{0.1, 0}.validate()), ValidationError);
  ConstantLink link({"a"}, {Profile(24)});
  IsoState state({"a", "b"}, 24);
  CHECK_THROWS_AS(run_round(link, state, context(2), {}), ValidationError);
}

TEST_CASE("day-ahead commitment") {
  RoundResult r;
  r.aggregate = Profile(24, 5.0);
  const Band b = commit_day_ahead(r, 2.0);
  CHECK(b.lower(3) == 3.0);
  CHECK(b.upper(3) == 7.0);
  const Band z = commit_day_ahead(r, 0.0);
  CHECK(z.lower(0) == z.upper(0));
  CHECK_THROWS_AS(commit_day_ahead(r, -1.0), ValidationError);
}

TEST_CASE("committed profile survives the wire bit for bit") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int t = 0; t < 50; ++t) {
    RoundResult r;
    r.aggregate = Profile(24);
    for (std::size_t k = 0; k < 24; ++k) r.aggregate[k] = u(rng);
    const Band b = commit_day_ahead(r, 2.0);
    transport::SigmaReply msg;
    msg.profile = Profile(24);
    msg.band = b.committed;
    msg.half_width = b.half_width;
    const auto back = std::get<transport::SigmaReply>(transport::decode(transport::encode(msg)));
    CHECK(*back.band == b.committed);
  }
}

TEST_CASE("registration order changes the path, not determinism") {
  auto run = [](std::vector<ControllerModel> ms) {
    std::vector<std::string> ids;
    for (const auto& m : ms) ids.push_back(m.id);
    LocalLink link(ms);
    IsoState state(ids, 24);
    auto ctx = context(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) ctx.x0[i] = ControllerState::initial(ms[i]);
    ctx.global_limit = 5.0;
    return run_round(link, state, ctx, ConvergenceConfig{});
  };
  const std::vector<ControllerModel> fleet{fixture::full_house("a"), fixture::boiler_house("b")};
  const auto x = run(fleet), y = run(fleet);
  CHECK(x.aggregate == y.aggregate);
  CHECK(x.iterations_used == y.iterations_used);
  CHECK(x.converged);
  for (std::size_t k = 0; k < 24; ++k) CHECK(std::abs(x.aggregate[k]) <= 5.0 + 1e-9);
}
