#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/mpc.hpp"

namespace gridweave {

/// What a regulator hands back to the ISO: its predicted net load and the
/// setpoints of the first step (needed by the plant to apply the move).
struct PlanReply {
  Profile net_load;
  Setpoints first_step;
};

struct PlanRequest {
  std::uint64_t round = 0;
  int iteration = 0;
  MpcInput input;
};

/// How the ISO reaches the regulators: in-process calls or the wire
/// protocol. Requests are issued strictly one at a time.
class ControllerLink {
public:
  virtual ~ControllerLink() = default;
  virtual std::size_t size() const = 0;
  virtual const std::string& id(std::size_t index) const = 0;
  virtual PlanReply request(std::size_t index, const PlanRequest& request) = 0;
};

/// Regulators living in the same process.
class LocalLink final : public ControllerLink {
public:
  explicit LocalLink(std::vector<ControllerModel> models);
  std::size_t size() const override { return controllers_.size(); }
  const std::string& id(std::size_t index) const override { return controllers_.at(index).model().id; }
  PlanReply request(std::size_t index, const PlanRequest& request) override;

private:
  std::vector<MpcController> controllers_;
};

struct ConvergenceConfig {
  double epsilon = 0.1; // kW, infinity norm of U^l - U^(l-1)
  int max_iterations = 50;
  void validate() const;
};

/// Plans held by the ISO for the registered controller set, in
/// registration order.
struct IsoState {
  std::vector<std::string> ids;
  std::size_t n_steps = 24;
  std::vector<Profile> current;       // u_j^l (this sweep, once submitted)
  std::vector<Profile> previous;      // u_j^(l-1)
  std::vector<Profile> previous_step; // u_j from the previous time step, seeds l = 1
  int iteration = 0;
  std::vector<Profile> aggregate_history; // U^0 = 0, U^1, ...

  IsoState() = default;
  IsoState(std::vector<std::string> ids, std::size_t n_steps);

  /// Installs the seed plans for the next round, optionally rolled by one
  /// step for a receding-horizon advance.
  void seed(const std::vector<Profile>& plans, bool roll);
};

/// Aggregate of the other controllers as seen by controller `i` during
/// sweep `l`: current-sweep plans for j < i, previous-sweep plans (or the
/// previous time step's when l = 1) for j > i.
Profile sigma_for(const IsoState& state, std::size_t i, int l);

/// Per-round context shared by every controller.
struct RoundContext {
  std::size_t k0 = 0;
  std::vector<ControllerState> x0; // by controller index
  std::optional<Band> band;
  std::size_t band_steps = 0;
  std::optional<double> global_limit;
  bool coordinate = true; // false: sigma = 0, no band, no limit, single sweep
  std::uint64_t round_id = 0;
};

struct RoundResult {
  std::vector<PlanReply> plans;
  int iterations_used = 0;
  bool converged = false;
  Profile aggregate;
  double residual = 0.0; // last ||U^l - U^(l-1)||_inf
};

RoundResult run_round(ControllerLink& link, IsoState& state, const RoundContext& ctx,
                      const ConvergenceConfig& cfg);

/// Commits the converged aggregate as the day-ahead band.
Band commit_day_ahead(const RoundResult& round, double half_width);

} // namespace gridweave
