#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridweave/coordinator.hpp"
#include "gridweave/core.hpp"
#include "gridweave/mpc.hpp"

namespace gridweave::transport {

enum class ErrorCode {
  Parse,
  UnknownType,
  Shape,
  Duplicate,
  Pipelining,
  UnknownController,
  OutOfTurn,
  Timeout,
  ControllerFailure,
};

const char* to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view s);

struct GetSigma {
  std::string controller_id;
  std::uint64_t round = 0; // last round/iteration this controller submitted
  int iteration = 0;
  bool operator==(const GetSigma&) const = default;
};

struct SigmaReply {
  std::uint64_t round = 0;
  int iteration = 0;
  std::size_t step = 0;
  ControllerState x0;
  Profile profile; // sigma
  std::optional<Profile> band;
  double half_width = 0.0;
  std::size_t band_steps = 0;
  std::optional<double> global_limit;
  bool operator==(const SigmaReply&) const = default;
};

struct SubmitPlan {
  std::string controller_id;
  std::uint64_t round = 0;
  int iteration = 0;
  Profile profile;
  Setpoints setpoints;
  bool operator==(const SubmitPlan&) const = default;
};

struct Ack {
  bool operator==(const Ack&) const = default;
};

struct RoundStatus {
  bool converged = false;
  int iteration = 0;
  bool finished = false;
  bool operator==(const RoundStatus&) const = default;
};

struct ProtocolError {
  ErrorCode code = ErrorCode::Parse;
  std::string detail;
  bool operator==(const ProtocolError&) const = default;
};

using Message = std::variant<GetSigma, SigmaReply, SubmitPlan, Ack, RoundStatus, ProtocolError>;

/// One JSON object per line, "type" first, newline-terminated.
std::string encode(const Message& msg);

/// Decodes one line (trailing newline optional). Failures come back as a
/// ProtocolError message. Profiles must have `n_steps` values.
Message decode(std::string_view line, std::size_t n_steps = 24);

/// "host:port"; an empty string reads GRIDWEAVE_ISO_ADDR, then falls back
/// to 127.0.0.1:7878.
std::string resolve_endpoint(const std::string& endpoint);

/// ISO side of the TCP transport. Controllers connect as clients, ask for
/// their sigma with GetSigma (which blocks until they hold the token) and
/// answer with SubmitPlan. run_round drives it through ControllerLink.
class IsoServer final : public ControllerLink {
public:
  IsoServer(std::vector<std::string> ids, std::size_t n_steps, const std::string& endpoint,
            std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~IsoServer() override;
  IsoServer(const IsoServer&) = delete;
  IsoServer& operator=(const IsoServer&) = delete;

  std::uint16_t port() const;
  std::size_t size() const override;
  const std::string& id(std::size_t index) const override;
  PlanReply request(std::size_t index, const PlanRequest& request) override;

  /// Tells waiting controllers that no more rounds follow.
  void finish(bool converged, int iteration);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ClientOptions {
  std::chrono::milliseconds connect_timeout = std::chrono::seconds(10);
};

/// Controller side: connects to the ISO and serves MPC solves until the
/// ISO reports that the run is finished. Returns the number of solves.
std::size_t run_controller(const ControllerModel& model, const std::string& endpoint,
                           const ClientOptions& options = {});

} // namespace gridweave::transport
