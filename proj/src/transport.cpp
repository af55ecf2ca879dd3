#include "gridweave/transport.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <list>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "socket.hpp"

namespace gridweave::transport {

using json = nlohmann::ordered_json;

namespace {

constexpr std::pair<ErrorCode, const char*> kCodes[] = {
    {ErrorCode::Parse, "parse"},
    {ErrorCode::UnknownType, "unknown_type"},
    {ErrorCode::Shape, "shape"},
    {ErrorCode::Duplicate, "duplicate"},
    {ErrorCode::Pipelining, "pipelining"},
    {ErrorCode::UnknownController, "unknown_controller"},
    {ErrorCode::OutOfTurn, "out_of_turn"},
    {ErrorCode::Timeout, "timeout"},
    {ErrorCode::ControllerFailure, "controller_failure"},
};

struct DecodeFailure {
  ErrorCode code;
  std::string detail;
};

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DecodeFailure{ErrorCode::Parse, std::string("missing field '") + key + "'"};
  return *it;
}

double get_number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be a number"};
  return v.get<double>();
}

std::optional<double> get_optional_number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_null()) return std::nullopt;
  return get_number(j, key);
}

std::uint64_t get_uint(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_unsigned())
    throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be a non-negative integer"};
  return v.get<std::uint64_t>();
}

int get_int(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be an integer"};
  return v.get<int>();
}

bool get_bool(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be a boolean"};
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be a string"};
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& v, const char* key) {
  if (!v.is_array()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' must be an array"};
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw DecodeFailure{ErrorCode::Parse, std::string("field '") + key + "' holds a non-number"};
    out.push_back(e.get<double>());
  }
  return out;
}

Profile get_profile(const json& j, const char* key, std::size_t n) {
  auto values = get_numbers(field(j, key), key);
  if (values.size() != n)
    throw DecodeFailure{ErrorCode::Shape, std::string("field '") + key + "' has " + std::to_string(values.size()) +
                                              " values, expected " + std::to_string(n)};
  return Profile(std::move(values));
}

json profile_json(const Profile& p) { return json(p.raw()); }

struct Encoder {
  json operator()(const GetSigma& m) const {
    json j;
    j["type"] = "get_sigma";
    j["controller_id"] = m.controller_id;
    j["round"] = m.round;
    j["iteration"] = m.iteration;
    return j;
  }
  json operator()(const SigmaReply& m) const {
    json j;
    j["type"] = "sigma_reply";
    j["round"] = m.round;
    j["iteration"] = m.iteration;
    j["step"] = m.step;
    j["temperature"] = m.x0.temperature;
    j["battery_soc"] = m.x0.battery_soc;
    j["tank_soc"] = m.x0.tank_soc;
    j["profile"] = profile_json(m.profile);
    j["band"] = m.band ? profile_json(*m.band) : json(nullptr);
    j["half_width"] = m.half_width;
    j["band_steps"] = m.band_steps;
    j["global_limit"] = m.global_limit ? json(*m.global_limit) : json(nullptr);
    return j;
  }
  json operator()(const SubmitPlan& m) const {
    json j;
    j["type"] = "submit_plan";
    j["controller_id"] = m.controller_id;
    j["round"] = m.round;
    j["iteration"] = m.iteration;
    j["profile"] = profile_json(m.profile);
    auto a = m.setpoints.to_array();
    j["setpoints"] = std::vector<double>(a.begin(), a.end());
    return j;
  }
  json operator()(const Ack&) const { return json{{"type", "ack"}}; }
  json operator()(const RoundStatus& m) const {
    json j;
    j["type"] = "round_status";
    j["converged"] = m.converged;
    j["iteration"] = m.iteration;
    j["finished"] = m.finished;
    return j;
  }
  json operator()(const ProtocolError& m) const {
    json j;
    j["type"] = "error";
    j["code"] = to_string(m.code);
    j["detail"] = m.detail;
    return j;
  }
};

Message decode_object(const json& j, std::size_t n) {
  const std::string type = get_string(j, "type");
  if (type == "get_sigma") {
    return GetSigma{get_string(j, "controller_id"), get_uint(j, "round"), get_int(j, "iteration")};
  }
  if (type == "sigma_reply") {
    SigmaReply m;
    m.round = get_uint(j, "round");
    m.iteration = get_int(j, "iteration");
    m.step = get_uint(j, "step");
    m.x0.temperature = get_number(j, "temperature");
    m.x0.battery_soc = get_number(j, "battery_soc");
    m.x0.tank_soc = get_number(j, "tank_soc");
    m.profile = get_profile(j, "profile", n);
    if (!field(j, "band").is_null()) m.band = get_profile(j, "band", n);
    m.half_width = get_number(j, "half_width");
    m.band_steps = get_uint(j, "band_steps");
    m.global_limit = get_optional_number(j, "global_limit");
    return m;
  }
  if (type == "submit_plan") {
    SubmitPlan m;
    m.controller_id = get_string(j, "controller_id");
    m.round = get_uint(j, "round");
    m.iteration = get_int(j, "iteration");
    m.profile = get_profile(j, "profile", n);
    auto sp = get_numbers(field(j, "setpoints"), "setpoints");
    if (sp.size() != Setpoints::kCount)
      throw DecodeFailure{ErrorCode::Shape, "field 'setpoints' has " + std::to_string(sp.size()) + " values, expected " +
                                                std::to_string(Setpoints::kCount)};
    std::array<double, Setpoints::kCount> a{};
    std::copy(sp.begin(), sp.end(), a.begin());
    m.setpoints = Setpoints::from_array(a);
    return m;
  }
  if (type == "ack") return Ack{};
  if (type == "round_status") {
    return RoundStatus{get_bool(j, "converged"), get_int(j, "iteration"), get_bool(j, "finished")};
  }
  if (type == "error") {
    auto code = error_code_from_string(get_string(j, "code"));
    if (!code) throw DecodeFailure{ErrorCode::Parse, "unknown error code"};
    return ProtocolError{*code, get_string(j, "detail")};
  }
  throw DecodeFailure{ErrorCode::UnknownType, "unknown message type '" + type + "'"};
}

} // namespace

const char* to_string(ErrorCode code) {
  for (const auto& [c, s] : kCodes)
    if (c == code) return s;
  return "parse";
}

std::optional<ErrorCode> error_code_from_string(std::string_view s) {
  for (const auto& [c, name] : kCodes)
    if (s == name) return c;
  return std::nullopt;
}

std::string encode(const Message& msg) { return std::visit(Encoder{}, msg).dump() + "\n"; }

Message decode(std::string_view line, std::size_t n_steps) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) return ProtocolError{ErrorCode::Parse, "malformed JSON line"};
  if (!j.is_object()) return ProtocolError{ErrorCode::Parse, "message must be a JSON object"};
  try {
    return decode_object(j, n_steps);
  } catch (const DecodeFailure& f) {
    return ProtocolError{f.code, f.detail};
  } catch (const json::exception& e) {
    return ProtocolError{ErrorCode::Parse, e.what()};
  } catch (const ValidationError& e) {
    return ProtocolError{ErrorCode::Parse, e.what()};
  }
}

std::string resolve_endpoint(const std::string& endpoint) {
  if (!endpoint.empty()) return endpoint;
  if (const char* env = std::getenv("GRIDWEAVE_ISO_ADDR"); env && *env) return env;
  return "127.0.0.1:7878";
}

// ---------------------------------------------------------------------------
// ISO server
// ---------------------------------------------------------------------------

struct IsoServer::Impl {
  std::vector<std::string> ids;
  std::size_t n_steps;
  std::chrono::milliseconds timeout;
  int listen_fd = -1;
  std::uint16_t port = 0;

  std::mutex mu;
  std::condition_variable cv;
  bool stop = false;
  bool finished = false;
  RoundStatus final_status;

  // token holder and its outstanding request
  std::size_t token = SIZE_MAX;
  std::optional<PlanRequest> pending;
  bool handed = false;
  std::optional<PlanReply> reply;
  std::optional<std::string> failure;

  std::vector<bool> bound;   // a live connection serves this controller
  std::vector<bool> dropped; // its connection went away
  std::set<std::tuple<std::size_t, std::uint64_t, int>> submitted;
  std::set<std::tuple<std::size_t, std::uint64_t, int>> expired; // requests the ISO gave up on

  struct Conn {
    std::unique_ptr<net::LineConn> link;
    std::thread thread;
  };
  std::list<Conn> conns;
  std::thread acceptor;

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return i;
    return SIZE_MAX;
  }

  void accept_loop() {
    while (true) {
      {
        std::lock_guard lk(mu);
        if (stop) return;
      }
      int fd = net::accept_within(listen_fd, 100);
      if (fd < 0) continue;
      std::lock_guard lk(mu);
      if (stop) {
        net::close_fd(fd);
        return;
      }
      conns.push_back(Conn{std::make_unique<net::LineConn>(fd), {}});
      net::LineConn* link = conns.back().link.get();
      conns.back().thread = std::thread([this, link] { serve(*link); });
    }
  }

  void send(net::LineConn& link, const Message& m) { link.write_all(encode(m)); }

  void serve(net::LineConn& link) {
    std::size_t me = SIZE_MAX;
    auto stopped = [this] {
      std::lock_guard lk(mu);
      return stop;
    };
    try {
      while (auto line = link.read_line(stopped)) {
        if (link.has_pending()) {
          send(link, ProtocolError{ErrorCode::Pipelining, "one request at a time per connection"});
          break;
        }
        Message msg = decode(*line, n_steps);
        if (auto* err = std::get_if<ProtocolError>(&msg)) {
          if (err->code == ErrorCode::ControllerFailure && me != SIZE_MAX) {
            send(link, on_failure(*err, me));
          } else {
            send(link, *err);
          }
          continue;
        }
        if (auto* gs = std::get_if<GetSigma>(&msg)) {
          if (!on_get_sigma(link, *gs, me)) break;
        } else if (auto* sp = std::get_if<SubmitPlan>(&msg)) {
          send(link, on_submit(*sp, me));
        } else {
          send(link, ProtocolError{ErrorCode::UnknownType, "controllers may only send get_sigma or submit_plan"});
        }
      }
    } catch (const std::exception&) {
      // connection broke; fall through to the drop handling
    }
    link.shutdown();
    std::lock_guard lk(mu);
    if (me != SIZE_MAX) {
      bound[me] = false;
      if (!finished) dropped[me] = true;
      cv.notify_all();
    }
  }

  // Returns false when the connection should be closed.
  bool on_get_sigma(net::LineConn& link, const GetSigma& gs, std::size_t& me) {
    std::unique_lock lk(mu);
    std::size_t idx = index_of(gs.controller_id);
    if (idx == SIZE_MAX) {
      lk.unlock();
      send(link, ProtocolError{ErrorCode::UnknownController, "controller '" + gs.controller_id + "' is not registered"});
      return true;
    }
    if (me == SIZE_MAX) {
      if (bound[idx]) {
        lk.unlock();
        send(link, ProtocolError{ErrorCode::Duplicate, "controller '" + gs.controller_id + "' is already connected"});
        return true;
      }
      bound[idx] = true;
      dropped[idx] = false;
      me = idx;
    } else if (me != idx) {
      lk.unlock();
      send(link, ProtocolError{ErrorCode::UnknownController, "connection is bound to '" + ids[me] + "'"});
      return true;
    }
    // Block until this controller holds the token, polling for pipelined input.
    while (!stop && !finished && !(token == idx && pending && !handed)) {
      cv.wait_for(lk, std::chrono::milliseconds(100));
      if (link.has_pending()) {
        lk.unlock();
        send(link, ProtocolError{ErrorCode::Pipelining, "one request at a time per connection"});
        return false;
      }
    }
    if (stop) return false;
    if (finished) {
      RoundStatus st = final_status;
      lk.unlock();
      send(link, st);
      return true;
    }
    const PlanRequest& req = *pending;
    SigmaReply r;
    r.round = req.round;
    r.iteration = req.iteration;
    r.step = req.input.k0;
    r.x0 = req.input.x0;
    r.profile = req.input.sigma;
    if (req.input.band) {
      r.band = req.input.band->committed;
      r.half_width = req.input.band->half_width;
      r.band_steps = req.input.band_steps;
    }
    r.global_limit = req.input.global_limit;
    handed = true;
    lk.unlock();
    send(link, r);
    return true;
  }

  Message on_failure(const ProtocolError& err, std::size_t me) {
    std::lock_guard lk(mu);
    if (!(token == me && pending && handed)) return ProtocolError{ErrorCode::OutOfTurn, "no sigma outstanding"};
    failure = err.detail;
    pending.reset();
    cv.notify_all();
    return Ack{};
  }

  Message on_submit(const SubmitPlan& sp, std::size_t me) {
    std::lock_guard lk(mu);
    std::size_t idx = index_of(sp.controller_id);
    if (idx == SIZE_MAX) return ProtocolError{ErrorCode::UnknownController, "controller '" + sp.controller_id + "' is not registered"};
    if (me != idx) return ProtocolError{ErrorCode::OutOfTurn, "submit_plan before get_sigma on this connection"};
    auto key = std::make_tuple(idx, sp.round, sp.iteration);
    if (expired.count(key))
      return ProtocolError{ErrorCode::Timeout, "plan for round " + std::to_string(sp.round) + " iteration " +
                                                   std::to_string(sp.iteration) + " arrived after the deadline"};
    if (submitted.count(key))
      return ProtocolError{ErrorCode::Duplicate, "plan for round " + std::to_string(sp.round) + " iteration " +
                                                     std::to_string(sp.iteration) + " already submitted"};
    if (!(token == idx && pending && handed && pending->round == sp.round && pending->iteration == sp.iteration))
      return ProtocolError{ErrorCode::OutOfTurn, "no sigma outstanding for this round and iteration"};
    submitted.insert(key);
    reply = PlanReply{sp.profile, sp.setpoints};
    pending.reset();
    cv.notify_all();
    return Ack{};
  }
};

IsoServer::IsoServer(std::vector<std::string> ids, std::size_t n_steps, const std::string& endpoint,
                     std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
  if (ids.empty()) throw ValidationError("ISO needs at least one registered controller");
  impl_->ids = std::move(ids);
  impl_->n_steps = n_steps;
  impl_->timeout = timeout;
  impl_->bound.assign(impl_->ids.size(), false);
  impl_->dropped.assign(impl_->ids.size(), false);
  impl_->listen_fd = net::listen_on(net::parse_endpoint(resolve_endpoint(endpoint)));
  impl_->port = net::local_port(impl_->listen_fd);
  impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

IsoServer::~IsoServer() {
  {
    std::unique_lock lk(impl_->mu);
    // let connected controllers collect the final status and hang up
    if (impl_->finished) {
      impl_->cv.wait_for(lk, std::chrono::seconds(2), [&] {
        return std::none_of(impl_->bound.begin(), impl_->bound.end(), [](bool b) { return b; });
      });
    }
    impl_->stop = true;
    impl_->cv.notify_all();
  }
  impl_->acceptor.join();
  for (auto& c : impl_->conns) c.link->shutdown();
  for (auto& c : impl_->conns) c.thread.join();
  net::close_fd(impl_->listen_fd);
}

std::uint16_t IsoServer::port() const { return impl_->port; }
std::size_t IsoServer::size() const { return impl_->ids.size(); }
const std::string& IsoServer::id(std::size_t index) const { return impl_->ids.at(index); }

PlanReply IsoServer::request(std::size_t index, const PlanRequest& request) {
  auto& s = *impl_;
  std::unique_lock lk(s.mu);
  if (index >= s.ids.size()) throw ValidationError("controller index out of range");
  if (s.dropped[index]) throw RuntimeFailure("controller " + s.ids[index] + " disconnected");
  s.token = index;
  s.pending = request;
  s.handed = false;
  s.reply.reset();
  s.failure.reset();
  s.cv.notify_all();
  const auto deadline = std::chrono::steady_clock::now() + s.timeout;
  bool ok = s.cv.wait_until(lk, deadline, [&] { return s.reply || s.failure || s.dropped[index] || s.stop; });
  if (!ok) s.expired.insert({index, request.round, request.iteration});
  s.token = SIZE_MAX;
  s.pending.reset();
  if (s.reply) {
    PlanReply r = std::move(*s.reply);
    s.reply.reset();
    return r;
  }
  if (s.failure) {
    std::string detail = std::move(*s.failure);
    s.failure.reset();
    throw RuntimeFailure(detail);
  }
  if (!ok) {
    throw RuntimeFailure("controller " + s.ids[index] + " timed out after " +
                         std::to_string(s.timeout.count()) + " ms");
  }
  throw RuntimeFailure("controller " + s.ids[index] + " disconnected");
}

void IsoServer::finish(bool converged, int iteration) {
  std::lock_guard lk(impl_->mu);
  impl_->finished = true;
  impl_->final_status = RoundStatus{converged, iteration, true};
  impl_->cv.notify_all();
}

// ---------------------------------------------------------------------------
// Controller client
// ---------------------------------------------------------------------------

namespace {

Message exchange(net::LineConn& link, const Message& m, std::size_t n_steps) {
  link.write_all(encode(m));
  auto line = link.read_line();
  if (!line) throw RuntimeFailure("ISO closed the connection");
  return decode(*line, n_steps);
}

} // namespace

std::size_t run_controller(const ControllerModel& model, const std::string& endpoint, const ClientOptions& options) {
  const auto ep = net::parse_endpoint(resolve_endpoint(endpoint));
  const auto deadline = std::chrono::steady_clock::now() + options.connect_timeout;
  int fd = -1;
  while ((fd = net::connect_to(ep)) < 0) {
    if (std::chrono::steady_clock::now() >= deadline)
      throw RuntimeFailure("cannot connect to ISO at " + ep.host + ":" + std::to_string(ep.port));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  net::LineConn link(fd);
  MpcController controller(model);
  const std::size_t n = model.horizon_steps;
  std::size_t solves = 0;
  std::uint64_t last_round = 0;
  int last_iteration = 0;

  for (;;) {
    Message reply = exchange(link, GetSigma{model.id, last_round, last_iteration}, n);
    if (auto* st = std::get_if<RoundStatus>(&reply)) {
      if (st->finished) return solves;
      continue;
    }
    if (auto* err = std::get_if<ProtocolError>(&reply))
      throw RuntimeFailure(std::string("ISO rejected get_sigma (") + to_string(err->code) + "): " + err->detail);
    auto* sr = std::get_if<SigmaReply>(&reply);
    if (!sr) throw RuntimeFailure("unexpected reply to get_sigma");

    MpcInput in;
    in.k0 = sr->step;
    in.x0 = sr->x0;
    in.sigma = sr->profile;
    if (sr->band) {
      in.band = Band{*sr->band, sr->half_width};
      in.band_steps = sr->band_steps;
    }
    in.global_limit = sr->global_limit;
    MpcPlan plan;
    try {
      plan = controller.solve(in);
    } catch (const Error& e) {
      exchange(link, ProtocolError{ErrorCode::ControllerFailure, e.what()}, n);
      throw;
    }
    ++solves;
    last_round = sr->round;
    last_iteration = sr->iteration;
    Message ack = exchange(link, SubmitPlan{model.id, sr->round, sr->iteration, plan.net_load, plan.schedule.front()}, n);
    if (auto* err = std::get_if<ProtocolError>(&ack))
      throw RuntimeFailure(std::string("ISO rejected submit_plan (") + to_string(err->code) + "): " + err->detail);
  }
}

} // namespace gridweave::transport
