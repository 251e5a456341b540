#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "sarw/error.hpp"
#include "sarw/protocol.hpp"
#include "sarw/sim.hpp"

namespace sarw {

// Authoritative simulation served over WebSocket. Everything (accepting,
// session reads and writes, the tick timer) runs on one io_context thread,
// so sessions and the tick loop only meet through the command queue and the
// per-session outgoing queues.

struct Endpoint {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;

  /// "host:port", ":port" or "port".
  static Endpoint parse(const std::string& s) {
    Endpoint e;
    const auto colon = s.rfind(':');
    std::string port = s;
    if (colon != std::string::npos) {
      if (colon > 0) e.host = s.substr(0, colon);
      port = s.substr(colon + 1);
    }
    try {
      std::size_t used = 0;
      const int p = std::stoi(port, &used);
      if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument("range");
      e.port = static_cast<unsigned short>(p);
    } catch (const std::exception&) {
      throw Error(ErrorCode::SchemaError, "bad endpoint '" + s + "'");
    }
    return e;
  }

  std::string str() const { return host + ":" + std::to_string(port); }
};

struct ServerOptions {
  Endpoint endpoint;
  double snapshot_rate = 20.0;  // per second of sim time
  double speed = 1.0;           // sim seconds per wall-clock second
  bool start_paused = false;
  std::size_t max_queue = 64;   // per-session outgoing frames before snapshots are dropped
  bool accept_commands = true;  // false when replaying a recorded log
  std::map<std::uint64_t, HumanCommand> scripted_commands;  // by tick, for replays
  std::function<void(const std::string&)> log_sink;        // receives every JSONL line
};

class SyncServer {
 public:
  SyncServer(ScenarioConfig scenario, SimConfig cfg, ServerOptions opts = {})
      : scenario_(std::move(scenario)),
        cfg_(std::move(cfg)),
        opts_(std::move(opts)),
        acceptor_(ioc_),
        timer_(ioc_),
        paused_(opts_.start_paused) {
    sim_ = std::make_unique<Simulation>(scenario_, cfg_);
    emit_log(sim_->start_entry());
  }

  SyncServer(const SyncServer&) = delete;
  SyncServer& operator=(const SyncServer&) = delete;

  ~SyncServer() { stop(); }

  /// Binds and serves on a background thread.
  void start() {
    bind();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  /// Binds and serves on the calling thread until stop() or SIGINT/SIGTERM.
  /// `on_listening` runs once the socket is bound.
  void run(const std::function<void()>& on_listening = {}) {
    bind();
    if (on_listening) on_listening();
    boost::asio::signal_set signals(ioc_, SIGINT, SIGTERM);
    signals.async_wait([this](const boost::system::error_code& ec, int) {
      if (!ec) ioc_.stop();
    });
    ioc_.run();
  }

  void stop() {
    ioc_.stop();
    if (thread_.joinable()) thread_.join();
  }

  unsigned short port() const { return bound_port_.load(); }
  std::uint64_t ticks() const { return ticks_.load(); }
  std::size_t dropped_snapshots() const { return dropped_.load(); }

 private:
  class Session;
  friend class Session;

  using tcp = boost::asio::ip::tcp;
  struct Outgoing {
    std::string text;
    bool droppable = false;
  };

  class Session : public std::enable_shared_from_this<Session> {
   public:
    Session(SyncServer& server, tcp::socket socket, std::uint64_t id)
        : server_(server), ws_(std::move(socket)), id_(id) {}

    void start() {
      ws_.set_option(boost::beast::websocket::stream_base::timeout::suggested(boost::beast::role_type::server));
      ws_.async_accept([self = shared_from_this()](boost::beast::error_code ec) {
        if (ec) return;
        self->read();
      });
    }

    std::uint64_t id() const { return id_; }
    const std::string& role() const { return role_; }
    bool greeted() const { return greeted_; }

    void send(protocol::MessageType type, nlohmann::json payload, bool droppable = false) {
      protocol::Envelope e{protocol::kVersion, type, ++out_seq_, server_.sim_->world().time, std::move(payload)};
      queue_.push_back({protocol::encode(e), droppable});
      if (queue_.size() > server_.opts_.max_queue) {
        // Drop the oldest snapshot; events and replies are never dropped.
        for (auto it = queue_.begin() + (writing_ ? 1 : 0); it != queue_.end(); ++it) {
          if (it->droppable) {
            queue_.erase(it);
            ++server_.dropped_;
            break;
          }
        }
      }
      if (!writing_) write();
    }

    void close() {
      closed_ = true;
      boost::beast::error_code ec;
      boost::beast::get_lowest_layer(ws_).socket().close(ec);
    }

   private:
    void read() {
      ws_.async_read(buffer_, [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
        if (ec) {
          self->server_.on_disconnect(*self);
          return;
        }
        std::string text = boost::beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->server_.on_message(*self, text);
        if (!self->closed_) self->read();
      });
    }

    void write() {
      if (queue_.empty() || closed_) {
        writing_ = false;
        return;
      }
      writing_ = true;
      ws_.text(true);
      ws_.async_write(boost::asio::buffer(queue_.front().text),
                      [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
                        self->queue_.pop_front();
                        if (ec) {
                          self->writing_ = false;
                          return;
                        }
                        self->write();
                      });
    }

    friend class SyncServer;

    SyncServer& server_;
    boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
    boost::beast::flat_buffer buffer_;
    std::uint64_t id_;
    std::string role_ = "observer";
    bool greeted_ = false;
    std::optional<std::uint64_t> last_in_seq_;
    std::uint64_t out_seq_ = 0;
    std::deque<Outgoing> queue_;
    bool writing_ = false;
    bool closed_ = false;
  };

  void bind() {
    boost::system::error_code ec;
    const auto addr = boost::asio::ip::make_address(opts_.endpoint.host, ec);
    if (ec) throw Error(ErrorCode::EndpointBusy, "bad address " + opts_.endpoint.host);
    const tcp::endpoint ep(addr, opts_.endpoint.port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(boost::asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(boost::asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::EndpointBusy, opts_.endpoint.str() + ": " + ec.message());
    bound_port_ = acceptor_.local_endpoint().port();
    accept();
    schedule_tick();
  }

  void accept() {
    acceptor_.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto s = std::make_shared<Session>(*this, std::move(socket), ++next_session_);
      sessions_.insert(s);
      s->start();
      accept();
    });
  }

  std::chrono::nanoseconds tick_period() const {
    const double wall = cfg_.dt / std::max(opts_.speed, 1e-6);
    return std::chrono::nanoseconds(static_cast<std::int64_t>(wall * 1e9));
  }

  void schedule_tick() {
    next_deadline_ = next_deadline_ ? *next_deadline_ + tick_period() : std::chrono::steady_clock::now() + tick_period();
    // Never try to catch up more than one tick after a stall.
    const auto now = std::chrono::steady_clock::now();
    if (*next_deadline_ < now - tick_period()) *next_deadline_ = now;
    timer_.expires_at(*next_deadline_);
    timer_.async_wait([this](const boost::system::error_code& ec) {
      if (ec) return;
      tick();
      schedule_tick();
    });
  }

  std::uint64_t snapshot_every() const {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1.0 / (opts_.snapshot_rate * cfg_.dt))));
  }

  void tick() {
    if (paused_ || sim_->finished()) return;
    for (const auto& c : commands_) sim_->push_command(c);
    commands_.clear();
    if (auto it = opts_.scripted_commands.find(sim_->world().tick + 1); it != opts_.scripted_commands.end()) {
      sim_->push_command(it->second);
    }
    const auto events = sim_->step();
    ticks_ = sim_->world().tick;
    for (const auto& e : events) {
      emit_log(e);
      if (e.kind == "snapshot-hash" || e.kind == "tick-summary") continue;
      broadcast(protocol::MessageType::Event, protocol::event_payload(e), false);
    }
    if (sim_->world().tick % snapshot_every() == 0 || sim_->finished()) broadcast_snapshot();
  }

  void broadcast(protocol::MessageType type, const nlohmann::json& payload, bool droppable) {
    for (const auto& s : sessions_) {
      if (s->greeted()) s->send(type, payload, droppable);
    }
  }

  void broadcast_snapshot() { broadcast(protocol::MessageType::Snapshot, protocol::snapshot_payload(*sim_, paused_), true); }

  void emit_log(const LogEntry& e) {
    if (opts_.log_sink) opts_.log_sink(e.line());
  }

  void reply_error(Session& s, const std::string& code, const std::string& msg) {
    s.send(protocol::MessageType::Error, protocol::error_payload(code, msg));
  }

  void on_message(Session& s, const std::string& text) {
    protocol::Envelope msg;
    try {
      msg = protocol::decode(text);
    } catch (const Error& e) {
      s.send(protocol::MessageType::Error, protocol::error_payload(e));
      return;
    }
    if (s.last_in_seq_ && msg.seq <= *s.last_in_seq_) {
      reply_error(s, "MalformedFrame", "seq must increase strictly");
      return;
    }
    s.last_in_seq_ = msg.seq;

    using protocol::MessageType;
    if (msg.type == MessageType::ClientHello) {
      if (s.greeted_) {
        reply_error(s, "MalformedFrame", "already greeted");
        return;
      }
      std::string role = msg.payload["role"].get<std::string>();
      if (role == "human_controller") {
        if (controller_ && *controller_ != s.id()) {
          reply_error(s, "ControllerTaken", "controller taken");
          role = "observer";
        } else {
          controller_ = s.id();
        }
      }
      s.role_ = role;
      s.greeted_ = true;
      s.send(MessageType::ServerWelcome, protocol::welcome_payload(*sim_, s.id(), role, opts_.snapshot_rate));
      // A late joiner starts from a complete snapshot.
      s.send(MessageType::Snapshot, protocol::snapshot_payload(*sim_, paused_), true);
      return;
    }
    if (!s.greeted_) {
      reply_error(s, "MalformedFrame", "ClientHello required first");
      return;
    }
    switch (msg.type) {
      case MessageType::HumanCommand:
        if (s.role_ != "human_controller") {
          reply_error(s, "NotController", "observers cannot send commands");
        } else if (!opts_.accept_commands) {
          reply_error(s, "NotController", "server is replaying a log");
        } else {
          commands_.push_back(human_command_from_json(msg.payload));
        }
        return;
      case MessageType::Control: {
        const auto action = msg.payload["action"].get<std::string>();
        if (action == "pause") {
          paused_ = true;
        } else if (action == "resume") {
          paused_ = false;
        } else if (action == "reset") {
          sim_ = std::make_unique<Simulation>(scenario_, cfg_);
          commands_.clear();
          emit_log(sim_->start_entry());
        } else if (action == "set_rate") {
          opts_.speed = msg.payload["rate"].get<double>();
          next_deadline_.reset();
        }
        broadcast_snapshot();
        return;
      }
      default:
        reply_error(s, "UnknownMessageType", std::string(protocol::to_string(msg.type)) + " is not accepted by the server");
        return;
    }
  }

  void on_disconnect(Session& s) {
    if (controller_ && *controller_ == s.id()) controller_.reset();
    for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
      if (it->get() == &s) {
        sessions_.erase(it);
        break;
      }
    }
  }

  ScenarioConfig scenario_;
  SimConfig cfg_;
  ServerOptions opts_;
  boost::asio::io_context ioc_;
  tcp::acceptor acceptor_;
  boost::asio::steady_timer timer_;
  std::optional<std::chrono::steady_clock::time_point> next_deadline_;
  std::unique_ptr<Simulation> sim_;
  std::set<std::shared_ptr<Session>> sessions_;
  std::optional<std::uint64_t> controller_;
  std::uint64_t next_session_ = 0;
  std::vector<HumanCommand> commands_;
  bool paused_ = false;
  std::thread thread_;
  std::atomic<unsigned short> bound_port_{0};
  std::atomic<std::uint64_t> ticks_{0};
  std::atomic<std::size_t> dropped_{0};
};

}  // namespace sarw
