#include "worldwalk/server.hpp"

#include <atomic>
#include <condition_variable>
#include <csignal>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>
#include <variant>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "worldwalk/error.hpp"
#include "worldwalk/png_io.hpp"
#include "worldwalk/wire.hpp"

namespace worldwalk {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

void ServerConfig::apply_environment() {
  if (const char* bind = std::getenv("WORLDWALK_BIND"); bind != nullptr && *bind != '\0') {
    const std::string s(bind);
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("WORLDWALK_BIND must be host:port");
    host = s.substr(0, colon);
    const int p = std::stoi(s.substr(colon + 1));
    if (p < 0 || p > 65535) throw InvalidArgument("WORLDWALK_BIND port out of range");
    port = static_cast<std::uint16_t>(p);
  }
  if (const char* scene = std::getenv("WORLDWALK_SCENE"); scene != nullptr && *scene != '\0') {
    session.scene = load_scene(scene);
    session.feedback.reset();
  }
}

namespace {

json message(const char* type) { return {{"proto", kProtocol}, {"type", type}}; }

std::string error_message(const std::string& code, const std::string& text) {
  json j = message("error");
  j["code"] = code;
  j["message"] = text;
  return j.dump();
}

struct InitJob {
  json request;
};
struct ActionJob {
  Action action;
};
struct ResetJob {};
using Job = std::variant<InitJob, ActionJob, ResetJob>;

struct Shared {
  ServerConfig config;
  asio::thread_pool compute;
  std::atomic<std::uint64_t> next_session_id{1};

  explicit Shared(ServerConfig c)
      : config(std::move(c)),
        compute(config.compute_threads ? config.compute_threads
                                       : std::max(1u, std::thread::hardware_concurrency())) {}
};

// Result of a job computed off the connection strand.
struct JobOutcome {
  std::vector<std::string> messages;
  std::optional<SessionState> state;  // set when the job replaced the state
  std::optional<json> init_request;   // remembered for reset
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : ws_(std::move(socket)), shared_(std::move(shared)) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    if (!closing_) do_read();
  }

  void handle(const std::string& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      send(error_message("bad_message", std::string("invalid JSON: ") + e.what()));
      return;
    }
    if (!j.is_object()) {
      send(error_message("bad_message", "message must be a JSON object"));
      return;
    }
    if (!j.contains("proto") || !j["proto"].is_string() || j["proto"].get<std::string>() != kProtocol) {
      send(error_message("proto_mismatch", std::string("server speaks ") + kProtocol));
      closing_ = true;
      maybe_close();
      return;
    }
    const std::string type = j.value("type", "");
    Job job;
    try {
      if (type == "init") {
        job = InitJob{j};
      } else if (type == "reset") {
        job = ResetJob{};
      } else if (type == "action") {
        job = ActionJob{parse_action(j)};
      } else {
        send(error_message("bad_message", "unknown message type '" + type + "'"));
        return;
      }
    } catch (const std::exception& e) {
      send(error_message("bad_message", e.what()));
      return;
    }
    if (queue_.size() >= shared_->config.queue_depth) {
      send(error_message("queue_full", "action queue is full; message dropped"));
      return;
    }
    queue_.push_back(std::move(job));
    maybe_start();
  }

  Action parse_action(const json& j) const {
    if (!j.contains("keys") || !j["keys"].is_string()) throw InvalidArgument("action needs string 'keys'");
    Action a;
    a.keys = KeySet::parse(j["keys"].get<std::string>());
    a.params = defaults_;
    if (j.contains("eta")) a.params.eta = j.at("eta").get<double>();
    if (j.contains("theta_deg")) a.params.theta_deg = j.at("theta_deg").get<double>();
    if (j.contains("frames")) a.params.frames = j.at("frames").get<int>();
    a.params.validate();
    return a;
  }

  void maybe_start() {
    // One job at a time, and only after the previous job's messages are flushed.
    if (busy_ || closing_ || queue_.empty() || writing_ || !outbox_.empty()) return;
    Job job = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;

    std::optional<SessionState> state = state_;
    std::optional<json> init_request = init_request_;
    auto self = shared_from_this();
    asio::post(shared_->compute, [self, job = std::move(job), state = std::move(state),
                                  init_request = std::move(init_request)]() mutable {
      JobOutcome outcome = self->run_job(job, state, init_request);
      asio::post(self->ws_.get_executor(), [self, outcome = std::move(outcome)]() mutable {
        self->finish_job(std::move(outcome));
      });
    });
  }

  // Runs on the compute pool. Touches only its arguments and the generator,
  // which no other job uses concurrently.
  JobOutcome run_job(const Job& job, const std::optional<SessionState>& state,
                     const std::optional<json>& last_init) {
    JobOutcome out;
    if (const auto* init = std::get_if<InitJob>(&job)) {
      out = initialize(init->request);
    } else if (std::holds_alternative<ResetJob>(job)) {
      if (!last_init) {
        out.messages.push_back(error_message("not_initialized", "reset before init"));
      } else {
        out = initialize(*last_init);
      }
    } else {
      const Action& action = std::get<ActionJob>(job).action;
      if (!state) {
        out.messages.push_back(error_message("not_initialized", "send init before actions"));
        return out;
      }
      try {
        StepResult r = step(*state, action, *generator_);
        const int n = r.state.step;
        for (std::size_t k = 0; k < r.frames.size(); ++k) {
          json m = message("frame");
          m["step"] = n;
          m["k"] = k + 1;
          m["pose"] = wire::pose_json(r.trajectory.poses[k + 1]);
          m["png_b64"] = wire::png_b64(r.frames[k]);
          out.messages.push_back(m.dump());
        }
        json retrieval = message("retrieval");
        retrieval["step"] = n;
        retrieval["entries"] = json::array();
        for (const RetrievedEntry& e : r.retrieval.selected) {
          retrieval["entries"].push_back({{"index", e.index}, {"score", e.score}});
        }
        out.messages.push_back(retrieval.dump());
        json stepped = message("stepped");
        stepped["step"] = n;
        stepped["occupancy"] = r.state.cache.occupancy();
        stepped["evictions"] = r.evicted;
        stepped["pose"] = wire::pose_json(r.state.pose);
        out.messages.push_back(stepped.dump());
        out.state = std::move(r.state);
      } catch (const std::exception& e) {
        out.messages.push_back(error_message("step_failed", e.what()));
      }
    }
    return out;
  }

  JobOutcome initialize(const json& request) {
    JobOutcome out;
    try {
      SessionConfig config = shared_->config.session;
      std::optional<Frame> image;
      std::optional<DepthMap> depth;
      if (request.contains("scene")) {
        config.scene = request.at("scene").get<SceneDescription>();
        config.feedback.reset();
      }
      if (request.contains("image_png_b64")) {
        image = wire::frame_from_png_b64(request.at("image_png_b64").get<std::string>());
        if (!request.contains("depth_pfm_b64")) throw InvalidArgument("image init needs depth_pfm_b64");
        depth = parse_pfm(wire::base64_decode(request.at("depth_pfm_b64").get<std::string>()));
        if (!request.contains("scene")) {
          config.scene.reset();
          if (config.feedback == DepthFeedback::kAnalytic) config.feedback.reset();
        }
      }
      if (request.contains("overrides")) {
        const json& o = request.at("overrides");
        config.defaults.eta = o.value("eta", config.defaults.eta);
        config.defaults.theta_deg = o.value("theta_deg", config.defaults.theta_deg);
        config.defaults.frames = o.value("frames", config.defaults.frames);
      }
      SessionState state = init_session(config, std::move(image), std::move(depth));
      generator_ = make_generator(shared_->config.generator);
      defaults_next_ = config.defaults;

      json ready = message("ready");
      ready["session_id"] = shared_->next_session_id++;
      ready["intrinsics"] = wire::intrinsics_json(config.intrinsics);
      ready["f"] = config.defaults.frames;
      ready["eta"] = config.defaults.eta;
      ready["theta_deg"] = config.defaults.theta_deg;
      ready["pose"] = wire::pose_json(state.pose);
      out.messages.push_back(ready.dump());
      out.state = std::move(state);
      out.init_request = request;
    } catch (const std::exception& e) {
      out.messages.push_back(error_message("init_failed", e.what()));
    }
    return out;
  }

  void finish_job(JobOutcome outcome) {
    if (outcome.state) state_ = std::move(outcome.state);
    if (outcome.init_request) {
      init_request_ = std::move(outcome.init_request);
      defaults_ = defaults_next_;
    }
    for (std::string& m : outcome.messages) send(std::move(m));
    busy_ = false;
    maybe_start();
  }

  void send(std::string text) {
    if (closed_) return;
    outbox_.push_back(std::move(text));
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      closed_ = true;
      outbox_.clear();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) {
      do_write();
      return;
    }
    if (closing_) {
      maybe_close();
      return;
    }
    maybe_start();
  }

  void maybe_close() {
    if (writing_ || !outbox_.empty() || closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::policy_error,
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Shared> shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::deque<Job> queue_;
  bool writing_ = false;
  bool busy_ = false;
  bool closing_ = false;
  bool closed_ = false;
  std::optional<SessionState> state_;
  std::optional<json> init_request_;
  std::unique_ptr<Generator> generator_;
  ActionParams defaults_;
  ActionParams defaults_next_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target == "/session") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), shared_)->start(std::move(req_));
        return;
      }
      respond(http::status::not_found, "text/plain", "unknown endpoint\n");
      return;
    }
    if (req_.method() == http::verb::get && target == "/healthz") {
      respond(http::status::ok, "text/plain", "ok");
      return;
    }
    if (req_.method() == http::verb::get && shared_->config.static_dir) {
      if (auto body = static_file(target)) {
        respond(http::status::ok, content_type(target), std::move(*body));
        return;
      }
    }
    respond(http::status::not_found, "text/plain", "not found\n");
  }

  std::optional<std::string> static_file(std::string target) const {
    if (target == "/") target = "/index.html";
    if (target.find("..") != std::string::npos) return std::nullopt;
    std::ifstream in(*shared_->config.static_dir / target.substr(1), std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  static const char* content_type(const std::string& target) {
    auto ends = [&](const char* ext) {
      const std::string e(ext);
      return target.size() >= e.size() && target.compare(target.size() - e.size(), e.size(), e) == 0;
    };
    if (ends(".js")) return "text/javascript";
    if (ends(".css")) return "text/css";
    return "text/html";
  }

  void respond(http::status status, const char* type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, type);
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<Shared> shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  std::shared_ptr<Shared> shared;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;

  void do_accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<HttpSession>(std::move(socket), shared)->start();
      do_accept();
    });
  }
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>()) {
  config.session.validate();
  impl_->shared = std::make_shared<Shared>(std::move(config));
}

Server::~Server() {
  stop();
  for (std::thread& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->shared->compute.join();
}

void Server::start() {
  const ServerConfig& cfg = impl_->shared->config;
  beast::error_code ec;
  const auto address = asio::ip::make_address(cfg.host, ec);
  if (ec) throw IoError("invalid bind address '" + cfg.host + "'");
  const tcp::endpoint endpoint(address, cfg.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw IoError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port) + ": " + ec.message());
  std::signal(SIGPIPE, SIG_IGN);
  impl_->do_accept();
  const unsigned n = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
  for (unsigned i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->ioc.stop();
  impl_->stopped_cv.notify_all();
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

}  // namespace worldwalk
