#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "worldwalk/server.hpp"

using namespace worldwalk;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

ServerConfig small_server(std::string generator = "passthrough", std::size_t queue_depth = 8) {
  ServerConfig c;
  c.port = 0;
  c.session.intrinsics = CameraIntrinsics::centered(64, 48, 32);
  c.session.defaults.frames = 5;
  c.session.scene = SceneDescription{};
  c.generator = std::move(generator);
  c.queue_depth = queue_depth;
  return c;
}

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/session");
  }

  void send(const json& j) { send_raw(j.dump()); }
  void send_raw(const std::string& s) { ws_.write(asio::buffer(s)); }

  json recv() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Reads until a message of the given type arrives; returns everything read.
  std::vector<json> until(const std::string& type) {
    std::vector<json> got;
    do {
      got.push_back(recv());
    } while (got.back().at("type") != type);
    return got;
  }

  bool closed_by_peer() {
    beast::flat_buffer buf;
    beast::error_code ec;
    ws_.read(buf, ec);
    return ec == websocket::error::closed;
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

json msg(const char* type) { return {{"proto", kProtocol}, {"type", type}}; }

json action(const char* keys) {
  json j = msg("action");
  j["keys"] = keys;
  return j;
}

}  // namespace

TEST_CASE("healthz answers ok") {
  Server server(small_server());
  server.start();
  asio::io_context ioc;
  beast::tcp_stream stream(ioc);
  tcp::resolver resolver(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(server.port())));
  beast::http::request<beast::http::empty_body> req{beast::http::verb::get, "/healthz", 11};
  req.set(beast::http::field::host, "localhost");
  beast::http::write(stream, req);
  beast::flat_buffer buf;
  beast::http::response<beast::http::string_body> res;
  beast::http::read(stream, buf, res);
  CHECK(res.result() == beast::http::status::ok);
  CHECK(res.body() == "ok");
  CHECK(res[beast::http::field::content_type] == "text/plain");
}

TEST_CASE("init then W streams frames, retrieval and stepped in order") {
  Server server(small_server());
  server.start();
  Client c(server.port());
  c.send(msg("init"));
  const json ready = c.recv();
  CHECK(ready.at("type") == "ready");
  CHECK(ready.at("proto") == kProtocol);
  CHECK(ready.at("f") == 5);
  CHECK(ready.at("intrinsics").at("width") == 64);
  CHECK(ready.contains("session_id"));

  c.send(action("W"));
  const auto got = c.until("stepped");
  REQUIRE(got.size() == 7);
  for (int k = 1; k <= 5; ++k) {
    CHECK(got[k - 1].at("type") == "frame");
    CHECK(got[k - 1].at("k") == k);
    CHECK(got[k - 1].at("step") == 1);
    CHECK(got[k - 1].at("pose").at("R").size() == 9);
    CHECK(!got[k - 1].at("png_b64").get<std::string>().empty());
  }
  CHECK(got[5].at("type") == "retrieval");
  CHECK(got[5].at("entries").size() <= 3);
  CHECK(got[6].at("step") == 1);
  CHECK(got[6].at("occupancy") == 2);
  CHECK(std::abs(got[6].at("pose").at("t")[2].get<double>() + 5 * 0.05) < 1e-12);
}

TEST_CASE("rapid actions are queued and processed in order") {
  Server server(small_server());
  server.start();
  Client c(server.port());
  c.send(msg("init"));
  c.recv();
  c.send(action("W"));
  c.send(action("A"));
  json second = action("D");
  second["frames"] = 9;
  c.send(second);
  int last_step = 0;
  for (int expected_frames : {5, 5, 9}) {
    const auto got = c.until("stepped");
    CHECK(static_cast<int>(got.size()) == expected_frames + 2);
    int k = 0;
    for (const json& m : got) {
      if (m.at("type") == "frame") CHECK(m.at("k") == ++k);
    }
    CHECK(got.back().at("step") == last_step + 1);
    last_step = got.back().at("step");
  }
}

TEST_CASE("malformed messages get an error and the connection stays usable") {
  Server server(small_server());
  server.start();
  Client c(server.port());
  c.send_raw("{not json");
  json e = c.recv();
  CHECK(e.at("type") == "error");
  CHECK(e.at("code") == "bad_message");
  c.send(action("W"));
  CHECK(c.recv().at("code") == "not_initialized");
  c.send(msg("init"));
  CHECK(c.recv().at("type") == "ready");
  c.send(action("Q"));
  CHECK(c.recv().at("code") == "bad_message");
  json bad_frames = action("W");
  bad_frames["frames"] = 4;
  c.send(bad_frames);
  CHECK(c.recv().at("code") == "bad_message");
  c.send(msg("teleport"));
  CHECK(c.recv().at("code") == "bad_message");
  c.send(action("W"));
  CHECK(c.until("stepped").back().at("step") == 1);
}

TEST_CASE("protocol mismatch closes the connection") {
  Server server(small_server());
  server.start();
  Client c(server.port());
  c.send({{"proto", "worldwalk/0"}, {"type", "init"}});
  const json e = c.recv();
  CHECK(e.at("code") == "proto_mismatch");
  CHECK(c.closed_by_peer());
}

TEST_CASE("queue overflow drops actions with an error") {
  const std::string slow = std::string("external:") + WORLDWALK_ECHO_GENERATOR + " slow 300";
  Server server(small_server(slow, 2));
  server.start();
  Client c(server.port());
  c.send(msg("init"));
  c.recv();
  for (int i = 0; i < 5; ++i) c.send(action("W"));
  int queue_full = 0, stepped = 0;
  while (stepped + queue_full < 5) {
    const json m = c.recv();
    if (m.at("type") == "error") {
      CHECK(m.at("code") == "queue_full");
      ++queue_full;
    } else if (m.at("type") == "stepped") {
      CHECK(m.at("step") == ++stepped);
    }
  }
  CHECK(queue_full >= 1);
  CHECK(stepped + queue_full == 5);
}

TEST_CASE("connections are isolated") {
  Server server(small_server());
  server.start();
  Client a(server.port()), b(server.port());
  a.send(msg("init"));
  b.send(msg("init"));
  const json ra = a.recv(), rb = b.recv();
  CHECK(ra.at("session_id") != rb.at("session_id"));
  const char* script_a[] = {"W", "W", "A"};
  const char* script_b[] = {"S", "D", "D"};
  CameraPose pa, pb;
  for (int i = 0; i < 3; ++i) {
    a.send(action(script_a[i]));
    b.send(action(script_b[i]));
    Action x, y;
    x.keys = KeySet::parse(script_a[i]);
    y.keys = KeySet::parse(script_b[i]);
    x.params.frames = y.params.frames = 5;
    pa = action_to_trajectory(x, pa).final();
    pb = action_to_trajectory(y, pb).final();
    // Read b before a so the two sessions' steps overlap.
    const json sb = b.until("stepped").back();
    const json sa = a.until("stepped").back();
    CHECK(sa.at("step") == i + 1);
    CHECK(sb.at("step") == i + 1);
    CHECK(std::abs(sa.at("pose").at("t")[2].get<double>() - pa.translation.z) < 1e-12);
    CHECK(std::abs(sb.at("pose").at("t")[2].get<double>() - pb.translation.z) < 1e-12);
    CHECK(sa.at("occupancy") == i + 2);
    CHECK(sb.at("occupancy") == i + 2);
  }
  // Reset returns one connection to the start without touching the other.
  a.send(msg("reset"));
  CHECK(a.recv().at("type") == "ready");
  a.send(action("W"));
  CHECK(a.until("stepped").back().at("step") == 1);
  b.send(action("W"));
  CHECK(b.until("stepped").back().at("step") == 4);
}
