// Copyright 2026 The Ascribe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <thread>

#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "ascribe/protocol/replica.hpp"
#include "ascribe/server/server.hpp"
#include "support/oracles.hpp"
#include "support/sim.hpp"

using namespace ascribe;
using namespace ascribe::protocol;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace fs = std::filesystem;
using tcp = net::ip::tcp;
using namespace std::chrono_literals;

namespace {

/// Server running on its own io thread, torn down in the destructor.
class Running {
 public:
  explicit Running(server::ServerConfig config = {}) {
    spdlog::set_level(spdlog::level::warn);
    if (config.token.empty()) config.token = "tok";
    server_ = std::make_unique<server::Server>(io_, sim::demo_assets(), std::move(config));
    server_->start();
    port_ = server_->port();
    thread_ = std::thread([this] { io_.run(); });
  }

  std::uint16_t port() const { return port_; }

  /// Runs `f` on the io thread and waits for its result.
  template <typename F>
  auto on_io(F f) {
    std::packaged_task<decltype(f())()> task(std::move(f));
    auto result = task.get_future();
    net::post(io_, [&task] { task(); });
    return result.get();
  }

  const server::Server& server() const { return *server_; }

  ~Running() {
    on_io([this] {
      server_->stop();
      return 0;
    });
    io_.stop();
    thread_.join();
    server_.reset();
  }

 private:
  net::io_context io_;
  std::unique_ptr<server::Server> server_;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

/// Newline-JSON client. Every read gives up after a few seconds.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port) : socket_(io_) { socket_.connect({net::ip::make_address("127.0.0.1"), port}); }

  void send_line(const std::string& line) { net::write(socket_, net::buffer(line + "\n")); }
  void send(OpPayload payload) { send_line(encode(ClientOp{++seq_, std::move(payload)})); }

  /// Next line, or nullopt on EOF or timeout.
  std::optional<std::string> line() {
    std::optional<std::string> out;
    net::async_read_until(socket_, net::dynamic_buffer(buf_), '\n', [&](beast::error_code ec, std::size_t n) {
      if (ec) return;
      out = buf_.substr(0, n - 1);
      buf_.erase(0, n);
    });
    io_.restart();
    io_.run_for(5s);
    if (!io_.stopped()) {
      socket_.cancel();
      io_.restart();
      io_.run();
    }
    return out;
  }

  /// Reads events (and MeshData lines) until one of kind T shows up. Every
  /// line seen is fed to the replica.
  template <typename T>
  std::optional<T> until() {
    while (auto l = line()) {
      const json j = json::parse(*l);
      if (j.at("t") == "mesh_data") {
        const std::string raw = server::detail::base64_decode(j.at("frame").get<std::string>());
        auto [id, mesh] = decode_mesh_data(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
        meshes_seen.push_back(id);
        replica.put_mesh(id, std::move(mesh));
        continue;
      }
      const ServerEvent ev = decode_event(*l);
      events.push_back(ev);
      replica.apply(ev);
      if (const auto* m = std::get_if<T>(&ev.payload)) return *m;
    }
    return std::nullopt;
  }

  void close() {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

  Replica replica;
  std::vector<ServerEvent> events;
  std::vector<MeshId> meshes_seen;

 private:
  net::io_context io_;
  tcp::socket socket_;
  std::string buf_;
  std::uint64_t seq_ = 0;
};

struct Fetched {
  unsigned status = 0;
  std::string body;
  std::string content_type;
  std::string location;
};

Fetched fetch(std::uint16_t port, const std::string& target) {
  net::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  stream.expires_after(5s);
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "localhost");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body(), std::string(res[http::field::content_type]),
          std::string(res[http::field::location])};
}

/// WebSocket client: text frames are events, binary frames are MeshData.
class WsClient {
 public:
  WsClient(std::uint16_t port, const std::string& target) : ws_(io_) {
    beast::get_lowest_layer(ws_).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws_.handshake("localhost", target);
  }

  void send(OpPayload payload) {
    ws_.text(true);
    ws_.write(net::buffer(encode(ClientOp{++seq_, std::move(payload)})));
  }

  struct Frame {
    bool binary = false;
    std::string data;
  };

  std::optional<Frame> frame() {
    beast::get_lowest_layer(ws_).expires_after(5s);
    beast::flat_buffer buf;
    beast::error_code ec;
    ws_.read(buf, ec);
    if (ec) return std::nullopt;
    return Frame{!ws_.got_text(), beast::buffers_to_string(buf.data())};
  }

  template <typename T>
  std::optional<T> until() {
    while (auto f = frame()) {
      if (f->binary) {
        auto [id, mesh] = decode_mesh_data(std::span(reinterpret_cast<const std::uint8_t*>(f->data.data()), f->data.size()));
        order.push_back("mesh:" + std::to_string(id));
        replica.put_mesh(id, std::move(mesh));
        continue;
      }
      const ServerEvent ev = decode_event(f->data);
      order.push_back(std::string(kind_of(ev.payload)));
      replica.apply(ev);
      if (const auto* m = std::get_if<T>(&ev.payload)) return *m;
    }
    return std::nullopt;
  }

  void close() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  Replica replica;
  std::vector<std::string> order;

 private:
  net::io_context io_;
  websocket::stream<beast::tcp_stream> ws_;
  std::uint64_t seq_ = 0;
};

Transform hand_at(double x) { return {{x, 1.2, -0.5}, UnitQuat{}, 1.0}; }

}  // namespace

TEST(Server, ScriptedTcpSession) {
  Running srv;
  LineClient a(srv.port());
  a.send(Hello{"alice", "tok"});
  const auto welcome = a.until<Welcome>();
  ASSERT_TRUE(welcome);
  ASSERT_TRUE(a.until<AssetCatalog>());

  a.send(ImportAsset{"cube.stl"});
  const auto added = a.until<ObjectAdded>();
  ASSERT_TRUE(added);
  ASSERT_EQ(a.meshes_seen.size(), 1u);
  EXPECT_EQ(a.meshes_seen[0], added->object.mesh_id);
  const auto mesh = a.replica.scene().mesh(added->object.mesh_id);
  ASSERT_TRUE(mesh);
  EXPECT_EQ(oracle::triangle_multiset(*mesh), oracle::triangle_multiset(oracle::unit_cube()));

  const ObjectId obj = added->object.id;
  a.send(GrabAcquire{obj, hand_at(0)});
  const auto grabbed = a.until<GrabChanged>();
  ASSERT_TRUE(grabbed);
  EXPECT_EQ(grabbed->owner, welcome->client);
  a.send(GrabMove{obj, hand_at(1)});
  const auto moved = a.until<TransformChanged>();
  ASSERT_TRUE(moved);
  EXPECT_NEAR(moved->transform.position.x - added->object.transform.position.x, 1.0, 1e-9);
  a.send(Resize{obj, 0.5, 1.0});
  ASSERT_TRUE(a.until<TransformChanged>());
  a.send(SetMaterial{obj, MaterialPreset::Glass, 0.4});
  ASSERT_TRUE(a.until<MaterialChanged>());

  // Replica built from the wire matches the server.
  EXPECT_TRUE(srv.on_io([&] { return srv.server().session().scene() == a.replica.scene(); }));

  // Revisions on the wire are gap-free.
  std::uint64_t rev = 0;
  for (const auto& ev : a.events) {
    if (!is_state_event(ev)) continue;
    EXPECT_EQ(ev.rev, rev + 1);
    rev = ev.rev;
  }

  a.close();
  for (int i = 0; i < 200 && srv.on_io([&] { return srv.server().connection_count(); }) != 0; ++i) {
    std::this_thread::sleep_for(10ms);
  }
  EXPECT_EQ(srv.on_io([&] { return srv.server().connection_count(); }), 0u);
  const bool unlocked = srv.on_io([&] {
    for (const auto& [id, o] : srv.server().session().scene().objects())
      if (o.grab_owner) return false;
    return true;
  });
  EXPECT_TRUE(unlocked);
}

TEST(Server, BadTokenHelloIsRefusedAndClosed) {
  Running srv;
  LineClient c(srv.port());
  c.send(Hello{"mallory", "wrong"});
  const auto rej = c.until<OpRejected>();
  ASSERT_TRUE(rej);
  EXPECT_EQ(rej->seq, 1u);
  EXPECT_FALSE(c.line());
}

TEST(Server, UndecodableLinesAreRejectedNotFatal) {
  Running srv;
  LineClient c(srv.port());
  c.send(Hello{"a", "tok"});
  ASSERT_TRUE(c.until<AssetCatalog>());
  c.send_line(R"({"t":"warp","seq":7})");
  const auto rej = c.until<OpRejected>();
  ASSERT_TRUE(rej);
  EXPECT_EQ(rej->seq, 7u);
  EXPECT_EQ(rej->reason, RejectReason::BadPayload);
  c.send(ListAssets{});
  EXPECT_TRUE(c.until<AssetCatalog>());
}

TEST(Server, WebSocketGetsMeshDataBeforeObjects) {
  Running srv;
  LineClient a(srv.port());
  a.send(Hello{"a", "tok"});
  ASSERT_TRUE(a.until<AssetCatalog>());
  a.send(ImportAsset{"cube.stl"});
  const auto cube = a.until<ObjectAdded>();
  ASSERT_TRUE(cube);

  // Late joiner: the snapshot's mesh arrives first.
  WsClient b(srv.port(), "/ws?token=tok");
  b.send(Hello{"b", ""});
  ASSERT_TRUE(b.until<SceneSnapshot>());
  ASSERT_GE(b.order.size(), 3u);
  EXPECT_EQ(b.order[0], "welcome");
  EXPECT_EQ(b.order[1], "mesh:" + std::to_string(cube->object.mesh_id));
  EXPECT_EQ(b.order[2], "scene_snapshot");
  ASSERT_TRUE(b.until<AssetCatalog>());

  b.order.clear();
  a.send(ImportAsset{"pair.obj"});
  const auto body = b.until<ObjectAdded>();
  ASSERT_TRUE(body);
  const auto frame_at = std::find(b.order.begin(), b.order.end(), "mesh:" + std::to_string(body->object.mesh_id));
  EXPECT_LT(frame_at - b.order.begin(), std::find(b.order.begin(), b.order.end(), "object_added") - b.order.begin());
  const auto tip = b.until<ObjectAdded>();
  ASSERT_TRUE(tip);
  EXPECT_EQ(tip->object.mesh_id, body->object.mesh_id);
  EXPECT_EQ(std::count(b.order.begin(), b.order.end(), "mesh:" + std::to_string(body->object.mesh_id)), 1);

  // A holds a grab, then drops: B sees the release.
  ASSERT_TRUE(a.until<ObjectAdded>());
  ASSERT_TRUE(a.until<ObjectAdded>());
  a.send(GrabAcquire{cube->object.id, hand_at(0)});
  ASSERT_TRUE(a.until<GrabChanged>());
  ASSERT_TRUE(b.until<GrabChanged>());
  a.close();
  const auto released = b.until<GrabChanged>();
  ASSERT_TRUE(released);
  EXPECT_FALSE(released->owner);
  EXPECT_TRUE(srv.on_io([&] { return srv.server().session().scene() == b.replica.scene(); }));
  b.close();
}

TEST(Server, WebSocketRejectsBadTokenAndPath) {
  Running srv;
  EXPECT_THROW(WsClient(srv.port(), "/ws?token=nope"), beast::system_error);
  EXPECT_THROW(WsClient(srv.port(), "/ws"), beast::system_error);
  EXPECT_THROW(WsClient(srv.port(), "/socket?token=tok"), beast::system_error);
}

TEST(Server, ViewerStaticFiles) {
  const auto dir = oracle::temp_dir("viewer");
  std::ofstream(dir / "index.html") << "<html>hi</html>";
  std::ofstream(dir / "app.js") << "let x = 1;";
  fs::create_directories(dir / "lib");
  std::ofstream(dir / "lib" / "index.html") << "lib";
  std::ofstream(dir.parent_path() / "outside.txt") << "secret";

  server::ServerConfig cfg;
  cfg.viewer_dir = dir;
  Running srv(cfg);
  const auto root = fetch(srv.port(), "/");
  EXPECT_EQ(root.status, 302u);
  EXPECT_EQ(root.location, "/viewer/");
  EXPECT_EQ(fetch(srv.port(), "/viewer").status, 302u);

  const auto index = fetch(srv.port(), "/viewer/");
  EXPECT_EQ(index.status, 200u);
  EXPECT_EQ(index.body, "<html>hi</html>");
  EXPECT_EQ(index.content_type, "text/html; charset=utf-8");
  const auto js = fetch(srv.port(), "/viewer/app.js");
  EXPECT_EQ(js.body, "let x = 1;");
  EXPECT_EQ(js.content_type, "text/javascript; charset=utf-8");
  EXPECT_EQ(fetch(srv.port(), "/viewer/lib/").body, "lib");
  EXPECT_EQ(fetch(srv.port(), "/viewer/missing.css").status, 404u);
  EXPECT_EQ(fetch(srv.port(), "/viewer/../outside.txt").status, 404u);
  EXPECT_EQ(fetch(srv.port(), "/viewer/%2e%2e/outside.txt").status, 404u);
  EXPECT_EQ(fetch(srv.port(), "/elsewhere").status, 404u);
  fs::remove(dir.parent_path() / "outside.txt");
  fs::remove_all(dir);
}

TEST(Server, ViewerAbsentIs404) {
  Running srv;
  EXPECT_EQ(fetch(srv.port(), "/viewer/").status, 404u);
}

TEST(Server, MeshAndSliceEndpoints) {
  Running srv;
  LineClient a(srv.port());
  a.send(Hello{"a", "tok"});
  ASSERT_TRUE(a.until<AssetCatalog>());
  a.send(ImportAsset{"cube.stl"});
  const auto cube = a.until<ObjectAdded>();
  ASSERT_TRUE(cube);
  a.send(ImportStack{"ball", std::nullopt});
  ASSERT_TRUE(a.until<SliceChanged>());

  const std::string mesh_path = "/meshes/" + std::to_string(cube->object.mesh_id) + ".stl";
  const auto stl = fetch(srv.port(), mesh_path + "?token=tok");
  ASSERT_EQ(stl.status, 200u);
  EXPECT_EQ(stl.content_type, "model/stl");
  const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(stl.body.data()), stl.body.size());
  EXPECT_EQ(bytes.size(), mesh_io::stl_binary_size(12));
  EXPECT_EQ(oracle::triangle_multiset(mesh_io::parse_stl(bytes)), oracle::triangle_multiset(oracle::unit_cube()));
  EXPECT_EQ(fetch(srv.port(), mesh_path).status, 401u);
  EXPECT_EQ(fetch(srv.port(), mesh_path + "?token=bad").status, 401u);
  EXPECT_EQ(fetch(srv.port(), "/meshes/999999.stl?token=tok").status, 404u);
  EXPECT_EQ(fetch(srv.port(), "/meshes/x.stl?token=tok").status, 404u);

  const auto slice = fetch(srv.port(), "/slices/ball/3.png?token=tok");
  ASSERT_EQ(slice.status, 200u);
  EXPECT_EQ(slice.content_type, "image/png");
  const auto dir = oracle::temp_dir("slice");
  mesh_io::write_file(dir / "s.png",
                      std::span(reinterpret_cast<const std::uint8_t*>(slice.body.data()), slice.body.size()));
  const Raster r = read_png(dir / "s.png");
  EXPECT_EQ(r.width, 8u);
  EXPECT_EQ(r.height, 8u);
  fs::remove_all(dir);
  EXPECT_EQ(fetch(srv.port(), "/slices/ball/3.png?token=no").status, 401u);
  EXPECT_EQ(fetch(srv.port(), "/slices/ball/8.png?token=tok").status, 404u);
  EXPECT_EQ(fetch(srv.port(), "/slices/none/0.png?token=tok").status, 404u);
}

TEST(ServerDetail, TargetAndBase64) {
  const auto t = server::detail::split_target("/a%20b?token=x%26y&k&z=1");
  EXPECT_EQ(t.path, "/a b");
  EXPECT_EQ(t.query.at("token"), "x&y");
  EXPECT_EQ(t.query.at("k"), "");
  EXPECT_EQ(t.query.at("z"), "1");
  const std::vector<std::uint8_t> raw{0, 1, 2, 250, 255};
  EXPECT_EQ(server::detail::base64_decode(server::detail::base64_encode(raw)), std::string(raw.begin(), raw.end()));
  EXPECT_EQ(server::detail::base64_encode(std::vector<std::uint8_t>{'M', 'a'}), "TWE=");
  EXPECT_THROW(server::detail::base64_decode("@@@@"), Error);
}
