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

#pragma once

// Session host. One listening port carries three protocols, told apart by the
// first byte a connection sends:
//   '{'   newline-delimited JSON messages over raw TCP (headless clients)
//   else  HTTP/1.1: GET /ws?token=T upgrades to WebSocket; GET /viewer/...
//         serves static files; GET /meshes/<id>.stl and
//         GET /slices/<asset>/<index>.png serve scene data (token required).
//
// Everything that touches the Session runs on the io_context thread. Asset
// loading for imports runs on a small worker pool; the importing connection
// stops reading until the result has been sequenced.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "ascribe/assets.hpp"
#include "ascribe/mesh_io.hpp"
#include "ascribe/png_io.hpp"
#include "ascribe/protocol/messages.hpp"
#include "ascribe/protocol/session.hpp"
#include "ascribe/volume.hpp"

namespace ascribe::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServerConfig {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::string token;
  bool recenter_imports = false;
  std::filesystem::path viewer_dir;  // empty: /viewer answers 404
  std::size_t max_message_bytes = 1 << 20;
  std::size_t import_threads = 2;
};

namespace detail {

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(beast::detail::base64::encoded_size(bytes.size()), '\0');
  out.resize(beast::detail::base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

inline std::string base64_decode(std::string_view text) {
  std::string out(beast::detail::base64::decoded_size(text.size()), '\0');
  const auto [written, read] = beast::detail::base64::decode(out.data(), text.data(), text.size());
  const auto body = text.find_last_not_of('=') + 1;
  if (text.size() % 4 != 0 || text.size() - body > 2 || read != body) throw Error(ErrorCode::MalformedMessage, "invalid base64");
  out.resize(written);
  return out;
}

inline std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
      };
      const int hi = hex(s[i + 1]);
      const int lo = hex(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

struct Target {
  std::string path;
  std::map<std::string, std::string> query;
};

inline Target split_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  t.path = percent_decode(target.substr(0, q));
  if (q == std::string_view::npos) return t;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const auto pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    t.query[percent_decode(pair.substr(0, eq))] =
        eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return t;
}

inline std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = ascribe::detail::lower_extension(p);
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".stl") return "model/stl";
  if (ext == ".obj") return "model/obj";
  return "application/octet-stream";
}

/// MeshData as one JSON line, for transports without binary frames.
inline std::string mesh_data_line(std::span<const std::uint8_t> frame) {
  return json{{"t", "mesh_data"}, {"frame", base64_encode(frame)}}.dump();
}

}  // namespace detail

class Server;

/// One connected protocol client, over either transport.
class Peer : public std::enable_shared_from_this<Peer> {
 public:
  virtual ~Peer() = default;
  virtual void send(std::string data, bool binary) = 0;
  virtual void read_next() = 0;
  /// Closes once every queued message has been written.
  virtual void close_after_flush() = 0;
  virtual void close_now() = 0;
  virtual std::string describe() const = 0;

  ClientId client = 0;
  std::set<MeshId> sent_meshes;
  bool preauthorized = false;
};

class Server {
 public:
  Server(net::io_context& io, std::shared_ptr<AssetSource> assets, ServerConfig config)
      : io_(io),
        config_(std::move(config)),
        assets_(assets),
        session_(std::move(assets), {config_.token, config_.recenter_imports}),
        acceptor_(io),
        workers_(config_.import_threads) {}

  ~Server() { workers_.join(); }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting. Throws boost::system::system_error on bind
  /// failure.
  void start() {
    const tcp::endpoint endpoint(net::ip::make_address(config_.bind), config_.port);
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen();
    spdlog::info("listening on {}:{}", config_.bind, port());
    accept();
  }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

  /// Stops accepting and drops every connection. Call on the io thread (or
  /// post it there).
  void stop() {
    beast::error_code ec;
    acceptor_.close(ec);
    auto peers = peers_;
    for (auto& [id, peer] : peers) peer->close_now();
  }

  const protocol::Session& session() const { return session_; }
  const ServerConfig& config() const { return config_; }
  std::size_t connection_count() const { return peers_.size(); }

  // ---- called by transports (io thread) --------------------------------------

  void on_open(const std::shared_ptr<Peer>& peer) {
    peer->client = session_.connect();
    peers_[peer->client] = peer;
    spdlog::info("client {} connected ({})", peer->client, peer->describe());
  }

  void on_close(const std::shared_ptr<Peer>& peer) {
    auto it = peers_.find(peer->client);
    if (it == peers_.end() || it->second != peer) return;
    peers_.erase(it);
    spdlog::info("client {} disconnected", peer->client);
    dispatch(session_.disconnect(peer->client));
  }

  void on_message(const std::shared_ptr<Peer>& peer, std::string_view text) {
    protocol::ClientOp op;
    try {
      op = protocol::decode_op(text);
    } catch (const Error& e) {
      spdlog::debug("client {} sent an undecodable message: {}", peer->client, e.what());
      reject_undecodable(peer, text, e);
      peer->read_next();
      return;
    }
    if (auto* hello = std::get_if<protocol::Hello>(&op.payload); hello && peer->preauthorized && hello->token.empty()) {
      hello->token = config_.token;
    }
    if (protocol::Session::needs_preparation(op.payload) && session_.welcomed(peer->client)) {
      prepare_async(peer, std::move(op));
      return;
    }
    finish(peer, session_.apply(peer->client, op));
  }

  /// Answers a plain HTTP request (non-upgrade).
  http::response<http::vector_body<std::uint8_t>> handle_http(const http::request<http::string_body>& req) {
    using Response = http::response<http::vector_body<std::uint8_t>>;
    auto respond = [&](http::status status, std::string_view type, std::vector<std::uint8_t> body) {
      Response res{status, req.version()};
      res.set(http::field::server, "ascribe");
      res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
      res.keep_alive(req.keep_alive());
      res.body() = std::move(body);
      res.prepare_payload();
      return res;
    };
    auto text = [&](http::status status, std::string_view msg) {
      return respond(status, "text/plain; charset=utf-8", std::vector<std::uint8_t>(msg.begin(), msg.end()));
    };
    if (req.method() != http::verb::get && req.method() != http::verb::head) {
      return text(http::status::method_not_allowed, "GET only\n");
    }
    const auto target = detail::split_target(std::string_view(req.target().data(), req.target().size()));
    const auto& path = target.path;
    auto authorized = [&] {
      auto it = target.query.find("token");
      return it != target.query.end() && it->second == config_.token;
    };

    if (path == "/" || path == "/viewer") {
      Response res = text(http::status::found, "");
      res.set(http::field::location, "/viewer/");
      return res;
    }
    if (path.starts_with("/viewer/")) return serve_static(path.substr(8), respond, text);
    if (path.starts_with("/meshes/")) {
      if (!authorized()) return text(http::status::unauthorized, "bad token\n");
      std::string_view name = std::string_view(path).substr(8);
      if (!name.ends_with(".stl")) return text(http::status::not_found, "no such mesh\n");
      name.remove_suffix(4);
      MeshId id = 0;
      const auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), id);
      const auto mesh = (ec == std::errc() && p == name.data() + name.size()) ? session_.scene().mesh(id) : nullptr;
      if (!mesh) return text(http::status::not_found, "no such mesh\n");
      return respond(http::status::ok, "model/stl", mesh_io::write_stl(*mesh));
    }
    if (path.starts_with("/slices/")) {
      if (!authorized()) return text(http::status::unauthorized, "bad token\n");
      const std::string rest = path.substr(8);
      const auto slash = rest.rfind('/');
      if (slash == std::string::npos || !rest.ends_with(".png")) return text(http::status::not_found, "no such slice\n");
      const auto volume = session_.stack_volume(rest.substr(0, slash));
      const std::string_view idx = std::string_view(rest).substr(slash + 1, rest.size() - slash - 5);
      std::int64_t index = -1;
      const auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
      if (!volume || ec != std::errc() || p != idx.data() + idx.size()) {
        return text(http::status::not_found, "no such slice\n");
      }
      try {
        return respond(http::status::ok, "image/png", encode_png(slice_to_raster(get_slice(*volume, index))));
      } catch (const Error& e) {
        return text(http::status::not_found, std::string(e.what()) + "\n");
      }
    }
    return text(http::status::not_found, "not found\n");
  }

  bool token_ok(std::string_view target) const {
    const auto t = detail::split_target(target);
    auto it = t.query.find("token");
    return it != t.query.end() && it->second == config_.token;
  }

  std::size_t max_message_bytes() const { return config_.max_message_bytes; }

 private:
  void accept();

  template <typename Respond, typename Text>
  http::response<http::vector_body<std::uint8_t>> serve_static(const std::string& rel, Respond& respond, Text& text) {
    namespace fs = std::filesystem;
    if (config_.viewer_dir.empty()) return text(http::status::not_found, "viewer not installed\n");
    const fs::path root = fs::weakly_canonical(config_.viewer_dir);
    fs::path file = fs::weakly_canonical(root / (rel.empty() ? std::string("index.html") : rel));
    std::error_code ec;
    if (fs::is_directory(file, ec)) file /= "index.html";
    const auto [root_end, file_it] = std::mismatch(root.begin(), root.end(), file.begin(), file.end());
    if (root_end != root.end() || !fs::is_regular_file(file, ec)) return text(http::status::not_found, "not found\n");
    try {
      return respond(http::status::ok, detail::mime_type(file), mesh_io::read_file(file));
    } catch (const Error&) {
      return text(http::status::not_found, "not found\n");
    }
  }

  void reject_undecodable(const std::shared_ptr<Peer>& peer, std::string_view text, const Error& e) {
    std::uint64_t seq = 0;
    const json j = json::parse(text, nullptr, false);
    if (j.is_object()) {
      if (auto it = j.find("seq"); it != j.end() && it->is_number_unsigned()) seq = it->get<std::uint64_t>();
    }
    const protocol::ServerEvent ev{session_.scene().revision(), peer->client,
                                   protocol::OpRejected{seq, protocol::RejectReason::BadPayload, e.what()}};
    peer->send(protocol::encode(ev), false);
  }

  void prepare_async(const std::shared_ptr<Peer>& peer, protocol::ClientOp op) {
    net::post(workers_, [this, peer, op = std::move(op)]() mutable {
      protocol::Prepared prepared = protocol::prepare(*assets_, op.payload);
      net::post(io_, [this, peer, op = std::move(op), prepared = std::move(prepared)]() mutable {
        if (!peers_.contains(peer->client)) return;
        finish(peer, session_.apply(peer->client, op, std::move(prepared)));
      });
    });
  }

  void finish(const std::shared_ptr<Peer>& peer, const std::vector<protocol::Outgoing>& out) {
    dispatch(out);
    if (session_.should_close(peer->client)) {
      spdlog::info("client {} refused", peer->client);
      peer->close_after_flush();
    } else {
      peer->read_next();
    }
  }

  void dispatch(const std::vector<protocol::Outgoing>& out) {
    for (const auto& o : out) {
      const std::string text = protocol::encode(o.event);
      if (o.to) {
        if (auto it = peers_.find(*o.to); it != peers_.end()) deliver(*it->second, o.event, text);
        continue;
      }
      for (auto& [id, peer] : peers_) {
        if (session_.welcomed(id)) deliver(*peer, o.event, text);
      }
    }
  }

  /// Sends any mesh the event references that the peer has not seen yet,
  /// then the event itself.
  void deliver(Peer& peer, const protocol::ServerEvent& ev, const std::string& text) {
    auto push_mesh = [&](MeshId id) {
      if (peer.sent_meshes.contains(id)) return;
      const auto mesh = session_.scene().mesh(id);
      if (!mesh) return;
      peer.sent_meshes.insert(id);
      const auto frame = protocol::encode_mesh_data(id, *mesh);
      peer.send(std::string(frame.begin(), frame.end()), true);
    };
    if (const auto* m = std::get_if<protocol::ObjectAdded>(&ev.payload)) push_mesh(m->object.mesh_id);
    if (const auto* m = std::get_if<protocol::SceneSnapshot>(&ev.payload)) {
      for (const auto& o : m->objects) push_mesh(o.mesh_id);
    }
    peer.send(text, false);
  }

  net::io_context& io_;
  ServerConfig config_;
  std::shared_ptr<AssetSource> assets_;
  protocol::Session session_;
  tcp::acceptor acceptor_;
  net::thread_pool workers_;
  std::map<ClientId, std::shared_ptr<Peer>> peers_;
};

// ---- transports ------------------------------------------------------------

class TcpPeer : public Peer {
 public:
  TcpPeer(tcp::socket socket, std::string initial, Server& server)
      : socket_(std::move(socket)), inbuf_(std::move(initial)), server_(server) {}

  void start() {
    server_.on_open(shared_from_this());
    read_next();
  }

  void send(std::string data, bool binary) override {
    if (closed_) return;
    if (binary) {
      data = detail::mesh_data_line(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
    }
    data.push_back('\n');
    outq_.push_back(std::move(data));
    if (outq_.size() == 1) write_front();
  }

  void read_next() override {
    if (closed_) return;
    auto self = std::static_pointer_cast<TcpPeer>(shared_from_this());
    net::async_read_until(socket_, net::dynamic_buffer(inbuf_, server_.max_message_bytes()), '\n',
                          [self](beast::error_code ec, std::size_t n) {
                            if (ec) return self->shutdown();
                            std::string line = self->inbuf_.substr(0, n - 1);
                            self->inbuf_.erase(0, n);
                            if (!line.empty() && line.back() == '\r') line.pop_back();
                            if (line.find_first_not_of(" \t") == std::string::npos) return self->read_next();
                            self->server_.on_message(self, line);
                          });
  }

  void close_after_flush() override {
    closing_ = true;
    if (outq_.empty()) shutdown();
  }

  void close_now() override { shutdown(); }

  std::string describe() const override {
    beast::error_code ec;
    const auto ep = socket_.remote_endpoint(ec);
    return ec ? std::string("tcp") : "tcp " + ep.address().to_string() + ":" + std::to_string(ep.port());
  }

 private:
  void write_front() {
    auto self = std::static_pointer_cast<TcpPeer>(shared_from_this());
    net::async_write(socket_, net::buffer(outq_.front()), [self](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      self->outq_.pop_front();
      if (!self->outq_.empty()) return self->write_front();
      if (self->closing_) self->shutdown();
    });
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    server_.on_close(shared_from_this());
  }

  tcp::socket socket_;
  std::string inbuf_;
  std::deque<std::string> outq_;
  Server& server_;
  bool closing_ = false;
  bool closed_ = false;
};

class WsPeer : public Peer {
 public:
  WsPeer(beast::tcp_stream stream, Server& server) : ws_(std::move(stream)), server_(server) {}

  void start(http::request<http::string_body> req) {
    preauthorized = true;
    ws_.read_message_max(server_.max_message_bytes());
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
    ws_.async_accept(req, [self](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->server_.on_open(self);
      self->read_next();
    });
  }

  void send(std::string data, bool binary) override {
    if (closed_ || !open_) return;
    outq_.push_back({std::move(data), binary});
    if (outq_.size() == 1) write_front();
  }

  void read_next() override {
    if (closed_) return;
    auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
    ws_.async_read(buffer_, [self](beast::error_code ec, std::size_t) {
      if (ec) return self->finished();
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (!self->ws_.got_text()) {
        self->server_.on_message(self, "binary frames are not accepted");
        return;
      }
      self->server_.on_message(self, text);
    });
  }

  void close_after_flush() override {
    closing_ = true;
    if (outq_.empty()) close_now();
  }

  void close_now() override {
    if (closed_ || close_sent_) return;
    close_sent_ = true;
    auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
    ws_.async_close(websocket::close_code::normal, [self](beast::error_code) { self->finished(); });
  }

  std::string describe() const override { return "websocket"; }

 private:
  void write_front() {
    auto self = std::static_pointer_cast<WsPeer>(shared_from_this());
    ws_.binary(outq_.front().second);
    ws_.async_write(net::buffer(outq_.front().first), [self](beast::error_code ec, std::size_t) {
      if (ec) return self->finished();
      self->outq_.pop_front();
      if (!self->outq_.empty()) return self->write_front();
      if (self->closing_) self->close_now();
    });
  }

  void finished() {
    if (closed_) return;
    closed_ = true;
    if (open_) server_.on_close(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::pair<std::string, bool>> outq_;
  Server& server_;
  bool open_ = false;
  bool closing_ = false;
  bool close_sent_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::string initial, Server& server)
      : stream_(std::move(socket)), server_(server) {
    auto mb = buffer_.prepare(initial.size());
    net::buffer_copy(mb, net::buffer(initial));
    buffer_.commit(initial.size());
  }

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    auto self = shared_from_this();
    http::async_read(stream_, buffer_, req_, [self](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->on_request();
    });
  }

  void on_request() {
    if (websocket::is_upgrade(req_)) {
      const std::string_view target(req_.target().data(), req_.target().size());
      if (detail::split_target(target).path != "/ws") return reply_and_close(http::status::not_found);
      if (!server_.token_ok(target)) return reply_and_close(http::status::unauthorized);
      stream_.expires_never();
      auto peer = std::make_shared<WsPeer>(std::move(stream_), server_);
      peer->start(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::vector_body<std::uint8_t>>>(server_.handle_http(req_));
    if (req_.method() == http::verb::head) res->body().clear();
    auto self = shared_from_this();
    http::async_write(stream_, *res, [self, res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) return self->close();
      self->read();
    });
  }

  void reply_and_close(http::status status) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "ascribe");
    res->keep_alive(false);
    res->body() = std::string(http::obsolete_reason(status)) + "\n";
    res->prepare_payload();
    auto self = shared_from_this();
    http::async_write(stream_, *res, [self, res](beast::error_code, std::size_t) { self->close(); });
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Server& server_;
};

/// Reads the first bytes of a fresh connection and hands it to the matching
/// transport.
class Sniffer : public std::enable_shared_from_this<Sniffer> {
 public:
  Sniffer(tcp::socket socket, Server& server) : socket_(std::move(socket)), server_(server) {}

  void start() {
    auto self = shared_from_this();
    socket_.async_read_some(net::buffer(chunk_), [self](beast::error_code ec, std::size_t n) {
      if (ec || n == 0) return;
      std::string initial(self->chunk_.data(), n);
      const auto first = initial.find_first_not_of(" \t\r\n");
      if (first != std::string::npos && initial[first] == '{') {
        std::make_shared<TcpPeer>(std::move(self->socket_), std::move(initial), self->server_)->start();
      } else if (first == std::string::npos) {
        self->start();
      } else {
        std::make_shared<HttpSession>(std::move(self->socket_), std::move(initial), self->server_)->start();
      }
    });
  }

 private:
  tcp::socket socket_;
  Server& server_;
  std::array<char, 4096> chunk_{};
};

inline void Server::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      if (!acceptor_.is_open()) return;
    } else {
      std::make_shared<Sniffer>(std::move(socket), *this)->start();
    }
    accept();
  });
}

}  // namespace ascribe::server
