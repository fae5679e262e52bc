#include "swarmsim/service/server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "swarmsim/service/session.hpp"

namespace swarmsim::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kMaxTicksPerIteration = 20'000;

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const std::string hex(s.substr(i + 1, 2));
      char* end = nullptr;
      const long v = std::strtol(hex.c_str(), &end, 16);
      if (end == hex.c_str() + 2) {
        out.push_back(static_cast<char>(v));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

std::optional<std::string> query_param(std::string_view target, std::string_view key) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  std::size_t start = q + 1;
  while (start < target.size()) {
    std::size_t end = target.find('&', start);
    if (end == std::string_view::npos) end = target.size();
    const std::string_view pair(target.data() + start, end - start);
    std::size_t eq = 0;
    while (eq < pair.size() && pair[eq] != '=') ++eq;
    if (pair.substr(0, eq) == key) return percent_decode(eq < pair.size() ? pair.substr(eq + 1) : std::string_view{});
    start = end + 1;
  }
  return std::nullopt;
}

/// Plain file names only: no separators, no parent references, .csv suffix.
bool safe_csv_name(const std::string& name) {
  if (name.size() < 5 || name.size() > 255 || name.front() == '.') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return name.ends_with(".csv");
}

}  // namespace

class WsClient;

struct Server::Impl {
  Impl(RunConfig config, ServerOptions opts) : options(std::move(opts)), session(std::move(config)), acceptor(ioc) {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void do_accept();
  void loop();
  void enqueue(std::weak_ptr<WsClient> from, std::string text);
  void broadcast(const Json& frame);
  void publish_frame_locked(Clock::time_point now);
  http::response<http::string_body> handle_http(const http::request<http::string_body>& req);

  ServerOptions options;
  net::io_context ioc{1};

  std::mutex session_mutex;
  Session session;
  std::pair<std::uint64_t, std::uint64_t> last_frame_key{0, 0};
  bool any_frame = false;
  Clock::time_point last_frame_time{};

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<std::pair<std::weak_ptr<WsClient>, std::string>> commands;

  std::mutex clients_mutex;
  std::vector<std::weak_ptr<WsClient>> clients;

  tcp::acceptor acceptor;
  std::atomic<bool> stopping{false};
  std::thread io_thread;
  std::thread loop_thread;
};

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket&& socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_open();
    });
  }

  /// Frames overwrite any unsent frame; control messages always queue.
  void send(std::string message, bool is_frame) {
    net::post(ws_.get_executor(), [self = shared_from_this(), message = std::move(message), is_frame]() mutable {
      if (is_frame) {
        self->pending_frame_ = std::move(message);
      } else {
        self->control_.push_back(std::move(message));
      }
      if (!self->writing_) self->write_next();
    });
  }

 private:
  void on_open() {
    std::string hello;
    std::string frame;
    {
      const std::lock_guard lock(server_.session_mutex);
      hello = Json{{"type", "hello"},
                   {"version", kProtocolVersion},
                   {"protocol", kProtocolName},
                   {"config", server_.session.config_json()}}
                  .dump();
      frame = server_.session.frame().dump();
    }
    {
      const std::lock_guard lock(server_.clients_mutex);
      server_.clients.push_back(weak_from_this());
    }
    send(std::move(hello), false);
    send(std::move(frame), true);
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.enqueue(self->weak_from_this(), std::move(text));
      self->read();
    });
  }

  void write_next() {
    if (!control_.empty()) {
      current_ = std::move(control_.front());
      control_.pop_front();
    } else if (pending_frame_) {
      current_ = std::move(*pending_frame_);
      pending_frame_.reset();
    } else {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->writing_ = false;
        return;
      }
      self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Server::Impl& server_;
  std::deque<std::string> control_;
  std::optional<std::string> pending_frame_;
  std::string current_;
  bool writing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

  void on_request() {
    if (websocket::is_upgrade(req_)) {
      const std::string target(req_.target());
      if (target == "/session" || target.starts_with("/session?")) {
        stream_.expires_never();
        std::make_shared<WsClient>(stream_.release_socket(), server_)->start(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>(server_.handle_http(req_));
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Server::Impl& server_;
};

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!acceptor.is_open()) return;
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), *this)->start();
    do_accept();
  });
}

http::response<http::string_body> Server::Impl::handle_http(const http::request<http::string_body>& req) {
  http::response<http::string_body> res{http::status::ok, req.version()};
  res.set(http::field::server, "swarmsim");
  res.set(http::field::access_control_allow_origin, "*");
  res.set(http::field::content_type, "application/json");

  const std::string target(req.target());
  const std::string path = target.substr(0, target.find('?'));
  auto fail = [&](http::status status, const std::string& reason) {
    res.result(status);
    res.body() = Json{{"error", reason}}.dump();
    return res;
  };

  if (req.method() != http::verb::get) return fail(http::status::method_not_allowed, "only GET is supported");

  if (path == "/health") {
    std::size_t n_clients = 0;
    {
      const std::lock_guard lock(clients_mutex);
      n_clients = static_cast<std::size_t>(
          std::count_if(clients.begin(), clients.end(), [](const auto& w) { return !w.expired(); }));
    }
    const std::lock_guard lock(session_mutex);
    res.body() = Json{{"status", "ok"},
                      {"protocol", kProtocolName},
                      {"epoch", session.epoch()},
                      {"tick", session.world().tick()},
                      {"running", session.running()},
                      {"clients", n_clients}}
                     .dump();
    return res;
  }
  if (path == "/config") {
    const std::lock_guard lock(session_mutex);
    res.body() = session.config_json().dump(2);
    return res;
  }
  if (path == "/snapshot") {
    const std::lock_guard lock(session_mutex);
    res.body() = session.snapshot().dump();
    return res;
  }
  if (path == "/phase-diagram") {
    const auto file = query_param(target, "file");
    if (!file) return fail(http::status::bad_request, "missing 'file' query parameter");
    if (!safe_csv_name(*file)) return fail(http::status::bad_request, "file must be a plain .csv name in the data dir");
    const std::filesystem::path p = options.data_dir / *file;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) return fail(http::status::not_found, "no such phase diagram");
    std::ifstream in(p, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    res.set(http::field::content_type, "text/csv");
    res.body() = body.str();
    return res;
  }
  return fail(http::status::not_found, "unknown path " + path);
}

void Server::Impl::enqueue(std::weak_ptr<WsClient> from, std::string text) {
  {
    const std::lock_guard lock(queue_mutex);
    commands.emplace_back(std::move(from), std::move(text));
  }
  queue_cv.notify_one();
}

void Server::Impl::broadcast(const Json& message) {
  const bool is_frame = message.value("type", "") == "frame";
  const std::string text = message.dump();
  const std::lock_guard lock(clients_mutex);
  std::erase_if(clients, [](const auto& w) { return w.expired(); });
  for (const auto& w : clients) {
    if (auto c = w.lock()) c->send(text, is_frame);
  }
}

// Emits a frame only for a strictly newer (epoch, tick).
void Server::Impl::publish_frame_locked(Clock::time_point now) {
  const std::pair key{session.epoch(), session.world().tick()};
  if (any_frame && key <= last_frame_key) return;
  any_frame = true;
  last_frame_key = key;
  last_frame_time = now;
  broadcast(session.frame());
}

void Server::Impl::loop() {
  auto last = Clock::now();
  double debt = 0.0;
  while (!stopping) {
    std::deque<std::pair<std::weak_ptr<WsClient>, std::string>> batch;
    {
      std::unique_lock lock(queue_mutex);
      queue_cv.wait_for(lock, std::chrono::milliseconds(2), [&] { return stopping || !commands.empty(); });
      batch.swap(commands);
    }
    const auto now = Clock::now();
    const std::lock_guard lock(session_mutex);

    for (auto& [from, text] : batch) {
      Session::Reply reply = session.handle_text(text);
      if (auto c = from.lock()) c->send(reply.message.dump(), false);
      if (reply.frame) publish_frame_locked(now);
    }

    if (!session.running()) {
      debt = 0.0;
      last = now;
      continue;
    }
    const double dt = session.world().config().dt;
    debt += std::chrono::duration<double>(now - last).count() * session.speed() / dt;
    last = now;
    const auto due = static_cast<std::uint64_t>(std::min(debt, static_cast<double>(kMaxTicksPerIteration)));
    debt = std::min(debt - static_cast<double>(due), 1.0);
    for (std::uint64_t i = 0; i < due; ++i) {
      if (auto error = session.tick()) {
        broadcast(Json{{"type", "error_frame"},
                       {"version", kProtocolVersion},
                       {"epoch", session.epoch()},
                       {"tick", session.world().tick()},
                       {"reason", *error}});
        break;
      }
    }
    if (due > 0 && std::chrono::duration<double>(now - last_frame_time).count() >= 1.0 / session.frame_rate()) {
      publish_frame_locked(now);
    }
  }
}

Server::Server(RunConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  impl_->do_accept();
  impl_->loop_thread = std::thread([this] { impl_->loop(); });
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::run_until_signal() {
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([&](beast::error_code, int) { stop(); });
  signals_ctx.run();
}

void Server::stop() {
  if (impl_->stopping.exchange(true)) return;
  impl_->queue_cv.notify_all();
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->ioc.stop();
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

}  // namespace swarmsim::service
