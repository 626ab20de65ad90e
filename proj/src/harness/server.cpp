#include "c2/harness/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <list>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace c2::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

/// Shared receive loop: at most one read is outstanding, and a deadline
/// never cancels it, so a late message is delivered on the next call.
class AsyncChannel : public Channel {
 public:
  AsyncChannel(asio::io_context& io, const std::atomic<bool>& abort) : io_(io), abort_(abort) {}

  std::optional<std::string> receive(std::optional<std::chrono::milliseconds> deadline) override {
    if (inbox_.empty() && !closed_ && !reading_) start_read();
    if (io_.stopped()) io_.restart();
    // Checked after the restart so a concurrent stop() cannot be lost.
    if (abort_) closed_ = true;
    const auto until = deadline ? std::optional(Clock::now() + *deadline) : std::nullopt;
    while (inbox_.empty() && !closed_) {
      const std::size_t ran = until ? io_.run_one_until(*until) : io_.run_one();
      if (io_.stopped() && inbox_.empty()) {
        if (!until || Clock::now() < *until) closed_ = true;
        break;
      }
      if (ran == 0 && until && Clock::now() >= *until) break;
    }
    if (inbox_.empty()) return std::nullopt;
    std::string msg = std::move(inbox_.front());
    inbox_.pop_front();
    return msg;
  }

  bool closed() const override { return closed_ && inbox_.empty(); }

 protected:
  virtual void start_read() = 0;

  void deliver(std::string msg) { inbox_.push_back(std::move(msg)); }
  void mark_closed() { closed_ = true; }

  asio::io_context& io_;
  bool reading_ = false;

 private:
  const std::atomic<bool>& abort_;
  std::deque<std::string> inbox_;
  bool closed_ = false;
};

class LineChannel final : public AsyncChannel {
 public:
  LineChannel(asio::io_context& io, const std::atomic<bool>& abort, tcp::socket socket)
      : AsyncChannel(io, abort), socket_(std::move(socket)) {}

  void send(const std::string& message) override {
    boost::system::error_code ec;
    asio::write(socket_, asio::buffer(message + "\n"), ec);
    if (ec) mark_closed();
  }

 private:
  void start_read() override {
    reading_ = true;
    asio::async_read_until(socket_, buffer_, '\n', [this](boost::system::error_code ec, std::size_t n) {
      reading_ = false;
      if (ec) {
        mark_closed();
        return;
      }
      std::string line(asio::buffers_begin(buffer_.data()), asio::buffers_begin(buffer_.data()) + static_cast<long>(n));
      buffer_.consume(n);
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
      if (!line.empty()) deliver(std::move(line));
    });
  }

  tcp::socket socket_;
  asio::streambuf buffer_;
};

class WebSocketChannel final : public AsyncChannel {
 public:
  WebSocketChannel(asio::io_context& io, const std::atomic<bool>& abort, websocket::stream<tcp::socket>& ws)
      : AsyncChannel(io, abort), ws_(ws) {}

  void send(const std::string& message) override {
    boost::system::error_code ec;
    ws_.text(true);
    ws_.write(asio::buffer(message), ec);
    if (ec) mark_closed();
  }

 private:
  void start_read() override {
    reading_ = true;
    ws_.async_read(buffer_, [this](boost::system::error_code ec, std::size_t) {
      reading_ = false;
      if (ec) {
        mark_closed();
        return;
      }
      deliver(beast::buffers_to_string(buffer_.data()));
      buffer_.consume(buffer_.size());
    });
  }

  websocket::stream<tcp::socket>& ws_;
  beast::flat_buffer buffer_;
};

}  // namespace

SessionOutcome run_session(Channel& channel, Session& session) {
  auto send_all = [&](const std::vector<nlohmann::json>& msgs) {
    for (const auto& m : msgs) channel.send(m.dump());
  };
  send_all(session.start());
  while (!session.finished()) {
    auto msg = channel.receive(session.deadline());
    if (msg) {
      send_all(session.handle(*msg));
    } else if (channel.closed()) {
      return SessionOutcome::Disconnected;
    } else {
      send_all(session.on_deadline());
    }
  }
  return SessionOutcome::Completed;
}

std::string mime_type(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

std::optional<std::string> resolve_static(const std::string& root, const std::string& target) {
  namespace fs = std::filesystem;
  std::string rel = target.substr(0, target.find_first_of("?#"));
  if (rel.empty() || rel.front() != '/') return std::nullopt;
  if (rel.back() == '/') rel += "index.html";
  std::error_code ec;
  const fs::path base = fs::weakly_canonical(fs::path(root), ec);
  if (ec) return std::nullopt;
  const fs::path full = fs::weakly_canonical(base / fs::path(rel.substr(1)), ec);
  if (ec) return std::nullopt;
  const auto [root_end, _] = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
  if (root_end != base.end()) return std::nullopt;
  if (!fs::is_regular_file(full, ec)) return std::nullopt;
  return full.string();
}

struct SessionServer::Impl {
  ServerOptions options;
  SessionFactory factory;
  LogSink log;

  asio::io_context io;
  std::optional<tcp::acceptor> tcp_acceptor;
  std::optional<tcp::acceptor> http_acceptor;
  std::thread listener;

  std::mutex mutex;
  std::condition_variable cv;
  int completed = 0;
  bool stopping = false;
  std::atomic<bool> abort{false};
  struct Live {
    std::shared_ptr<asio::io_context> io;
    std::thread thread;
  };
  std::list<Live> live;

  void note(const std::string& msg) const {
    if (log) log(msg);
  }

  void finish(SessionOutcome outcome, const std::string& peer) {
    std::lock_guard lock(mutex);
    if (outcome == SessionOutcome::Completed) {
      ++completed;
      note("session with " + peer + " completed");
    } else {
      note("client " + peer + " disconnected; episode aborted");
    }
    cv.notify_all();
  }

  template <typename Body>
  void spawn(std::shared_ptr<asio::io_context> session_io, Body&& body) {
    std::lock_guard lock(mutex);
    if (stopping) return;
    live.push_back({session_io, std::thread(std::forward<Body>(body))});
  }

  void accept_tcp() {
    auto session_io = std::make_shared<asio::io_context>();
    tcp_acceptor->async_accept(*session_io, [this, session_io](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      spawn(session_io, [this, session_io, s = std::move(socket)]() mutable {
        const std::string peer = endpoint_name(s);
        try {
          LineChannel channel(*session_io, abort, std::move(s));
          auto session = factory();
          finish(run_session(channel, *session), peer);
        } catch (const std::exception& e) {
          note("session with " + peer + " failed: " + e.what());
        }
      });
      accept_tcp();
    });
  }

  void accept_http() {
    auto session_io = std::make_shared<asio::io_context>();
    http_acceptor->async_accept(*session_io, [this, session_io](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      spawn(session_io, [this, session_io, s = std::move(socket)]() mutable { serve_http(*session_io, std::move(s)); });
      accept_http();
    });
  }

  static std::string endpoint_name(const tcp::socket& s) {
    boost::system::error_code ec;
    const auto ep = s.remote_endpoint(ec);
    return ec ? std::string("unknown peer") : ep.address().to_string() + ":" + std::to_string(ep.port());
  }

  void serve_http(asio::io_context& session_io, tcp::socket socket) {
    const std::string peer = endpoint_name(socket);
    try {
      beast::flat_buffer buffer;
      http::request<http::string_body> req;
      http::read(socket, buffer, req);
      if (websocket::is_upgrade(req)) {
        if (req.target() != "/ws") {
          respond(socket, req, http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
          return;
        }
        websocket::stream<tcp::socket> ws(std::move(socket));
        ws.accept(req);
        WebSocketChannel channel(session_io, abort, ws);
        auto session = factory();
        finish(run_session(channel, *session), peer);
        boost::system::error_code ec;
        ws.close(websocket::close_code::normal, ec);
        return;
      }
      if (req.method() != http::verb::get && req.method() != http::verb::head) {
        respond(socket, req, http::status::method_not_allowed, "text/plain", "only GET is served\n");
        return;
      }
      const auto file = options.ui_dir.empty() ? std::nullopt
                                                : resolve_static(options.ui_dir, std::string(req.target()));
      if (!file) {
        respond(socket, req, http::status::not_found, "text/plain", "not found\n");
        return;
      }
      std::ifstream in(*file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      respond(socket, req, http::status::ok, mime_type(*file), body.str());
    } catch (const std::exception& e) {
      note("http connection from " + peer + " failed: " + e.what());
    }
  }

  static void respond(tcp::socket& socket, const http::request<http::string_body>& req, http::status status,
                      const std::string& type, std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, type);
    res.keep_alive(false);
    if (req.method() != http::verb::head) res.body() = std::move(body);
    res.prepare_payload();
    boost::system::error_code ec;
    http::write(socket, res, ec);
    socket.shutdown(tcp::socket::shutdown_both, ec);
  }

  void open(std::optional<tcp::acceptor>& acceptor, unsigned short port) {
    const tcp::endpoint ep(asio::ip::make_address(options.address), port);
    acceptor.emplace(io);
    acceptor->open(ep.protocol());
    acceptor->set_option(asio::socket_base::reuse_address(true));
    acceptor->bind(ep);
    acceptor->listen();
  }
};

SessionServer::SessionServer(ServerOptions options, SessionFactory factory, LogSink log)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->factory = std::move(factory);
  impl_->log = std::move(log);
  if (impl_->options.tcp_port) {
    impl_->open(impl_->tcp_acceptor, *impl_->options.tcp_port);
    impl_->accept_tcp();
  }
  if (impl_->options.http_port) {
    impl_->open(impl_->http_acceptor, *impl_->options.http_port);
    impl_->accept_http();
  }
  impl_->listener = std::thread([this] { impl_->io.run(); });
}

SessionServer::~SessionServer() { stop(); }

unsigned short SessionServer::tcp_port() const {
  return impl_->tcp_acceptor ? impl_->tcp_acceptor->local_endpoint().port() : 0;
}

unsigned short SessionServer::http_port() const {
  return impl_->http_acceptor ? impl_->http_acceptor->local_endpoint().port() : 0;
}

void SessionServer::wait_for_completed(int count) {
  std::unique_lock lock(impl_->mutex);
  impl_->cv.wait(lock, [&] { return impl_->stopping || (count > 0 && impl_->completed >= count); });
}

int SessionServer::completed() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->completed;
}

void SessionServer::stop() {
  if (!impl_) return;
  std::list<Impl::Live> live;
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopping) return;
    impl_->stopping = true;
    live.swap(impl_->live);
    impl_->cv.notify_all();
  }
  impl_->abort = true;
  impl_->io.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  for (auto& s : live) s.io->stop();
  for (auto& s : live) {
    if (s.thread.joinable()) s.thread.join();
  }
}

}  // namespace c2::harness
