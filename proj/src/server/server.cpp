#include "ol/gateway/server.hpp"

#include <deque>

#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace ol::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, SessionRegistry& registry, SessionOptions options)
      : ws_(std::move(socket)), handler_(registry, std::move(options)) {}

  void accept(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    std::weak_ptr<WsConnection> weak = shared_from_this();
    handler_.set_ready_callback([weak] {
      if (auto self = weak.lock()) net::post(self->ws_.get_executor(), [self] { self->pump(); });
    });
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        spdlog::warn("websocket accept failed: {}", ec.message());
        self->handler_.on_closed();
        return;
      }
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (ec != websocket::error::closed) spdlog::info("connection ended: {}", ec.message());
        self->closed_ = true;
        self->handler_.on_closed();
        return;
      }
      const auto data = self->buffer_.cdata();
      const auto* bytes = static_cast<const std::uint8_t*>(data.data());
      if (self->ws_.got_text()) {
        self->handler_.on_text(std::string_view(reinterpret_cast<const char*>(bytes), data.size()));
      } else {
        self->handler_.on_binary(std::span<const std::uint8_t>(bytes, data.size()));
      }
      self->buffer_.consume(self->buffer_.size());
      self->pump();
      self->read();
    });
  }

  void pump() {
    if (writing_ || closed_ || closing_) return;
    auto out = handler_.next_outbound();
    if (!out) {
      if (handler_.close_requested()) {
        closing_ = true;
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    current_ = std::move(*out);
    ws_.binary(current_.binary);
    auto buf = current_.binary ? net::buffer(current_.bytes) : net::buffer(current_.text);
    ws_.async_write(buf, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        spdlog::info("write failed: {}", ec.message());
        self->closed_ = true;
        return;
      }
      self->pump();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  SessionHandler handler_;
  WireOut current_;
  bool writing_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, GatewayServer& server, const SessionOptions& options)
      : stream_(std::move(socket)), server_(server), options_(options) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->dispatch();
    });
  }

 private:
  void dispatch() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_) && target == options_.config.gateway.ws_path) {
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), server_.registry(), options_)->accept(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    if (req_.method() == http::verb::get && target == "/healthz") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = server_.registry().health().dump();
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  GatewayServer& server_;
  const SessionOptions& options_;
};

}  // namespace

struct GatewayServer::Impl {
  Impl(GatewayServer& owner, SessionOptions opts) : owner(owner), options(std::move(opts)), acceptor(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (!acceptor.is_open()) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), owner, options)->run();
      }
      do_accept();
    });
  }

  GatewayServer& owner;
  SessionOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  bool listening = false;
};

GatewayServer::GatewayServer(SessionOptions session) : impl_(std::make_unique<Impl>(*this, std::move(session))) {}

GatewayServer::~GatewayServer() { stop(); }

std::uint16_t GatewayServer::listen() {
  auto& m = *impl_;
  if (!m.listening) {
    const auto& g = m.options.config.gateway;
    tcp::endpoint ep(net::ip::make_address(g.host), static_cast<std::uint16_t>(g.port));
    m.acceptor.open(ep.protocol());
    m.acceptor.set_option(net::socket_base::reuse_address(true));
    m.acceptor.bind(ep);
    m.acceptor.listen(net::socket_base::max_listen_connections);
    m.listening = true;
    m.do_accept();
  }
  return m.acceptor.local_endpoint().port();
}

void GatewayServer::run() {
  listen();
  net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) { impl_->ioc.stop(); });
  impl_->ioc.run();
}

void GatewayServer::start() {
  listen();
  thread_ = std::thread([this] { impl_->ioc.run(); });
}

void GatewayServer::stop() {
  impl_->ioc.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ol::gateway
