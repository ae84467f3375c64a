#include "pfb/server.hpp"

#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "pfb/error.hpp"

namespace pfb {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

// A client that cannot keep up with the state stream is dropped rather than
// buffered without bound.
constexpr std::size_t kMaxQueuedFrames = 2048;

std::string mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".wasm") return "application/wasm";
    return "application/octet-stream";
}

}  // namespace

class WsClient;

struct detail::ServerImpl : std::enable_shared_from_this<detail::ServerImpl> {
    explicit ServerImpl(ServerOptions options)
        : ioc(1),
          acceptor(ioc),
          timer(ioc),
          signals(ioc),
          static_root(options.static_root),
          session(std::move(options.session)),
          pacer(std::chrono::duration_cast<Pacer::Clock::duration>(
              std::chrono::duration<double, std::milli>(session.config().sim.dt_ms))),
          handle_signals(options.handle_signals) {
        boost::system::error_code ec;
        const auto address = net::ip::make_address(options.bind_address, ec);
        if (ec) throw RuntimeError("bind_failed", "bad bind address " + options.bind_address);
        const tcp::endpoint endpoint(address, options.port);
        acceptor.open(endpoint.protocol(), ec);
        if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
        if (!ec) acceptor.bind(endpoint, ec);
        if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
        if (ec)
            throw RuntimeError("bind_failed", "cannot listen on " + options.bind_address + ":" +
                                                  std::to_string(options.port) + ": " + ec.message());
        port = acceptor.local_endpoint().port();
        stats_copy = pacer.stats();
    }

    void run();
    void shutdown();
    void accept();
    void schedule_tick();
    void on_tick();

    void add(const std::shared_ptr<WsClient>& c);
    void remove(const WsClient* c);
    void on_message(const std::shared_ptr<WsClient>& c, const std::string& text);
    void dispatch(const std::shared_ptr<WsClient>& sender, SessionOutput&& out);
    void broadcast(const std::string& frame);

    net::io_context ioc;
    tcp::acceptor acceptor;
    net::steady_timer timer;
    net::signal_set signals;
    std::optional<std::string> static_root;
    Session session;
    Pacer pacer;
    bool handle_signals;
    bool stopping = false;
    unsigned short port = 0;

    // Connection order, oldest first; the driver is promoted from here.
    std::vector<std::shared_ptr<WsClient>> clients;
    const WsClient* driver = nullptr;

    mutable std::mutex stats_mutex;
    IntervalStats stats_copy;
};

class WsClient : public std::enable_shared_from_this<WsClient> {
public:
    WsClient(tcp::socket&& socket, std::shared_ptr<detail::ServerImpl> server)
        : ws_(std::move(socket)), server_(std::move(server)) {}

    void accept(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->server_->add(self);
            self->read();
        });
    }

    void send(std::string frame) {
        if (closed_) return;
        if (queue_.size() >= kMaxQueuedFrames) {
            hard_close();
            return;
        }
        queue_.push_back(std::move(frame));
        if (queue_.size() == 1) write_next();
    }

    // Flushes queued frames, then sends a close frame.
    void close_after_flush() {
        closing_ = true;
        if (queue_.empty()) close_now();
    }

    void hard_close() {
        if (closed_) return;
        closed_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
        server_->remove(this);
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->server_->remove(self.get());
                return;
            }
            std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            if (!self->closing_) self->server_->on_message(self, text);
            if (!self->closed_) self->read();
        });
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->hard_close();
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty())
                self->write_next();
            else if (self->closing_)
                self->close_now();
        });
    }

    void close_now() {
        if (closed_ || close_sent_) return;
        close_sent_ = true;
        ws_.async_close(websocket::close_code::policy_error, [self = shared_from_this()](beast::error_code) {});
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<detail::ServerImpl> server_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    bool closing_ = false;
    bool close_sent_ = false;
    bool closed_ = false;
};

namespace {

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, std::shared_ptr<detail::ServerImpl> server)
        : stream_(std::move(socket)), server_(std::move(server)) {}

    void start() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->on_request();
        });
    }

private:
    void on_request() {
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            std::make_shared<WsClient>(stream_.release_socket(), server_)->accept(std::move(req_));
            return;
        }
        respond();
    }

    void respond() {
        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req_.version());
        res->keep_alive(false);
        res->set(http::field::server, "pfb");

        const std::string target(req_.target());
        const auto file = resolve(target);
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            res->result(http::status::method_not_allowed);
            res->set(http::field::content_type, "text/plain");
            res->body() = "method not allowed\n";
        } else if (!file) {
            res->result(http::status::not_found);
            res->set(http::field::content_type, "text/plain");
            res->body() = "not found\n";
        } else {
            std::ifstream in(*file, std::ios::binary);
            std::ostringstream body;
            body << in.rdbuf();
            res->result(http::status::ok);
            res->set(http::field::content_type, mime_type(*file));
            if (req_.method() == http::verb::get) res->body() = body.str();
        }
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ec;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        });
    }

    std::optional<std::filesystem::path> resolve(std::string target) const {
        if (!server_->static_root) return std::nullopt;
        const auto q = target.find('?');
        if (q != std::string::npos) target.resize(q);
        if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos) return std::nullopt;
        if (target.back() == '/') target += "index.html";
        std::filesystem::path p = std::filesystem::path(*server_->static_root) / target.substr(1);
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) return std::nullopt;
        return p;
    }

    beast::tcp_stream stream_;
    std::shared_ptr<detail::ServerImpl> server_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

void detail::ServerImpl::run() {
    if (handle_signals) {
        signals.async_wait([self = shared_from_this()](beast::error_code ec, int) {
            if (!ec) self->shutdown();
        });
    }
    accept();
    pacer.start(Pacer::Clock::now());
    schedule_tick();
    ioc.run();
}

void detail::ServerImpl::accept() {
    acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
        if (ec) return;
        std::make_shared<HttpConnection>(std::move(socket), self)->start();
        if (!self->stopping) self->accept();
    });
}

void detail::ServerImpl::schedule_tick() {
    timer.expires_at(pacer.deadline());
    timer.async_wait([self = shared_from_this()](beast::error_code ec) {
        if (ec || self->stopping) return;
        self->on_tick();
    });
}

void detail::ServerImpl::on_tick() {
    pacer.on_tick(Pacer::Clock::now());
    dispatch(nullptr, session.tick());
    {
        std::lock_guard lock(stats_mutex);
        port = acceptor.local_endpoint().port();
        stats_copy = pacer.stats();
    }
    schedule_tick();
}

void detail::ServerImpl::add(const std::shared_ptr<WsClient>& c) {
    if (stopping) {
        c->close_after_flush();
        return;
    }
    clients.push_back(c);
    const bool is_driver = driver == nullptr;
    if (is_driver) driver = c.get();
    c->send(msg::serialize(msg::Server{msg::Role{is_driver ? "driver" : "observer"}}));
}

void detail::ServerImpl::remove(const WsClient* c) {
    std::erase_if(clients, [c](const auto& p) { return p.get() == c; });
    if (driver != c) return;
    driver = nullptr;
    if (!clients.empty() && !stopping) {
        driver = clients.front().get();
        clients.front()->send(msg::serialize(msg::Server{msg::Role{"driver"}}));
    }
}

void detail::ServerImpl::on_message(const std::shared_ptr<WsClient>& c, const std::string& text) {
    SessionOutput out;
    try {
        out = session.handle_message(text, c.get() == driver);
    } catch (const std::exception&) {
        out = SessionOutput{};
        out.reply.push_back(msg::serialize(msg::Server{msg::Error{"internal"}}));
    }
    dispatch(c, std::move(out));
}

void detail::ServerImpl::dispatch(const std::shared_ptr<WsClient>& sender, SessionOutput&& out) {
    if (sender) {
        for (auto& f : out.reply) sender->send(std::move(f));
    }
    for (const auto& f : out.broadcast) broadcast(f);
    if (sender && out.close_sender) sender->close_after_flush();
}

void detail::ServerImpl::broadcast(const std::string& frame) {
    // send() may drop a slow client, which edits `clients`.
    const auto snapshot = clients;
    for (const auto& c : snapshot) c->send(frame);
}

void detail::ServerImpl::shutdown() {
    if (stopping) return;
    if (session.running()) dispatch(nullptr, session.handle_message(R"({"type":"stop_task"})", true));
    stopping = true;
    beast::error_code ec;
    acceptor.close(ec);
    timer.cancel();
    signals.cancel(ec);
    for (const auto& c : std::vector(clients)) c->close_after_flush();
    // Peers that never answer the close handshake must not hold up exit.
    auto grace = std::make_shared<net::steady_timer>(ioc, std::chrono::milliseconds(500));
    grace->async_wait([self = shared_from_this(), grace](beast::error_code) { self->ioc.stop(); });
}

Server::Server(ServerOptions options) : impl_(std::make_shared<detail::ServerImpl>(std::move(options))) {
    // Registered now so a signal that arrives before run() is queued rather
    // than killing the process.
    if (impl_->handle_signals) {
        impl_->signals.add(SIGINT);
        impl_->signals.add(SIGTERM);
    }
}

Server::~Server() {
    // Pending handlers hold references to the implementation; cancel
    // everything and let them run once so those references are released.
    auto& impl = *impl_;
    impl.stopping = true;
    beast::error_code ec;
    impl.acceptor.close(ec);
    impl.timer.cancel();
    impl.signals.cancel(ec);
    for (const auto& c : std::vector(impl.clients)) c->hard_close();
    impl.ioc.restart();
    impl.ioc.poll();
}

unsigned short Server::port() const { return impl_->port; }

void Server::run() { impl_->run(); }

void Server::stop() {
    net::post(impl_->ioc, [impl = impl_] { impl->shutdown(); });
}

IntervalStats Server::tick_stats() const {
    std::lock_guard lock(impl_->stats_mutex);
    return impl_->stats_copy;
}

}  // namespace pfb
