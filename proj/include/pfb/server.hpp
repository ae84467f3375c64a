#pragma once

#include <memory>
#include <optional>
#include <string>

#include "pfb/realtime.hpp"
#include "pfb/session.hpp"

namespace pfb {

struct ServerOptions {
    std::string bind_address = "127.0.0.1";
    // 0 picks a free port; see Server::port().
    unsigned short port = 8765;
    // Plain HTTP requests are answered with files from here when set.
    std::optional<std::string> static_root;
    SessionOptions session;
    // Shut down cleanly on SIGINT/SIGTERM.
    bool handle_signals = false;
};

namespace detail {
struct ServerImpl;
}

// Websocket front end for one Session. A single-threaded event loop owns the
// session, the tick timer and every connection, so all session state is
// touched from one thread in arrival order. The first client to connect is
// the driver; later ones are observers until the driver leaves.
class Server {
public:
    // Binds immediately; throws RuntimeError("bind_failed") on failure.
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    // Blocks until stop() is called or a handled signal arrives. A task still
    // running at shutdown is finalized like stop_task.
    void run();
    // Safe to call from any thread.
    void stop();
    // Safe to call from any thread while run() is active.
    IntervalStats tick_stats() const;

private:
    std::shared_ptr<detail::ServerImpl> impl_;
};

}  // namespace pfb
