#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gazepet/gateway/config.hpp"

namespace gazepet::gateway {

// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(const std::string& client_key);

// Frame helpers, exposed for tests and clients.
std::string websocket_frame(const std::string& payload, int opcode = 1, bool mask = false);
std::string length_prefixed(const std::string& payload);

// Local socket service. Each connection speaks either 4-byte big-endian
// length-prefixed JSON frames, or HTTP: a GET with "Upgrade: websocket"
// switches to web-socket text frames, any other GET is served from
// static_dir. Every connection gets its own GatewaySession.
class Server {
public:
    explicit Server(GatewayConfig config);
    ~Server();

    // Binds and starts accepting on a background thread. Port 0 picks a free
    // port. Returns the bound port. Throws IoError.
    int start();
    void stop();
    // Async-signal-safe: the accept loop exits within 100 ms and run()
    // then finishes the shutdown.
    void request_stop() noexcept { running_ = false; }
    // start() and block until stop() or request_stop().
    void run();

    int port() const { return port_; }

private:
    void accept_loop();
    void serve_connection(int fd);

    GatewayConfig config_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::vector<int> open_fds_;
};

}  // namespace gazepet::gateway
