#include "gazepet/gateway/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>

#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"
#include "gazepet/gateway/codec.hpp"
#include "gazepet/gateway/session_service.hpp"

namespace gazepet::gateway {

namespace fs = std::filesystem;

namespace {

constexpr const char* kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

// Buffered reads from a socket; false on EOF or error.
class Conn {
public:
    explicit Conn(int fd) : fd_(fd) {}

    bool fill() {
        char tmp[65536];
        const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
        if (n <= 0) return false;
        buf_.append(tmp, static_cast<std::size_t>(n));
        return true;
    }
    bool need(std::size_t n) {
        while (buf_.size() < n) {
            if (!fill()) return false;
        }
        return true;
    }
    std::string take(std::size_t n) {
        std::string out = buf_.substr(0, n);
        buf_.erase(0, n);
        return out;
    }
    // Up to and including "\r\n\r\n".
    bool read_headers(std::string& out, std::size_t limit) {
        for (;;) {
            const auto p = buf_.find("\r\n\r\n");
            if (p != std::string::npos) {
                out = take(p + 4);
                return true;
            }
            if (buf_.size() > limit || !fill()) return false;
        }
    }
    bool send_all(const std::string& s) const {
        std::size_t off = 0;
        while (off < s.size()) {
            const ssize_t n = ::send(fd_, s.data() + off, s.size() - off, MSG_NOSIGNAL);
            if (n <= 0) return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }
    const std::string& buffered() const { return buf_; }

private:
    int fd_;
    std::string buf_;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

struct HttpRequest {
    std::string method, target;
    std::map<std::string, std::string> headers;  // lower-case names
};

bool parse_request(const std::string& text, HttpRequest& req) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) return false;
    std::istringstream first(line);
    std::string version;
    if (!(first >> req.method >> req.target >> version)) return false;
    while (std::getline(is, line) && line != "\r" && !line.empty()) {
        const auto c = line.find(':');
        if (c == std::string::npos) return false;
        req.headers[lower(trim(line.substr(0, c)))] = trim(line.substr(c + 1));
    }
    return true;
}

std::string http_response(int status, const char* reason, const std::string& type,
                          const std::string& body) {
    std::ostringstream os;
    os << "HTTP/1.1 " << status << ' ' << reason << "\r\n"
       << "Content-Type: " << type << "\r\n"
       << "Content-Length: " << body.size() << "\r\n"
       << "Connection: close\r\n\r\n"
       << body;
    return os.str();
}

std::string content_type(const fs::path& p) {
    static const std::map<std::string, std::string> types{
        {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"},
        {".mjs", "text/javascript"},           {".css", "text/css"},
        {".json", "application/json"},         {".png", "image/png"},
        {".svg", "image/svg+xml"},             {".ico", "image/x-icon"},
        {".map", "application/json"},          {".txt", "text/plain; charset=utf-8"}};
    const auto it = types.find(lower(p.extension().string()));
    return it == types.end() ? "application/octet-stream" : it->second;
}

// Resolves a URL path inside the static root; empty when it escapes it or
// does not exist.
std::optional<fs::path> static_file(const fs::path& root, std::string target) {
    if (root.empty()) return std::nullopt;
    if (const auto q = target.find_first_of("?#"); q != std::string::npos) target.resize(q);
    if (target.empty() || target[0] != '/') return std::nullopt;
    if (target.back() == '/') target += "index.html";
    const fs::path rel = fs::path(target.substr(1)).lexically_normal();
    for (const auto& part : rel) {
        if (part == "..") return std::nullopt;
    }
    std::error_code ec;
    const auto base = fs::canonical(root, ec);
    if (ec) return std::nullopt;
    const auto full = fs::weakly_canonical(base / rel, ec);
    if (ec || !fs::is_regular_file(full)) return std::nullopt;
    const auto r = full.lexically_relative(base);
    if (r.empty() || *r.begin() == "..") return std::nullopt;
    return full;
}

void send_replies_lp(Conn& c, const Reply& r) {
    for (const auto& m : r.messages) c.send_all(length_prefixed(m.dump()));
}

void serve_length_prefixed(Conn& c, GatewaySession& session, std::size_t max_frame) {
    for (;;) {
        if (!c.need(4)) return;
        const auto h = c.take(4);
        const std::uint32_t len = (static_cast<std::uint32_t>(static_cast<unsigned char>(h[0])) << 24) |
                                  (static_cast<std::uint32_t>(static_cast<unsigned char>(h[1])) << 16) |
                                  (static_cast<std::uint32_t>(static_cast<unsigned char>(h[2])) << 8) |
                                  static_cast<std::uint32_t>(static_cast<unsigned char>(h[3]));
        if (len > max_frame) {
            c.send_all(length_prefixed(make_error(-1, "protocol", "frame too large").dump()));
            return;
        }
        if (!c.need(len)) return;
        const auto reply = session.handle_frame(c.take(len));
        send_replies_lp(c, reply);
        if (reply.close) return;
    }
}

void serve_websocket(Conn& c, GatewaySession& session, std::size_t max_frame) {
    std::string message;
    bool in_fragment = false;
    const auto fail = [&](const std::string& why) {
        c.send_all(websocket_frame(make_error(-1, "protocol", why).dump()));
        c.send_all(websocket_frame(std::string("\x03\xea", 2), 8));  // 1002 protocol error
    };
    for (;;) {
        if (!c.need(2)) return;
        const auto b0 = static_cast<unsigned char>(c.buffered()[0]);
        const auto b1 = static_cast<unsigned char>(c.buffered()[1]);
        const bool fin = b0 & 0x80;
        const int opcode = b0 & 0x0f;
        const bool masked = b1 & 0x80;
        std::uint64_t len = b1 & 0x7f;
        std::size_t header = 2;
        if (len == 126) header += 2;
        if (len == 127) header += 8;
        if (masked) header += 4;
        if (!c.need(header)) return;
        const auto h = c.take(header);
        std::size_t off = 2;
        if (len == 126 || len == 127) {
            const int n = len == 126 ? 2 : 8;
            len = 0;
            for (int i = 0; i < n; ++i) len = (len << 8) | static_cast<unsigned char>(h[off + i]);
            off += static_cast<std::size_t>(n);
        }
        if (!masked) return fail("client frames must be masked");
        if (len > max_frame || message.size() + len > max_frame) return fail("frame too large");
        if (!c.need(static_cast<std::size_t>(len))) return;
        auto data = c.take(static_cast<std::size_t>(len));
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<char>(data[i] ^ h[off + (i % 4)]);

        if (opcode == 8) {
            c.send_all(websocket_frame(data.substr(0, 2), 8));
            return;
        }
        if (opcode == 9) {
            c.send_all(websocket_frame(data, 10));
            continue;
        }
        if (opcode == 10) continue;
        if (opcode == 1 && !in_fragment) {
            message = std::move(data);
        } else if (opcode == 0 && in_fragment) {
            message += data;
        } else {
            return fail(opcode == 2 ? "binary frames are not supported" : "unexpected frame opcode");
        }
        in_fragment = !fin;
        if (in_fragment) continue;
        const auto reply = session.handle_frame(message);
        for (const auto& m : reply.messages) c.send_all(websocket_frame(m.dump()));
        if (reply.close) {
            c.send_all(websocket_frame(std::string("\x03\xea", 2), 8));
            return;
        }
    }
}

void serve_http(Conn& c, const GatewayConfig& config) {
    std::string head;
    HttpRequest req;
    if (!c.read_headers(head, 65536) || !parse_request(head, req)) {
        c.send_all(http_response(400, "Bad Request", "text/plain", "bad request\n"));
        return;
    }
    const auto upgrade = req.headers.find("upgrade");
    if (upgrade != req.headers.end() && lower(upgrade->second) == "websocket") {
        const auto key = req.headers.find("sec-websocket-key");
        if (req.method != "GET" || key == req.headers.end()) {
            c.send_all(http_response(400, "Bad Request", "text/plain", "bad websocket handshake\n"));
            return;
        }
        c.send_all("HTTP/1.1 101 Switching Protocols\r\n"
                   "Upgrade: websocket\r\n"
                   "Connection: Upgrade\r\n"
                   "Sec-WebSocket-Accept: " +
                   websocket_accept(key->second) + "\r\n\r\n");
        GatewaySession session(config);
        serve_websocket(c, session, config.max_frame_bytes);
        return;
    }
    if (req.method != "GET" && req.method != "HEAD") {
        c.send_all(http_response(405, "Method Not Allowed", "text/plain", "method not allowed\n"));
        return;
    }
    const auto file = static_file(config.static_dir, req.target);
    if (!file) {
        c.send_all(http_response(404, "Not Found", "text/plain", "not found\n"));
        return;
    }
    auto body = read_file(*file);
    auto resp = http_response(200, "OK", content_type(*file), body);
    if (req.method == "HEAD") resp.resize(resp.size() - body.size());
    c.send_all(resp);
}

}  // namespace

std::string websocket_accept(const std::string& client_key) {
    return base64_encode(sha1_digest(client_key + kWsGuid));
}

std::string websocket_frame(const std::string& payload, int opcode, bool mask) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | (opcode & 0x0f)));
    const char mbit = mask ? static_cast<char>(0x80) : 0;
    const std::uint64_t n = payload.size();
    if (n < 126) {
        f.push_back(static_cast<char>(mbit | static_cast<char>(n)));
    } else if (n <= 0xffff) {
        f.push_back(static_cast<char>(mbit | 126));
        f.push_back(static_cast<char>(n >> 8));
        f.push_back(static_cast<char>(n & 0xff));
    } else {
        f.push_back(static_cast<char>(mbit | 127));
        for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((n >> (8 * i)) & 0xff));
    }
    if (!mask) return f + payload;
    const char key[4] = {0x12, 0x34, 0x56, 0x78};
    f.append(key, 4);
    for (std::size_t i = 0; i < payload.size(); ++i) f.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
    return f;
}

std::string length_prefixed(const std::string& payload) {
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out{static_cast<char>(n >> 24), static_cast<char>((n >> 16) & 0xff),
                    static_cast<char>((n >> 8) & 0xff), static_cast<char>(n & 0xff)};
    return out + payload;
}

Server::Server(GatewayConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

int Server::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(config_.port));
    if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw IoError("bad host address '" + config_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
}

void Server::run() {
    if (!running_) start();
    if (acceptor_.joinable()) acceptor_.join();
    stop();
}

void Server::stop() {
    running_ = false;
    if (acceptor_.joinable() && acceptor_.get_id() != std::this_thread::get_id()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) {
        if (t.joinable()) t.join();
    }
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void Server::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mu_);
        open_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void Server::serve_connection(int fd) {
    try {
        Conn c(fd);
        if (c.need(4)) {
            const auto& b = c.buffered();
            if (b.compare(0, 4, "GET ") == 0 || b.compare(0, 4, "HEAD") == 0 || b.compare(0, 4, "POST") == 0) {
                serve_http(c, config_);
            } else {
                GatewaySession session(config_);
                serve_length_prefixed(c, session, config_.max_frame_bytes);
            }
        }
    } catch (const std::exception&) {
        // A broken connection never takes the server down.
    }
    std::lock_guard lock(mu_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
    ::close(fd);
}

}  // namespace gazepet::gateway
