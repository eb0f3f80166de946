#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nerfstream {

// Thin RAII wrappers over blocking POSIX TCP sockets. TCP_NODELAY is set so
// small pose frames are not held back behind image frames.
class TcpStream {
 public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream();
    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    static TcpStream connect_to(const std::string& host, uint16_t port);

    // Blocks until some bytes arrive; 0 means orderly shutdown. With a
    // receive timeout configured, -1 means "timed out, try again".
    ssize_t read_some(uint8_t* buf, size_t len);
    void write_all(const uint8_t* data, size_t len);
    void write_all(const std::vector<uint8_t>& data) { write_all(data.data(), data.size()); }

    void set_receive_timeout_ms(int ms);
    void shutdown_both();
    void close();
    bool valid() const { return fd_ >= 0; }

 private:
    int fd_ = -1;
};

class TcpListener {
 public:
    // Binds and listens; port 0 picks an ephemeral port.
    TcpListener(const std::string& address, uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const { return port_; }
    // Blocks for one connection; with an accept timeout set, an invalid
    // stream means "timed out, poll again".
    TcpStream accept_one();
    void set_accept_timeout_ms(int ms);
    void close();

 private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

// "host:port" -> (host, port). Throws InvalidConfig on malformed input.
std::pair<std::string, uint16_t> parse_endpoint(const std::string& endpoint);

}  // namespace nerfstream
