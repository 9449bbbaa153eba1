#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Thin RAII layer over POSIX TCP sockets.

namespace psmc {

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TcpConn {
  public:
    TcpConn() = default;
    explicit TcpConn(int fd) : fd_(fd) {}
    ~TcpConn();
    TcpConn(TcpConn&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    TcpConn& operator=(TcpConn&& o) noexcept;
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;

    static TcpConn connect_to(const std::string& host, std::uint16_t port);

    void send_all(const void* data, std::size_t n);
    void recv_all(void* data, std::size_t n);  // throws NetError on EOF
    void shutdown_both() noexcept;
    void close() noexcept;
    bool valid() const { return fd_ >= 0; }

  private:
    int fd_ = -1;
};

class TcpListener {
  public:
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    TcpConn accept_conn();  // throws NetError when the listener is closed
    std::uint16_t port() const { return port_; }
    void close() noexcept;

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// "host:port" -> pair; throws NetError on malformed input.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s);

}  // namespace psmc
