#pragma once

// Carriers for framed protocol messages: an in-process link that drives the 3D
// endpoint directly, and a loopback TCP stream.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <utility>

#include "terra3d/cosim/endpoints.hpp"
#include "terra3d/cosim/protocol.hpp"
#include "terra3d/error.hpp"

namespace terra3d::cosim {

/// One side of a bidirectional message stream.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(const Message& m) = 0;
    virtual Message receive() = 0;
};

/// In-process link to a TerrainEndpoint. Every message still goes through the
/// frame codec. `fragment` splits delivery into chunks of that many bytes and
/// `tamper` may rewrite outbound frames, both for fault-injection tests.
class DirectLink : public Channel {
public:
    explicit DirectLink(TerrainEndpoint& peer) : peer_(&peer) {}

    std::size_t fragment = 0;
    std::function<void(std::string& frame)> tamper;

    void send(const Message& m) override
    {
        std::string frame = encode_frame(m);
        if (tamper)
            tamper(frame);
        deliver(outbound_, frame);
        while (auto in = outbound_.next())
            for (const auto& reply : peer_->handle(*in))
                deliver(inbound_, encode_frame(reply));
    }

    Message receive() override
    {
        if (auto m = inbound_.next())
            return std::move(*m);
        throw Error(Errc::protocol_violation, "no message pending from peer");
    }

private:
    void deliver(FrameDecoder& to, std::string_view bytes) const
    {
        if (fragment == 0) {
            to.feed(bytes);
            return;
        }
        for (std::size_t i = 0; i < bytes.size(); i += fragment)
            to.feed(bytes.substr(i, fragment));
    }

    TerrainEndpoint* peer_;
    FrameDecoder outbound_;
    FrameDecoder inbound_;
};

namespace detail {

class Fd {
public:
    explicit Fd(int fd = -1) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept
    {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const { return fd_; }
    void reset()
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
};

[[noreturn]] inline void sys_fail(const std::string& what)
{
    throw Error(Errc::io, what + ": " + std::strerror(errno));
}

} // namespace detail

class TcpChannel : public Channel {
public:
    explicit TcpChannel(detail::Fd fd) : fd_(std::move(fd))
    {
        int one = 1;
        ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }

    /// Artificial delay before each send, for latency tests.
    std::chrono::microseconds latency{0};

    void send(const Message& m) override
    {
        if (latency.count() > 0)
            std::this_thread::sleep_for(latency);
        const std::string frame = encode_frame(m);
        std::size_t off = 0;
        while (off < frame.size()) {
            const ssize_t n = ::send(fd_.get(), frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR)
                    continue;
                detail::sys_fail("send");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    Message receive() override
    {
        char buf[65536];
        for (;;) {
            if (auto m = decoder_.next())
                return std::move(*m);
            const ssize_t n = ::recv(fd_.get(), buf, sizeof buf, 0);
            if (n < 0) {
                if (errno == EINTR)
                    continue;
                detail::sys_fail("recv");
            }
            if (n == 0)
                throw Error(Errc::protocol_violation, "peer closed the connection");
            decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        }
    }

    void close() { fd_.reset(); }

private:
    detail::Fd fd_;
    FrameDecoder decoder_;
};

/// Listening socket on 127.0.0.1. Port 0 picks an ephemeral port.
class TcpListener {
public:
    explicit TcpListener(std::uint16_t port = 0) : fd_(::socket(AF_INET, SOCK_STREAM, 0))
    {
        if (fd_.get() < 0)
            detail::sys_fail("socket");
        int one = 1;
        ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
            detail::sys_fail("bind");
        if (::listen(fd_.get(), 1) < 0)
            detail::sys_fail("listen");
        socklen_t len = sizeof addr;
        if (::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0)
            detail::sys_fail("getsockname");
        port_ = ntohs(addr.sin_port);
    }

    std::uint16_t port() const { return port_; }

    /// Wake up a blocked accept().
    void shutdown() { ::shutdown(fd_.get(), SHUT_RDWR); }

    TcpChannel accept()
    {
        for (;;) {
            const int fd = ::accept(fd_.get(), nullptr, nullptr);
            if (fd >= 0)
                return TcpChannel(detail::Fd(fd));
            if (errno != EINTR)
                detail::sys_fail("accept");
        }
    }

private:
    detail::Fd fd_;
    std::uint16_t port_ = 0;
};

inline TcpChannel connect_tcp(std::uint16_t port)
{
    detail::Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.get() < 0)
        detail::sys_fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
        detail::sys_fail("connect");
    return TcpChannel(std::move(fd));
}

/// Run the 3D endpoint over a channel until BYE has been answered.
inline void serve(TerrainEndpoint& endpoint, Channel& channel)
{
    while (!endpoint.closed())
        for (const auto& reply : endpoint.handle(channel.receive()))
            channel.send(reply);
}

} // namespace terra3d::cosim
