#include "cct/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "cct/error.hpp"

namespace cct::wire {

namespace {

void write_all(int fd, ByteView data)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(std::string("send failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

// Returns nullopt on orderly close before a full frame arrived.
std::optional<Bytes> read_frame(int fd, Bytes& buffer)
{
    std::uint8_t chunk[64 * 1024];
    while (true) {
        if (auto frame = try_decode_frame(buffer)) {
            return frame;
        }
        ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n == 0) return std::nullopt;
        if (n < 0) {
            if (errno == EINTR) continue;
            return std::nullopt;
        }
        buffer.insert(buffer.end(), chunk, chunk + n);
    }
}

} // namespace

Bytes encode_frame(ByteView body)
{
    if (body.size() > kMaxFrameBytes) {
        throw Error("frame too large");
    }
    Bytes out;
    out.reserve(4 + body.size());
    auto len = static_cast<std::uint32_t>(body.size());
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(len >> shift));
    }
    append(out, body);
    return out;
}

std::optional<Bytes> try_decode_frame(Bytes& buffer)
{
    if (buffer.size() < 4) return std::nullopt;
    std::uint32_t len = (std::uint32_t{buffer[0]} << 24) | (std::uint32_t{buffer[1]} << 16) |
                        (std::uint32_t{buffer[2]} << 8) | std::uint32_t{buffer[3]};
    if (len > kMaxFrameBytes) {
        throw Error("frame too large");
    }
    if (buffer.size() < 4 + std::size_t{len}) return std::nullopt;
    Bytes body(buffer.begin() + 4, buffer.begin() + 4 + len);
    buffer.erase(buffer.begin(), buffer.begin() + 4 + len);
    return body;
}

void Transcript::append(TranscriptDirection direction, ByteView bytes)
{
    std::lock_guard lock(mutex_);
    entries_.push_back({direction, Bytes(bytes.begin(), bytes.end())});
}

std::vector<TranscriptEntry> Transcript::entries() const
{
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t Transcript::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

Bytes RecordingConnection::round_trip(ByteView request)
{
    transcript_.append(TranscriptDirection::to_backend, request);
    Bytes response = inner_.round_trip(request);
    transcript_.append(TranscriptDirection::from_backend, response);
    return response;
}

Endpoint Endpoint::parse(std::string_view text)
{
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error("invalid address: " + std::string(text));
    }
    Endpoint ep;
    ep.host = std::string(text.substr(0, colon));
    auto port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535) {
        throw Error("invalid address: " + std::string(text));
    }
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

TcpConnection::TcpConnection(const Endpoint& endpoint)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    auto port = std::to_string(endpoint.port);
    if (::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &res) != 0) {
        throw Error("cannot resolve " + endpoint.host);
    }
    for (auto* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) {
        throw Error("cannot connect to " + endpoint.host + ":" + port);
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpConnection::~TcpConnection()
{
    if (fd_ >= 0) ::close(fd_);
}

Bytes TcpConnection::round_trip(ByteView request)
{
    write_all(fd_, encode_frame(request));
    auto response = read_frame(fd_, buffer_);
    if (!response) {
        throw Error("connection closed");
    }
    return std::move(*response);
}

TcpServer::TcpServer(Service& service, const Endpoint& endpoint) : service_(service)
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw Error("socket failed");
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(endpoint.port);
    if (::inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw Error("invalid listen host: " + endpoint.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
        std::string reason = std::strerror(errno);
        ::close(listen_fd_);
        throw Error("cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) +
                    ": " + reason);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(workers_mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& w : workers) {
        if (w.joinable()) w.join();
    }
}

void TcpServer::wait()
{
    while (!stopping_) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
}

void TcpServer::accept_loop()
{
    while (!stopping_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stopping_) break;
            if (errno == EINTR || errno == ECONNABORTED) continue;
            break;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(workers_mutex_);
        client_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd)
{
    Bytes buffer;
    try {
        while (auto request = read_frame(fd, buffer)) {
            write_all(fd, encode_frame(service_.handle_request(*request)));
        }
    } catch (const Error&) {
        // oversized frame or broken pipe: drop the connection
    }
    std::lock_guard lock(workers_mutex_);
    std::erase(client_fds_, fd);
    ::close(fd);
}

} // namespace cct::wire
