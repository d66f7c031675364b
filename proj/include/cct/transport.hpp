#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cct/bytes.hpp"
#include "cct/service.hpp"

namespace cct::wire {

inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;
inline constexpr std::uint16_t kDefaultPort = 7700;

// 4-byte big-endian length followed by the body.
Bytes encode_frame(ByteView body);

// Pops one complete frame off the front of buffer, if present. Throws
// "frame too large".
std::optional<Bytes> try_decode_frame(Bytes& buffer);

enum class TranscriptDirection { to_backend, from_backend };

struct TranscriptEntry {
    TranscriptDirection direction;
    Bytes bytes;
};

// Everything an eavesdropper (or the operator) sees on the network.
class Transcript {
public:
    void append(TranscriptDirection direction, ByteView bytes);
    std::vector<TranscriptEntry> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
};

class Connection {
public:
    virtual ~Connection() = default;
    virtual Bytes round_trip(ByteView request) = 0;
};

class InProcessConnection : public Connection {
public:
    explicit InProcessConnection(Service& service) : service_(service) {}
    Bytes round_trip(ByteView request) override { return service_.handle_request(request); }

private:
    Service& service_;
};

class RecordingConnection : public Connection {
public:
    RecordingConnection(Connection& inner, Transcript& transcript)
        : inner_(inner), transcript_(transcript)
    {
    }
    Bytes round_trip(ByteView request) override;

private:
    Connection& inner_;
    Transcript& transcript_;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = kDefaultPort;

    // "host:port"
    static Endpoint parse(std::string_view text);
};

class TcpConnection : public Connection {
public:
    explicit TcpConnection(const Endpoint& endpoint);
    ~TcpConnection() override;
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    Bytes round_trip(ByteView request) override;

private:
    int fd_ = -1;
    Bytes buffer_;
};

// One thread per accepted connection; each connection carries a sequence of
// request/response frames.
class TcpServer {
public:
    TcpServer(Service& service, const Endpoint& endpoint);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    void stop();
    // Blocks until stop() is called.
    void wait();

private:
    void accept_loop();
    void serve_connection(int fd);

    Service& service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
};

} // namespace cct::wire
