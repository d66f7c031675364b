#pragma once

#include <optional>

#include "cct/messages.hpp"
#include "cct/transport.hpp"

namespace cct::wire {

struct ClientOptions {
    bool insecure_plaintext = false;
};

// Device / health-authority side of the protocol. handshake() verifies the
// backend quote against the expected measurement before any application
// data is sent.
class Client {
public:
    Client(Connection& connection, attestation::Measurement expected_measurement,
           crypto::Ed25519Public platform_verify_key, ClientOptions options = {});

    // Throws "attestation failed: <reason>" or the backend's error text.
    void handshake();
    bool connected() const { return keys_.has_value(); }
    const attestation::SessionId& session_id() const;

    // Sends one enveloped application message; returns the decrypted reply.
    Message call(const Message& request);

    // Convenience wrappers. Backend ErrorMsg replies are rethrown as cct::Error.
    void report(const authority::SignedReport& report);
    enclave::PollResult poll_result(const authority::UserToken& token);
    void upload(const authority::UserToken& token,
                const std::vector<contact_log::ContactTuple>& tuples);
    void upload_secret(const authority::UserToken& token, const ident::DeviceSecret& secret,
                       ident::IntervalIndex from, ident::IntervalIndex to);
    enclave::MatchResult poll(const std::vector<contact_log::ContactTuple>& tuples);
    void upload_gps(const authority::UserToken& token, const gps::GpsTrace& trace);
    std::vector<gps::GpsContact> poll_gps(const gps::GpsTrace& trace,
                                          double max_distance = gps::kDefaultMaxDistanceMeters,
                                          std::uint64_t time_window = gps::kDefaultTimeWindowSeconds);

private:
    Message exchange_plain(const Message& request);
    template <typename Reply>
    Reply expect(const Message& request);

    Connection& connection_;
    attestation::Measurement expected_measurement_;
    crypto::Ed25519Public platform_verify_key_;
    ClientOptions options_;
    std::optional<attestation::SessionKeys> keys_;
    std::uint64_t next_outbound_ = 0;
    attestation::ReplayGuard inbound_;
};

} // namespace cct::wire
