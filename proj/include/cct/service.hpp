#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>

#include "cct/attestation.hpp"
#include "cct/enclave.hpp"
#include "cct/messages.hpp"

namespace cct::wire {

struct ServiceOptions {
    // Negative control for the transcript audit: envelopes carry plaintext.
    bool insecure_plaintext = false;
    std::size_t max_pending_handshakes = 1024;
};

// Envelope payload protection shared by the service and the client. With
// insecure set the "ciphertext" is the plaintext followed by a zero tag.
attestation::EncryptedEnvelope protect_payload(const attestation::SessionKeys& keys,
                                               attestation::Direction direction,
                                               std::uint64_t sequence, ByteView plaintext,
                                               bool insecure);
Bytes open_payload(const attestation::SessionKeys& keys, attestation::Direction direction,
                   const attestation::EncryptedEnvelope& envelope, attestation::ReplayGuard& guard,
                   bool insecure);

// The backend endpoint. Handshake messages are answered in plaintext; every
// application message must arrive inside an envelope bound to an established
// session and is answered on that session. Safe to call from many threads.
class Service {
public:
    Service(enclave::Enclave& enclave, crypto::Ed25519KeyPair platform_key,
            ServiceOptions options = {});

    Bytes handle_request(ByteView raw);

    std::size_t session_count() const;
    enclave::Enclave& enclave() { return enclave_; }

private:
    struct Session {
        attestation::SessionKeys keys;
        attestation::ReplayGuard inbound;
        std::uint64_t next_outbound = 0;
        std::mutex mutex;
    };

    std::string handle_plain(const Message& msg);
    std::string handle_envelope(const attestation::EncryptedEnvelope& env);
    Message dispatch(Message& request);

    enclave::Enclave& enclave_;
    crypto::Ed25519KeyPair platform_key_;
    ServiceOptions options_;

    std::mutex pending_mutex_;
    std::map<crypto::X25519Public, crypto::X25519Secret> pending_;
    std::deque<crypto::X25519Public> pending_order_;

    mutable std::mutex sessions_mutex_;
    std::map<attestation::SessionId, std::shared_ptr<Session>> sessions_;
};

} // namespace cct::wire
