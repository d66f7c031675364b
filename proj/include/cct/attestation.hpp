#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cct/bytes.hpp"
#include "cct/crypto.hpp"

// Simulated trusted-execution layer. A platform Ed25519 key stands in for
// the hardware attestation root; sealing keys are bound to the enclave
// measurement.
namespace cct::attestation {

struct Measurement : FixedBytes<32> {
    static Measurement from(const FixedBytes<32>& b) { return Measurement{b}; }
};

using PlatformSecret = FixedBytes<32>;
using SessionId = FixedBytes<16>;

struct AttestationQuote {
    Measurement measurement;
    crypto::X25519Public enclave_session_pub;
    crypto::Ed25519Signature platform_signature;

    // measurement || enclave_session_pub
    Bytes signed_payload() const;
    // signed payload followed by the signature
    Bytes to_bytes() const;
    static AttestationQuote from_bytes(ByteView raw);

    bool operator==(const AttestationQuote&) const = default;
};

enum class QuoteVerdict { accept, bad_signature, wrong_measurement };

std::string_view to_string(QuoteVerdict verdict);

struct SessionKeys {
    crypto::AeadKey client_to_enclave_key;
    crypto::AeadKey enclave_to_client_key;
    SessionId session_id;

    bool operator==(const SessionKeys&) const = default;
};

enum class Direction : std::uint8_t { client_to_enclave = 1, enclave_to_client = 2 };

struct EncryptedEnvelope {
    SessionId session_id;
    std::uint64_t sequence = 0;
    crypto::AeadNonce nonce;
    Bytes ciphertext; // includes the 16-byte tag

    bool operator==(const EncryptedEnvelope&) const = default;
};

struct SealedBlob {
    crypto::AeadNonce nonce;
    Bytes ciphertext;

    Bytes to_bytes() const;
    static SealedBlob from_bytes(ByteView raw);

    bool operator==(const SealedBlob&) const = default;
};

// SHA-256("CCT-MEAS-v1" || code_version || config_digest)
Measurement compute_measurement(std::string_view code_version, const Hash32& config_digest);

// The simulated platform signing key is derived from the platform secret so a
// single provisioned value drives both quoting and sealing.
crypto::Ed25519KeyPair platform_signing_key(const PlatformSecret& platform_secret);

AttestationQuote generate_quote(const crypto::Ed25519KeyPair& platform_key,
                                const Measurement& measurement,
                                const crypto::X25519Public& enclave_session_pub);

QuoteVerdict verify_quote(const AttestationQuote& quote, const Measurement& expected_measurement,
                          const crypto::Ed25519Public& platform_verify_key);

// Byte-level entry point: anything that does not parse is a bad signature.
QuoteVerdict verify_quote_bytes(ByteView raw_quote, const Measurement& expected_measurement,
                                const crypto::Ed25519Public& platform_verify_key);

// Client side. The quote must already have been verified. Throws
// "invalid key exchange" on a low-order peer key.
SessionKeys establish_session(const crypto::X25519Secret& client_ephemeral_secret,
                              const AttestationQuote& quote);

// Enclave side.
SessionKeys accept_session(const crypto::X25519Secret& enclave_ephemeral_secret,
                           const crypto::X25519Public& client_session_pub);

crypto::AeadNonce sequence_nonce(std::uint64_t sequence);

EncryptedEnvelope encrypt_envelope(const SessionKeys& keys, Direction direction,
                                   std::uint64_t sequence, ByteView plaintext);

// Rejects sequence numbers that are not strictly greater than the last one
// accepted in this direction.
class ReplayGuard {
public:
    bool fresh(std::uint64_t sequence) const { return !last_ || sequence > *last_; }
    void accept(std::uint64_t sequence) { last_ = sequence; }
    std::optional<std::uint64_t> last() const { return last_; }

private:
    std::optional<std::uint64_t> last_;
};

// Throws "replay" or "decrypt failed". The guard only advances on success.
Bytes decrypt_envelope(const SessionKeys& keys, Direction direction,
                       const EncryptedEnvelope& envelope, ReplayGuard& guard);

SealedBlob seal(ByteView data, const Measurement& measurement, const PlatformSecret& platform_secret);

// Throws "unseal failed".
Bytes unseal(const SealedBlob& blob, const Measurement& measurement,
             const PlatformSecret& platform_secret);

} // namespace cct::attestation
