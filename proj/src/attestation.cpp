#include "cct/attestation.hpp"

#include "cct/error.hpp"

namespace cct::attestation {

namespace {

constexpr std::string_view kMeasurementLabel = "CCT-MEAS-v1";
constexpr std::string_view kSealLabel = "CCT-SEAL-v1";
constexpr std::string_view kPlatformSignLabel = "CCT-PLATFORM-SIGN-v1";
constexpr std::string_view kSessionIdLabel = "CCT-SID-v1";
constexpr std::string_view kClientToEnclaveLabel = "CCT-C2E-v1";
constexpr std::string_view kEnclaveToClientLabel = "CCT-E2C-v1";

constexpr std::size_t kQuoteBytes = 32 + 32 + 64;

template <std::size_t N>
FixedBytes<N> take(ByteView src, std::size_t offset)
{
    return FixedBytes<N>::from_view(src.subspan(offset, N));
}

SessionKeys derive_session_keys(const FixedBytes<32>& shared, const crypto::X25519Public& client_pub,
                                const crypto::X25519Public& enclave_pub)
{
    Bytes salt;
    append(salt, client_pub.view());
    append(salt, enclave_pub.view());

    SessionKeys keys;
    keys.client_to_enclave_key = crypto::AeadKey::from_view(
        crypto::hkdf_sha256(shared.view(), salt, as_bytes(kClientToEnclaveLabel), 32));
    keys.enclave_to_client_key = crypto::AeadKey::from_view(
        crypto::hkdf_sha256(shared.view(), salt, as_bytes(kEnclaveToClientLabel), 32));
    auto sid = crypto::hkdf_sha256(shared.view(), salt, as_bytes(kSessionIdLabel), 32);
    keys.session_id = SessionId::from_view(ByteView(sid).first(16));
    return keys;
}

const crypto::AeadKey& key_for(const SessionKeys& keys, Direction direction)
{
    return direction == Direction::client_to_enclave ? keys.client_to_enclave_key
                                                     : keys.enclave_to_client_key;
}

Bytes envelope_aad(const SessionId& session_id, Direction direction, std::uint64_t sequence)
{
    Bytes aad;
    append(aad, session_id.view());
    aad.push_back(static_cast<std::uint8_t>(direction));
    append_u64_be(aad, sequence);
    return aad;
}

crypto::AeadKey sealing_key(const Measurement& measurement, const PlatformSecret& platform_secret)
{
    return crypto::AeadKey::from_view(crypto::hkdf_sha256(
        platform_secret.view(), measurement.view(), as_bytes(kSealLabel), 32));
}

} // namespace

Bytes AttestationQuote::signed_payload() const
{
    Bytes out;
    append(out, measurement.view());
    append(out, enclave_session_pub.view());
    return out;
}

Bytes AttestationQuote::to_bytes() const
{
    Bytes out = signed_payload();
    append(out, platform_signature.view());
    return out;
}

AttestationQuote AttestationQuote::from_bytes(ByteView raw)
{
    if (raw.size() != kQuoteBytes) {
        throw Error("malformed quote");
    }
    AttestationQuote q;
    q.measurement = Measurement{take<32>(raw, 0)};
    q.enclave_session_pub = take<32>(raw, 32);
    q.platform_signature = take<64>(raw, 64);
    return q;
}

std::string_view to_string(QuoteVerdict verdict)
{
    switch (verdict) {
    case QuoteVerdict::accept: return "accept";
    case QuoteVerdict::bad_signature: return "bad_signature";
    case QuoteVerdict::wrong_measurement: return "wrong_measurement";
    }
    return "unknown";
}

Measurement compute_measurement(std::string_view code_version, const Hash32& config_digest)
{
    Bytes input = to_bytes(kMeasurementLabel);
    append(input, as_bytes(code_version));
    append(input, config_digest.view());
    return Measurement{crypto::sha256(input)};
}

crypto::Ed25519KeyPair platform_signing_key(const PlatformSecret& platform_secret)
{
    auto seed = crypto::hkdf_sha256(platform_secret.view(), {}, as_bytes(kPlatformSignLabel), 32);
    return crypto::Ed25519KeyPair::from_seed(crypto::Ed25519Seed::from_view(seed));
}

AttestationQuote generate_quote(const crypto::Ed25519KeyPair& platform_key,
                                const Measurement& measurement,
                                const crypto::X25519Public& enclave_session_pub)
{
    AttestationQuote q;
    q.measurement = measurement;
    q.enclave_session_pub = enclave_session_pub;
    q.platform_signature = platform_key.sign(q.signed_payload());
    return q;
}

QuoteVerdict verify_quote(const AttestationQuote& quote, const Measurement& expected_measurement,
                          const crypto::Ed25519Public& platform_verify_key)
{
    if (!crypto::ed25519_verify(platform_verify_key, quote.signed_payload(),
                                quote.platform_signature)) {
        return QuoteVerdict::bad_signature;
    }
    if (quote.measurement != expected_measurement) {
        return QuoteVerdict::wrong_measurement;
    }
    return QuoteVerdict::accept;
}

QuoteVerdict verify_quote_bytes(ByteView raw_quote, const Measurement& expected_measurement,
                                const crypto::Ed25519Public& platform_verify_key)
{
    if (raw_quote.size() != kQuoteBytes) {
        return QuoteVerdict::bad_signature;
    }
    return verify_quote(AttestationQuote::from_bytes(raw_quote), expected_measurement,
                        platform_verify_key);
}

SessionKeys establish_session(const crypto::X25519Secret& client_ephemeral_secret,
                              const AttestationQuote& quote)
{
    auto client = crypto::X25519KeyPair::from_secret(client_ephemeral_secret);
    auto shared = crypto::x25519(client.secret, quote.enclave_session_pub);
    if (!shared) {
        throw Error("invalid key exchange");
    }
    return derive_session_keys(*shared, client.public_key, quote.enclave_session_pub);
}

SessionKeys accept_session(const crypto::X25519Secret& enclave_ephemeral_secret,
                           const crypto::X25519Public& client_session_pub)
{
    auto enclave = crypto::X25519KeyPair::from_secret(enclave_ephemeral_secret);
    auto shared = crypto::x25519(enclave.secret, client_session_pub);
    if (!shared) {
        throw Error("invalid key exchange");
    }
    return derive_session_keys(*shared, client_session_pub, enclave.public_key);
}

crypto::AeadNonce sequence_nonce(std::uint64_t sequence)
{
    crypto::AeadNonce nonce;
    for (int i = 0; i < 8; ++i) {
        nonce.data[11 - i] = static_cast<std::uint8_t>(sequence >> (8 * i));
    }
    return nonce;
}

EncryptedEnvelope encrypt_envelope(const SessionKeys& keys, Direction direction,
                                   std::uint64_t sequence, ByteView plaintext)
{
    EncryptedEnvelope env;
    env.session_id = keys.session_id;
    env.sequence = sequence;
    env.nonce = sequence_nonce(sequence);
    env.ciphertext = crypto::aead_encrypt(key_for(keys, direction), env.nonce, plaintext,
                                          envelope_aad(keys.session_id, direction, sequence));
    return env;
}

Bytes decrypt_envelope(const SessionKeys& keys, Direction direction,
                       const EncryptedEnvelope& envelope, ReplayGuard& guard)
{
    if (!guard.fresh(envelope.sequence)) {
        throw Error("replay");
    }
    if (envelope.session_id != keys.session_id || envelope.nonce != sequence_nonce(envelope.sequence)) {
        throw Error("decrypt failed");
    }
    auto plain = crypto::aead_decrypt(key_for(keys, direction), envelope.nonce, envelope.ciphertext,
                                      envelope_aad(keys.session_id, direction, envelope.sequence));
    if (!plain) {
        throw Error("decrypt failed");
    }
    guard.accept(envelope.sequence);
    return std::move(*plain);
}

Bytes SealedBlob::to_bytes() const
{
    Bytes out;
    append(out, nonce.view());
    append(out, ciphertext);
    return out;
}

SealedBlob SealedBlob::from_bytes(ByteView raw)
{
    if (raw.size() < 12 + crypto::kAeadTagBytes) {
        throw Error("unseal failed");
    }
    SealedBlob blob;
    blob.nonce = take<12>(raw, 0);
    blob.ciphertext.assign(raw.begin() + 12, raw.end());
    return blob;
}

SealedBlob seal(ByteView data, const Measurement& measurement, const PlatformSecret& platform_secret)
{
    SealedBlob blob;
    blob.nonce = crypto::random_fixed<12>();
    blob.ciphertext =
        crypto::aead_encrypt(sealing_key(measurement, platform_secret), blob.nonce, data,
                             measurement.view());
    return blob;
}

Bytes unseal(const SealedBlob& blob, const Measurement& measurement,
             const PlatformSecret& platform_secret)
{
    auto plain = crypto::aead_decrypt(sealing_key(measurement, platform_secret), blob.nonce,
                                      blob.ciphertext, measurement.view());
    if (!plain) {
        throw Error("unseal failed");
    }
    return std::move(*plain);
}

} // namespace cct::attestation
