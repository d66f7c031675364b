#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "cct/bytes.hpp"

// Thin wrappers over libsodium. Nothing here knows about the protocol.
namespace cct::crypto {

using Sha256Digest = FixedBytes<32>;
using X25519Public = FixedBytes<32>;
using X25519Secret = FixedBytes<32>;
using Ed25519Public = FixedBytes<32>;
using Ed25519Seed = FixedBytes<32>;
using Ed25519Signature = FixedBytes<64>;
using AeadKey = FixedBytes<32>;
using AeadNonce = FixedBytes<12>;

inline constexpr std::size_t kAeadTagBytes = 16;

void ensure_initialized();

void random_fill(std::span<std::uint8_t> out);

template <std::size_t N>
FixedBytes<N> random_fixed()
{
    FixedBytes<N> out;
    random_fill(out.data);
    return out;
}

Sha256Digest sha256(ByteView data);
Sha256Digest hmac_sha256(ByteView key, ByteView message);

// RFC 5869 extract-then-expand.
Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length);

struct X25519KeyPair {
    X25519Secret secret;
    X25519Public public_key;

    static X25519KeyPair generate();
    static X25519KeyPair from_secret(const X25519Secret& secret);
};

// Returns nullopt when the peer key yields an all-zero shared secret
// (low-order point).
std::optional<FixedBytes<32>> x25519(const X25519Secret& secret, const X25519Public& peer);

class Ed25519KeyPair {
public:
    static Ed25519KeyPair generate();
    static Ed25519KeyPair from_seed(const Ed25519Seed& seed);

    const Ed25519Public& public_key() const { return public_key_; }
    const Ed25519Seed& seed() const { return seed_; }
    Ed25519Signature sign(ByteView message) const;

private:
    Ed25519Seed seed_;
    Ed25519Public public_key_;
    FixedBytes<64> secret_key_;
};

bool ed25519_verify(const Ed25519Public& key, ByteView message, const Ed25519Signature& sig);

// ChaCha20-Poly1305 (IETF). Output is ciphertext followed by the 16-byte tag.
Bytes aead_encrypt(const AeadKey& key, const AeadNonce& nonce, ByteView plaintext, ByteView aad);
std::optional<Bytes> aead_decrypt(const AeadKey& key, const AeadNonce& nonce, ByteView ciphertext,
                                  ByteView aad);

} // namespace cct::crypto
