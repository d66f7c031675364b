#include "cct/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

namespace cct::crypto {

void ensure_initialized()
{
    static const bool ok = sodium_init() >= 0;
    if (!ok) {
        throw std::runtime_error("libsodium initialization failed");
    }
}

void random_fill(std::span<std::uint8_t> out)
{
    ensure_initialized();
    randombytes_buf(out.data(), out.size());
}

Sha256Digest sha256(ByteView data)
{
    ensure_initialized();
    Sha256Digest out;
    crypto_hash_sha256(out.data.data(), data.data(), data.size());
    return out;
}

Sha256Digest hmac_sha256(ByteView key, ByteView message)
{
    ensure_initialized();
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, message.data(), message.size());
    Sha256Digest out;
    crypto_auth_hmacsha256_final(&st, out.data.data());
    return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length)
{
    if (length > 255 * 32) {
        throw std::invalid_argument("hkdf output too long");
    }
    Bytes zero_salt(32, 0);
    auto prk = hmac_sha256(salt.empty() ? ByteView(zero_salt) : salt, ikm);

    Bytes out;
    out.reserve(length);
    Bytes block;
    for (std::uint8_t counter = 1; out.size() < length; ++counter) {
        Bytes msg = block;
        append(msg, info);
        msg.push_back(counter);
        auto t = hmac_sha256(prk.view(), msg);
        block.assign(t.data.begin(), t.data.end());
        std::size_t take = std::min<std::size_t>(32, length - out.size());
        out.insert(out.end(), block.begin(), block.begin() + static_cast<std::ptrdiff_t>(take));
    }
    sodium_memzero(prk.data.data(), prk.data.size());
    return out;
}

X25519KeyPair X25519KeyPair::generate()
{
    return from_secret(random_fixed<32>());
}

X25519KeyPair X25519KeyPair::from_secret(const X25519Secret& secret)
{
    ensure_initialized();
    X25519KeyPair kp;
    kp.secret = secret;
    crypto_scalarmult_base(kp.public_key.data.data(), secret.data.data());
    return kp;
}

std::optional<FixedBytes<32>> x25519(const X25519Secret& secret, const X25519Public& peer)
{
    ensure_initialized();
    FixedBytes<32> shared;
    if (crypto_scalarmult(shared.data.data(), secret.data.data(), peer.data.data()) != 0) {
        return std::nullopt;
    }
    return shared;
}

Ed25519KeyPair Ed25519KeyPair::generate()
{
    return from_seed(random_fixed<32>());
}

Ed25519KeyPair Ed25519KeyPair::from_seed(const Ed25519Seed& seed)
{
    ensure_initialized();
    Ed25519KeyPair kp;
    kp.seed_ = seed;
    crypto_sign_seed_keypair(kp.public_key_.data.data(), kp.secret_key_.data.data(),
                             seed.data.data());
    return kp;
}

Ed25519Signature Ed25519KeyPair::sign(ByteView message) const
{
    Ed25519Signature sig;
    crypto_sign_detached(sig.data.data(), nullptr, message.data(), message.size(),
                         secret_key_.data.data());
    return sig;
}

bool ed25519_verify(const Ed25519Public& key, ByteView message, const Ed25519Signature& sig)
{
    ensure_initialized();
    return crypto_sign_verify_detached(sig.data.data(), message.data(), message.size(),
                                       key.data.data()) == 0;
}

Bytes aead_encrypt(const AeadKey& key, const AeadNonce& nonce, ByteView plaintext, ByteView aad)
{
    ensure_initialized();
    Bytes out(plaintext.size() + kAeadTagBytes);
    unsigned long long out_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &out_len, plaintext.data(),
                                              plaintext.size(), aad.data(), aad.size(), nullptr,
                                              nonce.data.data(), key.data.data());
    out.resize(out_len);
    return out;
}

std::optional<Bytes> aead_decrypt(const AeadKey& key, const AeadNonce& nonce, ByteView ciphertext,
                                  ByteView aad)
{
    ensure_initialized();
    if (ciphertext.size() < kAeadTagBytes) {
        return std::nullopt;
    }
    Bytes out(ciphertext.size() - kAeadTagBytes);
    unsigned long long out_len = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &out_len, nullptr, ciphertext.data(),
                                                  ciphertext.size(), aad.data(), aad.size(),
                                                  nonce.data.data(), key.data.data()) != 0) {
        return std::nullopt;
    }
    out.resize(out_len);
    return out;
}

} // namespace cct::crypto
