#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>

#include "cct/attestation.hpp"
#include "cct/error.hpp"
#include "oracles.hpp"

using namespace cct;
using namespace cct::attestation;

namespace {

std::string error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

struct Fixture {
    PlatformSecret platform_secret = crypto::random_fixed<32>();
    crypto::Ed25519KeyPair platform = platform_signing_key(platform_secret);
    Measurement measurement = compute_measurement("1.0", Hash32{});
    crypto::X25519KeyPair enclave_eph = crypto::X25519KeyPair::generate();
    AttestationQuote quote = generate_quote(platform, measurement, enclave_eph.public_key);
};

} // namespace

// Frozen with Python hashlib: sha256(b"CCT-MEAS-v1" + version + digest).
TEST(Measurement, PinnedVectors)
{
    EXPECT_EQ(compute_measurement("1.0", Hash32{}).hex(),
              "354798e97b9dacc0bccb47a9b8e746018a5ca35a9250b82b70d89d5428c41b1a");
    EXPECT_EQ(compute_measurement("1.1", Hash32{}).hex(),
              "73dec4b24ba41b37a2ad006c418b167af0aa0a9896dcff0dcca68c100607e3fa");
}

TEST(Measurement, MatchesOracle)
{
    Hash32 digest = crypto::random_fixed<32>();
    Bytes input = to_bytes("CCT-MEAS-v1");
    append(input, as_bytes("cct-enclave-1.0"));
    append(input, digest.view());
    EXPECT_EQ(compute_measurement("cct-enclave-1.0", digest).hex(), oracle::hex(oracle::sha256(input)));
}

TEST(Measurement, ConfigDigestChangesMeasurement)
{
    Hash32 other{};
    other.data[31] = 1;
    EXPECT_NE(compute_measurement("1.0", Hash32{}), compute_measurement("1.0", other));
}

TEST(Quote, AcceptsGenuine)
{
    Fixture f;
    EXPECT_EQ(verify_quote(f.quote, f.measurement, f.platform.public_key()), QuoteVerdict::accept);
    EXPECT_EQ(verify_quote_bytes(f.quote.to_bytes(), f.measurement, f.platform.public_key()),
              QuoteVerdict::accept);
}

TEST(Quote, ByteRoundTrip)
{
    Fixture f;
    auto raw = f.quote.to_bytes();
    ASSERT_EQ(raw.size(), 128u);
    EXPECT_EQ(AttestationQuote::from_bytes(raw), f.quote);
    EXPECT_EQ(error_of([&] { AttestationQuote::from_bytes(ByteView(raw).first(127)); }),
              "malformed quote");
}

TEST(Quote, WrongMeasurementRejected)
{
    Fixture f;
    auto other = compute_measurement("1.1", Hash32{});
    auto q = generate_quote(f.platform, other, f.enclave_eph.public_key);
    EXPECT_EQ(verify_quote(q, f.measurement, f.platform.public_key()), QuoteVerdict::wrong_measurement);
    EXPECT_EQ(to_string(QuoteVerdict::wrong_measurement), "wrong_measurement");
}

TEST(Quote, EveryByteFlipRejected)
{
    Fixture f;
    auto raw = f.quote.to_bytes();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::uint8_t mask : {0x01, 0x80, 0xff}) {
            auto tampered = raw;
            tampered[i] ^= mask;
            ASSERT_NE(verify_quote_bytes(tampered, f.measurement, f.platform.public_key()),
                      QuoteVerdict::accept)
                << "byte " << i;
        }
    }
}

TEST(Quote, ForeignPlatformKeyRejected)
{
    Fixture f;
    auto rogue = crypto::Ed25519KeyPair::generate();
    auto q = generate_quote(rogue, f.measurement, f.enclave_eph.public_key);
    EXPECT_EQ(verify_quote(q, f.measurement, f.platform.public_key()), QuoteVerdict::bad_signature);
}

TEST(Quote, SubstitutedSessionKeyRejected)
{
    Fixture f;
    auto q = f.quote;
    q.enclave_session_pub = crypto::X25519KeyPair::generate().public_key;
    EXPECT_EQ(verify_quote(q, f.measurement, f.platform.public_key()), QuoteVerdict::bad_signature);
}

TEST(Quote, PlatformKeyDerivedDeterministically)
{
    PlatformSecret s = crypto::random_fixed<32>();
    EXPECT_EQ(platform_signing_key(s).public_key(), platform_signing_key(s).public_key());
    auto seed = oracle::hkdf_sha256(Bytes(s.data.begin(), s.data.end()), {},
                                    Bytes(to_bytes("CCT-PLATFORM-SIGN-v1")), 32);
    EXPECT_EQ(platform_signing_key(s).seed().hex(), oracle::hex(seed));
}

TEST(Session, BothSidesAgree)
{
    for (int i = 0; i < 200; ++i) {
        Fixture f;
        auto client = crypto::X25519KeyPair::generate();
        auto c = establish_session(client.secret, f.quote);
        auto e = accept_session(f.enclave_eph.secret, client.public_key);
        ASSERT_EQ(c, e);
        ASSERT_NE(c.client_to_enclave_key, c.enclave_to_client_key);
    }
}

TEST(Session, KeysMatchHkdfOracle)
{
    Fixture f;
    auto client = crypto::X25519KeyPair::generate();
    auto keys = establish_session(client.secret, f.quote);
    auto shared = crypto::x25519(client.secret, f.enclave_eph.public_key);
    ASSERT_TRUE(shared);
    Bytes ikm(shared->data.begin(), shared->data.end());
    Bytes salt(client.public_key.data.begin(), client.public_key.data.end());
    salt.insert(salt.end(), f.enclave_eph.public_key.data.begin(), f.enclave_eph.public_key.data.end());
    EXPECT_EQ(keys.client_to_enclave_key.hex(),
              oracle::hex(oracle::hkdf_sha256(ikm, salt, to_bytes("CCT-C2E-v1"), 32)));
    EXPECT_EQ(keys.enclave_to_client_key.hex(),
              oracle::hex(oracle::hkdf_sha256(ikm, salt, to_bytes("CCT-E2C-v1"), 32)));
    EXPECT_EQ(keys.session_id.hex(), oracle::hex(oracle::hkdf_sha256(ikm, salt, to_bytes("CCT-SID-v1"), 16)));
}

TEST(Session, DistinctSessionsHaveDistinctIds)
{
    Fixture f;
    std::set<SessionId> ids;
    for (int i = 0; i < 500; ++i) {
        auto client = crypto::X25519KeyPair::generate();
        ASSERT_TRUE(ids.insert(establish_session(client.secret, f.quote).session_id).second);
    }
}

TEST(Session, LowOrderPeerKeyRejected)
{
    Fixture f;
    auto q = generate_quote(f.platform, f.measurement, crypto::X25519Public{});
    auto client = crypto::X25519KeyPair::generate();
    EXPECT_EQ(error_of([&] { establish_session(client.secret, q); }), "invalid key exchange");
    EXPECT_EQ(error_of([&] { accept_session(f.enclave_eph.secret, crypto::X25519Public{}); }),
              "invalid key exchange");
}

TEST(Envelope, RoundTripAndReplay)
{
    Fixture f;
    auto client = crypto::X25519KeyPair::generate();
    auto keys = establish_session(client.secret, f.quote);
    Bytes msg = to_bytes("hello enclave");
    auto env = encrypt_envelope(keys, Direction::client_to_enclave, 0, msg);
    EXPECT_EQ(env.nonce, sequence_nonce(0));
    EXPECT_EQ(env.ciphertext.size(), msg.size() + crypto::kAeadTagBytes);

    ReplayGuard guard;
    EXPECT_EQ(decrypt_envelope(keys, Direction::client_to_enclave, env, guard), msg);
    EXPECT_EQ(error_of([&] { decrypt_envelope(keys, Direction::client_to_enclave, env, guard); }),
              "replay");

    auto next = encrypt_envelope(keys, Direction::client_to_enclave, 1, msg);
    EXPECT_EQ(decrypt_envelope(keys, Direction::client_to_enclave, next, guard), msg);
    EXPECT_EQ(guard.last(), 1u);
}

TEST(Envelope, LowerSequenceRejected)
{
    Fixture f;
    auto keys = establish_session(crypto::X25519KeyPair::generate().secret, f.quote);
    ReplayGuard guard;
    auto e5 = encrypt_envelope(keys, Direction::client_to_enclave, 5, to_bytes("x"));
    auto e3 = encrypt_envelope(keys, Direction::client_to_enclave, 3, to_bytes("y"));
    decrypt_envelope(keys, Direction::client_to_enclave, e5, guard);
    EXPECT_EQ(error_of([&] { decrypt_envelope(keys, Direction::client_to_enclave, e3, guard); }), "replay");
}

TEST(Envelope, TamperingDoesNotAdvanceGuard)
{
    Fixture f;
    auto keys = establish_session(crypto::X25519KeyPair::generate().secret, f.quote);
    auto env = encrypt_envelope(keys, Direction::client_to_enclave, 0, to_bytes("payload"));
    ReplayGuard guard;
    for (std::size_t i = 0; i < env.ciphertext.size(); ++i) {
        auto bad = env;
        bad.ciphertext[i] ^= 0x01;
        ASSERT_EQ(error_of([&] { decrypt_envelope(keys, Direction::client_to_enclave, bad, guard); }),
                  "decrypt failed");
    }
    auto wrong_seq = env;
    wrong_seq.sequence = 7; // AAD binds the sequence number
    EXPECT_EQ(error_of([&] { decrypt_envelope(keys, Direction::client_to_enclave, wrong_seq, guard); }),
              "decrypt failed");
    EXPECT_FALSE(guard.last().has_value());
    EXPECT_NO_THROW(decrypt_envelope(keys, Direction::client_to_enclave, env, guard));
}

TEST(Envelope, WrongDirectionRejected)
{
    Fixture f;
    auto keys = establish_session(crypto::X25519KeyPair::generate().secret, f.quote);
    auto env = encrypt_envelope(keys, Direction::client_to_enclave, 0, to_bytes("x"));
    ReplayGuard guard;
    EXPECT_EQ(error_of([&] { decrypt_envelope(keys, Direction::enclave_to_client, env, guard); }),
              "decrypt failed");
}

TEST(Envelope, OtherSessionCannotDecrypt)
{
    Fixture f;
    auto a = establish_session(crypto::X25519KeyPair::generate().secret, f.quote);
    auto b = establish_session(crypto::X25519KeyPair::generate().secret, f.quote);
    auto env = encrypt_envelope(a, Direction::client_to_enclave, 0, to_bytes("x"));
    ReplayGuard guard;
    EXPECT_EQ(error_of([&] { decrypt_envelope(b, Direction::client_to_enclave, env, guard); }),
              "decrypt failed");
}

// Proxy for channel secrecy: across many sessions the ciphertext never
// contains the 16-byte identifier that was encrypted.
TEST(Envelope, CiphertextNeverContainsPlaintextIdentifier)
{
    Fixture f;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10'000; ++i) {
        auto keys = accept_session(f.enclave_eph.secret, crypto::X25519KeyPair::generate().public_key);
        FixedBytes<16> id;
        for (auto& b : id.data) b = static_cast<std::uint8_t>(rng());
        Bytes payload = to_bytes("{\"id\":\"");
        append(payload, id.view());
        append(payload, as_bytes(id.hex()));
        auto env = encrypt_envelope(keys, Direction::client_to_enclave, rng() % 100, payload);
        ASSERT_EQ(count_occurrences(env.ciphertext, id.view()), 0u);
        ASSERT_EQ(count_occurrences(env.ciphertext, as_bytes(id.hex())), 0u);
    }
}

TEST(Seal, RoundTrip)
{
    PlatformSecret s = crypto::random_fixed<32>();
    auto m = compute_measurement("1.0", Hash32{});
    Bytes data = to_bytes("sealed state");
    auto blob = seal(data, m, s);
    EXPECT_EQ(unseal(blob, m, s), data);
    EXPECT_EQ(unseal(SealedBlob::from_bytes(blob.to_bytes()), m, s), data);
}

TEST(Seal, OtherMeasurementCannotUnseal)
{
    PlatformSecret s = crypto::random_fixed<32>();
    auto blob = seal(to_bytes("x"), compute_measurement("1.0", Hash32{}), s);
    EXPECT_EQ(error_of([&] { unseal(blob, compute_measurement("1.1", Hash32{}), s); }), "unseal failed");
}

TEST(Seal, OtherPlatformCannotUnseal)
{
    auto m = compute_measurement("1.0", Hash32{});
    auto blob = seal(to_bytes("x"), m, crypto::random_fixed<32>());
    EXPECT_EQ(error_of([&] { unseal(blob, m, crypto::random_fixed<32>()); }), "unseal failed");
}

TEST(Seal, TamperDetected)
{
    PlatformSecret s = crypto::random_fixed<32>();
    auto m = compute_measurement("1.0", Hash32{});
    auto blob = seal(to_bytes("some state"), m, s);
    for (std::size_t i = 0; i < blob.ciphertext.size(); ++i) {
        auto bad = blob;
        bad.ciphertext[i] ^= 0x40;
        ASSERT_EQ(error_of([&] { unseal(bad, m, s); }), "unseal failed");
    }
    auto bad_nonce = blob;
    bad_nonce.nonce.data[0] ^= 1;
    EXPECT_EQ(error_of([&] { unseal(bad_nonce, m, s); }), "unseal failed");
}

TEST(Crypto, HkdfMatchesOpenSsl)
{
    std::mt19937_64 rng(3);
    auto random_bytes = [&](std::size_t n) {
        Bytes b(n);
        for (auto& x : b) x = static_cast<std::uint8_t>(rng());
        return b;
    };
    for (int i = 0; i < 300; ++i) {
        auto ikm = random_bytes(1 + rng() % 64);
        auto salt = random_bytes(rng() % 80);
        auto info = random_bytes(rng() % 40);
        std::size_t len = 1 + rng() % 200;
        ASSERT_EQ(to_hex(crypto::hkdf_sha256(ikm, salt, info, len)),
                  oracle::hex(oracle::hkdf_sha256(ikm, salt, info, len)));
    }
}

TEST(Crypto, HashAndMacMatchOpenSsl)
{
    Bytes key = to_bytes("key"), msg = to_bytes("The quick brown fox jumps over the lazy dog");
    EXPECT_EQ(crypto::hmac_sha256(key, msg).hex(), oracle::hex(oracle::hmac_sha256(key, msg)));
    EXPECT_EQ(crypto::sha256(msg).hex(), oracle::hex(oracle::sha256(msg)));
    // RFC 4231 test case 2
    EXPECT_EQ(crypto::hmac_sha256(as_bytes("Jefe"), as_bytes("what do ya want for nothing?")).hex(),
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}
