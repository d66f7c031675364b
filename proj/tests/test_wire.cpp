#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "cct/client.hpp"
#include "cct/error.hpp"
#include "cct/messages.hpp"
#include "cct/service.hpp"
#include "cct/transport.hpp"

using namespace cct;
using namespace cct::wire;
using authority::HealthAuthorityCredential;
using contact_log::ContactTuple;
using ident::IntervalIndex;
using ident::RandomIdentifier;

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

template <std::size_t N>
FixedBytes<N> pattern(std::uint8_t seed)
{
    FixedBytes<N> b;
    for (std::size_t i = 0; i < N; ++i) b.data[i] = static_cast<std::uint8_t>(seed + 3 * i);
    return b;
}

std::vector<Message> one_of_each()
{
    attestation::AttestationQuote quote{attestation::Measurement{pattern<32>(1)}, pattern<32>(2),
                                        pattern<64>(3)};
    authority::SignedReport report{pattern<32>(4), authority::TestResult::positive, IntervalIndex{17},
                                   pattern<64>(5)};
    std::vector<ContactTuple> tuples{
        {RandomIdentifier{pattern<16>(6)}, RandomIdentifier{pattern<16>(7)}, IntervalIndex{0}},
        {RandomIdentifier{pattern<16>(8)}, RandomIdentifier{pattern<16>(9)}, IntervalIndex{4032}}};
    gps::GpsTrace trace{{48.2082, 16.3738, 100}, {-33.8688, 151.2093, 200}};
    authority::UserToken token{pattern<32>(10)};
    return {
        AttestReq{},
        AttestResp{quote},
        SessionReq{pattern<32>(11), pattern<32>(12)},
        SessionResp{pattern<16>(13)},
        ReportReq{report},
        ResultReq{token},
        ResultResp{enclave::PollResult::negative},
        UploadReq{token, tuples},
        SecretUploadReq{token, ident::DeviceSecret{pattern<32>(14)}, IntervalIndex{1}, IntervalIndex{9}},
        PollReq{tuples},
        PollResp{enclave::MatchResult{true, {IntervalIndex{0}, IntervalIndex{4}}}},
        GpsUploadReq{token, trace},
        GpsPollReq{trace, 12.5, 600},
        GpsPollResp{{{100, 110}, {200, 190}}},
        Ack{},
        ErrorMsg{"upload already used"},
    };
}

struct Backend {
    HealthAuthorityCredential ha = HealthAuthorityCredential::generate();
    attestation::PlatformSecret platform = crypto::random_fixed<32>();
    crypto::Ed25519KeyPair platform_key = attestation::platform_signing_key(platform);
    std::unique_ptr<enclave::Enclave> enclave;
    std::unique_ptr<Service> service;

    explicit Backend(ServiceOptions options = {})
    {
        enclave::EnclaveConfig config;
        config.ha_verify_key = ha.verify_key();
        enclave = std::make_unique<enclave::Enclave>(config, platform,
                                                     std::make_unique<enclave::MemorySealedStorage>(),
                                                     [] { return std::uint64_t{900}; });
        service = std::make_unique<Service>(*enclave, platform_key, options);
    }

    Message send_plain(const Message& m)
    {
        auto reply = service->handle_request(as_bytes(encode(m)));
        return decode(std::string_view(reinterpret_cast<const char*>(reply.data()), reply.size()));
    }
};

RandomIdentifier rid(std::uint8_t tag)
{
    return RandomIdentifier{pattern<16>(tag)};
}

} // namespace

TEST(Codec, RoundTripEveryType)
{
    auto messages = one_of_each();
    ASSERT_EQ(messages.size(), 16u);
    for (std::size_t i = 0; i < messages.size(); ++i) {
        EXPECT_EQ(static_cast<std::size_t>(type_of(messages[i])), i);
        auto encoded = encode(messages[i]);
        EXPECT_EQ(decode(encoded), messages[i]) << encoded;
        EXPECT_EQ(encode(messages[i]), encoded);
    }
}

TEST(Codec, ExactShape)
{
    EXPECT_EQ(encode(AttestReq{}), "{\"body\":{},\"type\":\"attest_req\"}");
    EXPECT_EQ(encode(ErrorMsg{"x"}), "{\"body\":{\"message\":\"x\"},\"type\":\"error\"}");
    EXPECT_EQ(encode(ResultResp{enclave::PollResult::positive}),
              "{\"body\":{\"result\":\"positive\"},\"type\":\"result_resp\"}");
}

TEST(Codec, ReorderedKeysAreNonCanonical)
{
    EXPECT_EQ(error_of([] { decode("{\"type\":\"attest_req\",\"body\":{}}"); }), "non-canonical");
    EXPECT_EQ(error_of([] { decode("{\"body\": {},\"type\":\"attest_req\"}"); }), "non-canonical");
    auto upload = encode(UploadReq{authority::UserToken{pattern<32>(1)},
                                   {{rid(1), rid(2), IntervalIndex{3}}}});
    auto pos = upload.find("\"interval\":3,\"received\"");
    ASSERT_NE(pos, std::string::npos);
    std::string swapped = upload;
    swapped.replace(pos, std::string("\"interval\":3,").size(), "");
    auto close = swapped.find('}', pos);
    swapped.insert(close, ",\"interval\":3");
    EXPECT_EQ(error_of([&] { decode(swapped); }), "non-canonical");
}

TEST(Codec, MalformedInputsRejected)
{
    EXPECT_EQ(error_of([] { decode("{\"body\":{},\"type\":\"bogus\"}"); }), "unknown message type");
    EXPECT_EQ(error_of([] { decode("{\"body\":{},\"type\":\"error\"}"); }), "missing field: message");
    EXPECT_EQ(error_of([] { decode("{\"body\":{\"message\":\"x\",\"z\":1},\"type\":\"error\"}"); }),
              "unexpected field: z");
    EXPECT_EQ(error_of([] { decode("not json"); }), "malformed json");
    EXPECT_THROW(decode("{\"body\":{\"token\":\"ABCD\"},\"type\":\"result_req\"}"), Error);
    EXPECT_THROW(decode("{\"body\":{\"token\":\"00\"},\"type\":\"result_req\"}"), Error);
    EXPECT_THROW(decode("{\"body\":{\"result\":\"maybe\"},\"type\":\"result_resp\"}"), Error);
}

TEST(Codec, EnvelopeFrames)
{
    attestation::EncryptedEnvelope env{pattern<16>(1), 42, attestation::sequence_nonce(42), {1, 2, 3}};
    auto text = encode_envelope(env);
    auto frame = decode_frame(text);
    ASSERT_TRUE(std::holds_alternative<attestation::EncryptedEnvelope>(frame));
    EXPECT_EQ(std::get<attestation::EncryptedEnvelope>(frame), env);
    EXPECT_EQ(error_of([&] { decode(text); }), "unexpected envelope");
    EXPECT_TRUE(std::holds_alternative<Message>(decode_frame(encode(Ack{}))));
}

// Random corpus over small value domains so near-duplicates are common.
TEST(Codec, InjectiveOnRandomCorpus)
{
    std::mt19937_64 rng(77);
    auto small_id = [&] {
        RandomIdentifier r;
        r.data[15] = static_cast<std::uint8_t>(rng() % 3);
        return r;
    };
    auto small_token = [&] {
        authority::UserToken t;
        t.data[0] = static_cast<std::uint8_t>(rng() % 3);
        return t;
    };
    auto tuples = [&] {
        std::vector<ContactTuple> out(rng() % 3);
        for (auto& t : out) t = {small_id(), small_id(), IntervalIndex{rng() % 3}};
        return out;
    };
    auto trace = [&] {
        gps::GpsTrace out;
        for (std::uint64_t k = 0, n = rng() % 3; k < n; ++k)
            out.push_back({static_cast<double>(rng() % 3) * 0.5, static_cast<double>(rng() % 3), k});
        return out;
    };
    std::map<std::string, Message> seen;
    for (int i = 0; i < 20000; ++i) {
        Message m;
        switch (rng() % 9) {
        case 0: m = ResultReq{small_token()}; break;
        case 1: m = UploadReq{small_token(), tuples()}; break;
        case 2: m = PollReq{tuples()}; break;
        case 3: {
            std::vector<IntervalIndex> iv;
            for (std::uint64_t k = 0, n = rng() % 3; k < n; ++k) iv.push_back(IntervalIndex{2 * k + rng() % 2});
            m = PollResp{enclave::MatchResult{!iv.empty(), iv}};
            break;
        }
        case 4: m = ErrorMsg{std::string(rng() % 3, static_cast<char>('a' + rng() % 2))}; break;
        case 5: m = GpsUploadReq{small_token(), trace()}; break;
        case 6: m = GpsPollReq{trace(), static_cast<double>(rng() % 3), rng() % 3}; break;
        case 7:
            m = SecretUploadReq{small_token(), ident::DeviceSecret{}, IntervalIndex{rng() % 3},
                                IntervalIndex{rng() % 3}};
            break;
        default: m = ResultResp{static_cast<enclave::PollResult>(rng() % 3)}; break;
        }
        auto encoded = encode(m);
        auto [it, inserted] = seen.emplace(encoded, m);
        ASSERT_TRUE(inserted || it->second == m) << encoded;
        ASSERT_EQ(decode(encoded), m);
    }
}

TEST(Framing, LengthPrefix)
{
    Bytes body = to_bytes("hello");
    auto frame = encode_frame(body);
    ASSERT_EQ(frame.size(), 9u);
    EXPECT_EQ(to_hex(ByteView(frame).first(4)), "00000005");

    Bytes buffer(frame.begin(), frame.begin() + 6);
    EXPECT_FALSE(try_decode_frame(buffer).has_value());
    buffer.insert(buffer.end(), frame.begin() + 6, frame.end());
    append(buffer, encode_frame(to_bytes("x")));
    EXPECT_EQ(try_decode_frame(buffer), body);
    EXPECT_EQ(try_decode_frame(buffer), to_bytes("x"));
    EXPECT_TRUE(buffer.empty());

    Bytes huge{0x01, 0x00, 0x00, 0x01};
    EXPECT_EQ(error_of([&] { try_decode_frame(huge); }), "frame too large");
}

TEST(Service, FullHappyPath)
{
    Backend b;
    InProcessConnection raw(*b.service);
    Transcript transcript;
    RecordingConnection conn(raw, transcript);

    Client ha_client(conn, b.enclave->measurement(), b.platform_key.public_key());
    ha_client.handshake();
    Client device_c(conn, b.enclave->measurement(), b.platform_key.public_key());
    device_c.handshake();
    Client device_a(conn, b.enclave->measurement(), b.platform_key.public_key());
    device_a.handshake();
    EXPECT_EQ(b.service->session_count(), 3u);

    auto token = authority::issue_test_token();
    ha_client.report(authority::sign_report(b.ha, authority::token_hash(token),
                                            authority::TestResult::positive, IntervalIndex{1}));
    EXPECT_EQ(device_c.poll_result(token), enclave::PollResult::positive);
    device_c.upload(token, {{rid('c'), rid('a'), IntervalIndex{0}}});
    auto result = device_a.poll({{rid('a'), rid('c'), IntervalIndex{0}}});
    EXPECT_TRUE(result.matched);
    EXPECT_EQ(result.matched_intervals, std::vector<IntervalIndex>{IntervalIndex{0}});
    EXPECT_EQ(error_of([&] { device_c.upload(token, {}); }), "upload already used");

    // Every post-handshake frame in the transcript is an envelope.
    std::size_t envelopes = 0;
    for (const auto& e : transcript.entries()) {
        auto frame = decode_frame(std::string_view(reinterpret_cast<const char*>(e.bytes.data()), e.bytes.size()));
        if (auto* m = std::get_if<Message>(&frame)) {
            EXPECT_TRUE(is_handshake(type_of(*m)));
        } else {
            ++envelopes;
        }
        EXPECT_EQ(count_occurrences(e.bytes, as_bytes(rid('c').hex())), 0u);
        EXPECT_EQ(count_occurrences(e.bytes, as_bytes(token.hex())), 0u);
    }
    EXPECT_EQ(envelopes, 10u);
}

TEST(Service, PlaintextApplicationMessageRefused)
{
    Backend b;
    auto digest = b.enclave->state_digest();
    auto token = authority::issue_test_token();
    auto report = authority::sign_report(b.ha, authority::token_hash(token), authority::TestResult::positive,
                                         IntervalIndex{0});
    EXPECT_EQ(b.send_plain(ReportReq{report}), Message{ErrorMsg{"plaintext application message refused"}});
    EXPECT_EQ(b.send_plain(PollReq{}), Message{ErrorMsg{"plaintext application message refused"}});
    EXPECT_EQ(b.enclave->state_digest(), digest);
    EXPECT_EQ(b.enclave->poll_test_result(token), enclave::PollResult::unknown);
}

TEST(Service, UnknownSessionRefused)
{
    Backend b;
    attestation::EncryptedEnvelope env{pattern<16>(99), 0, attestation::sequence_nonce(0), Bytes(32, 0)};
    auto reply = b.service->handle_request(as_bytes(encode_envelope(env)));
    EXPECT_EQ(decode(std::string_view(reinterpret_cast<const char*>(reply.data()), reply.size())),
              Message{ErrorMsg{"unknown session"}});
}

TEST(Service, UnknownHandshakeKeyRefused)
{
    Backend b;
    EXPECT_EQ(b.send_plain(SessionReq{crypto::X25519KeyPair::generate().public_key, pattern<32>(5)}),
              Message{ErrorMsg{"unknown handshake"}});
}

TEST(Service, ReplayedEnvelopeRefused)
{
    Backend b;
    auto attest = std::get<AttestResp>(b.send_plain(AttestReq{}));
    auto client = crypto::X25519KeyPair::generate();
    auto keys = attestation::establish_session(client.secret, attest.quote);
    auto resp = b.send_plain(SessionReq{client.public_key, attest.quote.enclave_session_pub});
    ASSERT_EQ(std::get<SessionResp>(resp).session_id, keys.session_id);

    auto env = attestation::encrypt_envelope(keys, attestation::Direction::client_to_enclave, 0,
                                             as_bytes(encode(PollReq{})));
    auto wire = encode_envelope(env);
    auto first = b.service->handle_request(as_bytes(wire));
    EXPECT_TRUE(std::holds_alternative<attestation::EncryptedEnvelope>(
        decode_frame(std::string_view(reinterpret_cast<const char*>(first.data()), first.size()))));
    auto second = b.service->handle_request(as_bytes(wire));
    EXPECT_EQ(decode(std::string_view(reinterpret_cast<const char*>(second.data()), second.size())),
              Message{ErrorMsg{"replay"}});
}

TEST(Client, RejectsWrongMeasurementOrPlatformKey)
{
    Backend b;
    InProcessConnection conn(*b.service);
    Client wrong_measurement(conn, attestation::compute_measurement("other", Hash32{}),
                             b.platform_key.public_key());
    EXPECT_EQ(error_of([&] { wrong_measurement.handshake(); }), "attestation failed: wrong_measurement");
    EXPECT_FALSE(wrong_measurement.connected());
    EXPECT_EQ(error_of([&] { wrong_measurement.poll({}); }), "no session");

    Client wrong_key(conn, b.enclave->measurement(), crypto::Ed25519KeyPair::generate().public_key());
    EXPECT_EQ(error_of([&] { wrong_key.handshake(); }), "attestation failed: bad_signature");
    EXPECT_EQ(b.service->session_count(), 0u);
}

TEST(Client, InsecureControlLeaksPlaintext)
{
    ServiceOptions options;
    options.insecure_plaintext = true;
    Backend b(options);
    InProcessConnection raw(*b.service);
    Transcript transcript;
    RecordingConnection conn(raw, transcript);
    Client client(conn, b.enclave->measurement(), b.platform_key.public_key(), ClientOptions{true});
    client.handshake();
    std::vector<ContactTuple> tuples{{rid('a'), rid('c'), IntervalIndex{0}}};
    client.poll(tuples);
    // The envelope carries the encoded request as hex instead of ciphertext.
    auto needle = to_hex(as_bytes(encode(PollReq{tuples})));
    std::size_t hits = 0;
    for (const auto& e : transcript.entries()) hits += count_occurrences(e.bytes, as_bytes(needle));
    EXPECT_EQ(hits, 1u);
}

TEST(Tcp, ConcurrentClientsOverLoopback)
{
    Backend b;
    TcpServer server(*b.service, Endpoint{"127.0.0.1", 0});
    ASSERT_NE(server.port(), 0);
    auto token = authority::issue_test_token();
    {
        TcpConnection conn(Endpoint{"127.0.0.1", server.port()});
        Client c(conn, b.enclave->measurement(), b.platform_key.public_key());
        c.handshake();
        c.report(authority::sign_report(b.ha, authority::token_hash(token), authority::TestResult::positive,
                                        IntervalIndex{1}));
        c.upload(token, {{rid('c'), rid('a'), IntervalIndex{0}}});
    }
    std::atomic<int> matched{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            TcpConnection conn(Endpoint{"127.0.0.1", server.port()});
            Client c(conn, b.enclave->measurement(), b.platform_key.public_key());
            c.handshake();
            for (int i = 0; i < 20; ++i) {
                if (c.poll({{rid('a'), rid('c'), IntervalIndex{0}}}).matched) ++matched;
            }
        });
    }
    for (auto& t : threads) t.join();
    server.stop();
    EXPECT_EQ(matched.load(), 120);
}

TEST(Endpoint, Parse)
{
    auto e = Endpoint::parse("0.0.0.0:8080");
    EXPECT_EQ(e.host, "0.0.0.0");
    EXPECT_EQ(e.port, 8080);
    EXPECT_THROW(Endpoint::parse("nohost"), Error);
    EXPECT_THROW(Endpoint::parse("h:99999"), Error);
}
