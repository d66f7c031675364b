#include "cct/client.hpp"

#include "cct/error.hpp"

namespace cct::wire {

using attestation::Direction;

namespace {

std::string_view as_text(const Bytes& b)
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

} // namespace

Client::Client(Connection& connection, attestation::Measurement expected_measurement,
               crypto::Ed25519Public platform_verify_key, ClientOptions options)
    : connection_(connection),
      expected_measurement_(expected_measurement),
      platform_verify_key_(platform_verify_key),
      options_(options)
{
}

const attestation::SessionId& Client::session_id() const
{
    if (!keys_) {
        throw Error("no session");
    }
    return keys_->session_id;
}

Message Client::exchange_plain(const Message& request)
{
    auto raw = connection_.round_trip(as_bytes(encode(request)));
    auto reply = decode(as_text(raw));
    if (auto* err = std::get_if<ErrorMsg>(&reply)) {
        throw Error(err->message);
    }
    return reply;
}

void Client::handshake()
{
    auto attest = exchange_plain(AttestReq{});
    auto* resp = std::get_if<AttestResp>(&attest);
    if (!resp) {
        throw Error("unexpected reply to attest_req");
    }
    auto verdict = attestation::verify_quote(resp->quote, expected_measurement_, platform_verify_key_);
    if (verdict != attestation::QuoteVerdict::accept) {
        throw Error("attestation failed: " + std::string(attestation::to_string(verdict)));
    }

    auto eph = crypto::X25519KeyPair::generate();
    auto keys = attestation::establish_session(eph.secret, resp->quote);
    auto session = exchange_plain(SessionReq{eph.public_key, resp->quote.enclave_session_pub});
    auto* sresp = std::get_if<SessionResp>(&session);
    if (!sresp || sresp->session_id != keys.session_id) {
        throw Error("session mismatch");
    }
    keys_ = keys;
    next_outbound_ = 0;
    inbound_ = {};
}

Message Client::call(const Message& request)
{
    if (!keys_) {
        throw Error("no session");
    }
    auto encoded = encode(request);
    auto env = protect_payload(*keys_, Direction::client_to_enclave, next_outbound_++,
                               as_bytes(encoded), options_.insecure_plaintext);
    auto raw = connection_.round_trip(as_bytes(encode_envelope(env)));
    auto frame = decode_frame(as_text(raw));
    if (auto* plain = std::get_if<Message>(&frame)) {
        // Envelope-layer failures come back unenveloped.
        if (auto* err = std::get_if<ErrorMsg>(plain)) {
            throw Error(err->message);
        }
        throw Error("plaintext reply on established session");
    }
    auto payload = open_payload(*keys_, Direction::enclave_to_client,
                                std::get<attestation::EncryptedEnvelope>(frame), inbound_,
                                options_.insecure_plaintext);
    return decode(as_text(payload));
}

template <typename Reply>
Reply Client::expect(const Message& request)
{
    auto reply = call(request);
    if (auto* err = std::get_if<ErrorMsg>(&reply)) {
        throw Error(err->message);
    }
    if (auto* r = std::get_if<Reply>(&reply)) {
        return std::move(*r);
    }
    throw Error("unexpected reply type: " + std::string(to_string(type_of(reply))));
}

void Client::report(const authority::SignedReport& report)
{
    expect<Ack>(ReportReq{report});
}

enclave::PollResult Client::poll_result(const authority::UserToken& token)
{
    return expect<ResultResp>(ResultReq{token}).result;
}

void Client::upload(const authority::UserToken& token,
                    const std::vector<contact_log::ContactTuple>& tuples)
{
    expect<Ack>(UploadReq{token, tuples});
}

void Client::upload_secret(const authority::UserToken& token, const ident::DeviceSecret& secret,
                           ident::IntervalIndex from, ident::IntervalIndex to)
{
    expect<Ack>(SecretUploadReq{token, secret, from, to});
}

enclave::MatchResult Client::poll(const std::vector<contact_log::ContactTuple>& tuples)
{
    return expect<PollResp>(PollReq{tuples}).result;
}

void Client::upload_gps(const authority::UserToken& token, const gps::GpsTrace& trace)
{
    expect<Ack>(GpsUploadReq{token, trace});
}

std::vector<gps::GpsContact> Client::poll_gps(const gps::GpsTrace& trace, double max_distance,
                                              std::uint64_t time_window)
{
    return expect<GpsPollResp>(GpsPollReq{trace, max_distance, time_window}).events;
}

} // namespace cct::wire
