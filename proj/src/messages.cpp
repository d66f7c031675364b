#include "cct/messages.hpp"

#include <array>

#include "cct/canonical_json.hpp"
#include "cct/codec.hpp"
#include "cct/error.hpp"

namespace cct::wire {

using namespace canonical;

namespace {

constexpr std::array<std::string_view, std::variant_size_v<Message>> kTypeNames = {
    "attest_req",  "attest_resp",       "session_req",    "session_resp",
    "report_req",  "result_req",        "result_resp",    "upload_req",
    "secret_upload_req", "poll_req",    "poll_resp",      "gps_upload_req",
    "gps_poll_req", "gps_poll_resp",    "ack",            "error",
};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Json events_to_json(const std::vector<gps::GpsContact>& events)
{
    Json arr = Json::array();
    for (const auto& e : events) {
        arr.push_back({{"t_infected", e.t_infected}, {"t_poller", e.t_poller}});
    }
    return arr;
}

Json body_of(const Message& msg)
{
    return std::visit(
        overloaded{
            [](const AttestReq&) { return Json::object(); },
            [](const AttestResp& m) {
                return Json{{"enclave_session_pub", m.quote.enclave_session_pub.hex()},
                            {"measurement", m.quote.measurement.hex()},
                            {"platform_signature", m.quote.platform_signature.hex()}};
            },
            [](const SessionReq& m) {
                return Json{{"client_session_pub", m.client_session_pub.hex()},
                            {"enclave_session_pub", m.enclave_session_pub.hex()}};
            },
            [](const SessionResp& m) { return Json{{"session_id", m.session_id.hex()}}; },
            [](const ReportReq& m) {
                return Json{{"interval", m.report.interval.value},
                            {"result", std::string(authority::to_string(m.report.result))},
                            {"signature", m.report.signature.hex()},
                            {"token_hash", m.report.token_hash.hex()}};
            },
            [](const ResultReq& m) { return Json{{"token", m.token.hex()}}; },
            [](const ResultResp& m) {
                return Json{{"result", std::string(enclave::to_string(m.result))}};
            },
            [](const UploadReq& m) {
                return Json{{"token", m.token.hex()}, {"tuples", codec::tuples_to_json(m.tuples)}};
            },
            [](const SecretUploadReq& m) {
                return Json{{"from", m.from.value},
                            {"secret", m.secret.hex()},
                            {"to", m.to.value},
                            {"token", m.token.hex()}};
            },
            [](const PollReq& m) { return Json{{"tuples", codec::tuples_to_json(m.tuples)}}; },
            [](const PollResp& m) {
                Json intervals = Json::array();
                for (auto i : m.result.matched_intervals) intervals.push_back(i.value);
                return Json{{"matched", m.result.matched}, {"matched_intervals", intervals}};
            },
            [](const GpsUploadReq& m) {
                return Json{{"token", m.token.hex()}, {"trace", codec::trace_to_json(m.trace)}};
            },
            [](const GpsPollReq& m) {
                return Json{{"d_max", m.d_max}, {"tau", m.tau}, {"trace", codec::trace_to_json(m.trace)}};
            },
            [](const GpsPollResp& m) { return Json{{"events", events_to_json(m.events)}}; },
            [](const Ack&) { return Json::object(); },
            [](const ErrorMsg& m) { return Json{{"message", m.message}}; },
        },
        msg);
}

Message body_to_message(MessageType type, const Json& b)
{
    switch (type) {
    case MessageType::attest_req:
        require_keys(b, {});
        return AttestReq{};
    case MessageType::attest_resp: {
        require_keys(b, {"enclave_session_pub", "measurement", "platform_signature"});
        AttestResp m;
        m.quote.enclave_session_pub = get_fixed<crypto::X25519Public>(b, "enclave_session_pub");
        m.quote.measurement = get_fixed<attestation::Measurement>(b, "measurement");
        m.quote.platform_signature = get_fixed<crypto::Ed25519Signature>(b, "platform_signature");
        return m;
    }
    case MessageType::session_req:
        require_keys(b, {"client_session_pub", "enclave_session_pub"});
        return SessionReq{get_fixed<crypto::X25519Public>(b, "client_session_pub"),
                          get_fixed<crypto::X25519Public>(b, "enclave_session_pub")};
    case MessageType::session_resp:
        require_keys(b, {"session_id"});
        return SessionResp{get_fixed<attestation::SessionId>(b, "session_id")};
    case MessageType::report_req: {
        require_keys(b, {"interval", "result", "signature", "token_hash"});
        ReportReq m;
        m.report.interval = ident::IntervalIndex{get_u64(b, "interval")};
        m.report.result = authority::parse_test_result(get_string(b, "result"));
        m.report.signature = get_fixed<crypto::Ed25519Signature>(b, "signature");
        m.report.token_hash = get_fixed<Hash32>(b, "token_hash");
        return m;
    }
    case MessageType::result_req:
        require_keys(b, {"token"});
        return ResultReq{get_fixed<authority::UserToken>(b, "token")};
    case MessageType::result_resp:
        require_keys(b, {"result"});
        return ResultResp{enclave::parse_poll_result(get_string(b, "result"))};
    case MessageType::upload_req:
        require_keys(b, {"token", "tuples"});
        return UploadReq{get_fixed<authority::UserToken>(b, "token"),
                         codec::tuples_from_json(get_array(b, "tuples"))};
    case MessageType::secret_upload_req:
        require_keys(b, {"from", "secret", "to", "token"});
        return SecretUploadReq{get_fixed<authority::UserToken>(b, "token"),
                               get_fixed<ident::DeviceSecret>(b, "secret"),
                               ident::IntervalIndex{get_u64(b, "from")},
                               ident::IntervalIndex{get_u64(b, "to")}};
    case MessageType::poll_req:
        require_keys(b, {"tuples"});
        return PollReq{codec::tuples_from_json(get_array(b, "tuples"))};
    case MessageType::poll_resp: {
        require_keys(b, {"matched", "matched_intervals"});
        PollResp m;
        m.result.matched = get_bool(b, "matched");
        for (const auto& i : get_array(b, "matched_intervals")) {
            if (!i.is_number_unsigned()) throw_invalid_field("matched_intervals");
            m.result.matched_intervals.push_back(ident::IntervalIndex{i.get<std::uint64_t>()});
        }
        if (m.result.matched != !m.result.matched_intervals.empty()) {
            throw_invalid_field("matched");
        }
        return m;
    }
    case MessageType::gps_upload_req:
        require_keys(b, {"token", "trace"});
        return GpsUploadReq{get_fixed<authority::UserToken>(b, "token"),
                            codec::trace_from_json(get_array(b, "trace"))};
    case MessageType::gps_poll_req:
        require_keys(b, {"d_max", "tau", "trace"});
        return GpsPollReq{codec::trace_from_json(get_array(b, "trace")), get_double(b, "d_max"),
                          get_u64(b, "tau")};
    case MessageType::gps_poll_resp: {
        require_keys(b, {"events"});
        GpsPollResp m;
        for (const auto& e : get_array(b, "events")) {
            require_keys(e, {"t_infected", "t_poller"});
            m.events.push_back({get_u64(e, "t_infected"), get_u64(e, "t_poller")});
        }
        return m;
    }
    case MessageType::ack:
        require_keys(b, {});
        return Ack{};
    case MessageType::error:
        require_keys(b, {"message"});
        return ErrorMsg{get_string(b, "message")};
    }
    throw Error("unknown message type");
}

MessageType parse_type(const std::string& name)
{
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) {
            return static_cast<MessageType>(i);
        }
    }
    throw Error("unknown message type");
}

attestation::EncryptedEnvelope envelope_from_json(const Json& e)
{
    require_keys(e, {"ciphertext", "nonce", "sequence", "session_id"});
    attestation::EncryptedEnvelope env;
    env.ciphertext = get_hex(e, "ciphertext");
    env.nonce = get_fixed<crypto::AeadNonce>(e, "nonce");
    env.sequence = get_u64(e, "sequence");
    env.session_id = get_fixed<attestation::SessionId>(e, "session_id");
    return env;
}

} // namespace

std::string_view to_string(MessageType type)
{
    return kTypeNames.at(static_cast<std::size_t>(type));
}

MessageType type_of(const Message& msg)
{
    return static_cast<MessageType>(msg.index());
}

bool is_handshake(MessageType type)
{
    switch (type) {
    case MessageType::attest_req:
    case MessageType::attest_resp:
    case MessageType::session_req:
    case MessageType::session_resp:
        return true;
    default:
        return false;
    }
}

std::string encode(const Message& msg)
{
    Json j = {{"body", body_of(msg)}, {"type", std::string(to_string(type_of(msg)))}};
    return dump(j);
}

Message decode(std::string_view raw)
{
    auto frame = decode_frame(raw);
    if (auto* msg = std::get_if<Message>(&frame)) {
        return std::move(*msg);
    }
    throw Error("unexpected envelope");
}

std::string encode_envelope(const attestation::EncryptedEnvelope& env)
{
    Json j = {{"envelope",
               {{"ciphertext", to_hex(env.ciphertext)},
                {"nonce", env.nonce.hex()},
                {"sequence", env.sequence},
                {"session_id", env.session_id.hex()}}}};
    return dump(j);
}

Frame decode_frame(std::string_view raw)
{
    auto j = parse(raw);
    if (j.is_object() && j.contains("envelope")) {
        require_keys(j, {"envelope"});
        return envelope_from_json(j["envelope"]);
    }
    require_keys(j, {"body", "type"});
    auto type = parse_type(get_string(j, "type"));
    return body_to_message(type, field(j, "body"));
}

} // namespace cct::wire
