#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cct/attestation.hpp"
#include "cct/authority.hpp"
#include "cct/contact_log.hpp"
#include "cct/enclave.hpp"
#include "cct/gps.hpp"

namespace cct::wire {

enum class MessageType {
    attest_req,
    attest_resp,
    session_req,
    session_resp,
    report_req,
    result_req,
    result_resp,
    upload_req,
    secret_upload_req,
    poll_req,
    poll_resp,
    gps_upload_req,
    gps_poll_req,
    gps_poll_resp,
    ack,
    error,
};

std::string_view to_string(MessageType type);

struct AttestReq {
    bool operator==(const AttestReq&) const = default;
};
struct AttestResp {
    attestation::AttestationQuote quote;
    bool operator==(const AttestResp&) const = default;
};
struct SessionReq {
    crypto::X25519Public client_session_pub;
    crypto::X25519Public enclave_session_pub;
    bool operator==(const SessionReq&) const = default;
};
struct SessionResp {
    attestation::SessionId session_id;
    bool operator==(const SessionResp&) const = default;
};
struct ReportReq {
    authority::SignedReport report;
    bool operator==(const ReportReq&) const = default;
};
struct ResultReq {
    authority::UserToken token;
    bool operator==(const ResultReq&) const = default;
};
struct ResultResp {
    enclave::PollResult result = enclave::PollResult::unknown;
    bool operator==(const ResultResp&) const = default;
};
struct UploadReq {
    authority::UserToken token;
    std::vector<contact_log::ContactTuple> tuples;
    bool operator==(const UploadReq&) const = default;
};
struct SecretUploadReq {
    authority::UserToken token;
    ident::DeviceSecret secret;
    ident::IntervalIndex from;
    ident::IntervalIndex to;
    bool operator==(const SecretUploadReq&) const = default;
};
struct PollReq {
    std::vector<contact_log::ContactTuple> tuples;
    bool operator==(const PollReq&) const = default;
};
struct PollResp {
    enclave::MatchResult result;
    bool operator==(const PollResp&) const = default;
};
struct GpsUploadReq {
    authority::UserToken token;
    gps::GpsTrace trace;
    bool operator==(const GpsUploadReq&) const = default;
};
struct GpsPollReq {
    gps::GpsTrace trace;
    double d_max = gps::kDefaultMaxDistanceMeters;
    std::uint64_t tau = gps::kDefaultTimeWindowSeconds;
    bool operator==(const GpsPollReq&) const = default;
};
struct GpsPollResp {
    std::vector<gps::GpsContact> events;
    bool operator==(const GpsPollResp&) const = default;
};
struct Ack {
    bool operator==(const Ack&) const = default;
};
struct ErrorMsg {
    std::string message;
    bool operator==(const ErrorMsg&) const = default;
};

// Alternatives are in MessageType order.
using Message = std::variant<AttestReq, AttestResp, SessionReq, SessionResp, ReportReq, ResultReq,
                             ResultResp, UploadReq, SecretUploadReq, PollReq, PollResp,
                             GpsUploadReq, GpsPollReq, GpsPollResp, Ack, ErrorMsg>;

MessageType type_of(const Message& msg);

// attest_* and session_* travel in plaintext; everything else is an
// application message and must be enveloped.
bool is_handshake(MessageType type);

// {"body":{...},"type":"<name>"} in canonical form.
std::string encode(const Message& msg);
// Throws "unknown message type", "missing field: x", "non-canonical", ...
Message decode(std::string_view raw);

// {"envelope":{"ciphertext":..,"nonce":..,"sequence":..,"session_id":..}}
std::string encode_envelope(const attestation::EncryptedEnvelope& env);

// A frame on the wire is either a plaintext message or an envelope.
using Frame = std::variant<Message, attestation::EncryptedEnvelope>;
Frame decode_frame(std::string_view raw);

} // namespace cct::wire
