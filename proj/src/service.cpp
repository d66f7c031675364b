#include "cct/service.hpp"

#include <sodium.h>

#include "cct/error.hpp"

namespace cct::wire {

using attestation::Direction;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

attestation::EncryptedEnvelope protect_payload(const attestation::SessionKeys& keys,
                                               Direction direction, std::uint64_t sequence,
                                               ByteView plaintext, bool insecure)
{
    if (!insecure) {
        return attestation::encrypt_envelope(keys, direction, sequence, plaintext);
    }
    attestation::EncryptedEnvelope env;
    env.session_id = keys.session_id;
    env.sequence = sequence;
    env.nonce = attestation::sequence_nonce(sequence);
    env.ciphertext.assign(plaintext.begin(), plaintext.end());
    env.ciphertext.resize(plaintext.size() + crypto::kAeadTagBytes, 0);
    return env;
}

Bytes open_payload(const attestation::SessionKeys& keys, Direction direction,
                   const attestation::EncryptedEnvelope& envelope, attestation::ReplayGuard& guard,
                   bool insecure)
{
    if (!insecure) {
        return attestation::decrypt_envelope(keys, direction, envelope, guard);
    }
    if (!guard.fresh(envelope.sequence)) {
        throw Error("replay");
    }
    if (envelope.ciphertext.size() < crypto::kAeadTagBytes) {
        throw Error("decrypt failed");
    }
    guard.accept(envelope.sequence);
    return {envelope.ciphertext.begin(), envelope.ciphertext.end() - crypto::kAeadTagBytes};
}

Service::Service(enclave::Enclave& enclave, crypto::Ed25519KeyPair platform_key,
                 ServiceOptions options)
    : enclave_(enclave), platform_key_(std::move(platform_key)), options_(options)
{
}

std::size_t Service::session_count() const
{
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

Bytes Service::handle_request(ByteView raw)
{
    std::string response;
    try {
        auto frame = decode_frame(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
        if (auto* env = std::get_if<attestation::EncryptedEnvelope>(&frame)) {
            response = handle_envelope(*env);
        } else {
            response = handle_plain(std::get<Message>(frame));
        }
    } catch (const Error& e) {
        response = encode(ErrorMsg{e.what()});
    }
    return to_bytes(response);
}

std::string Service::handle_plain(const Message& msg)
{
    if (auto* m = std::get_if<AttestReq>(&msg)) {
        (void)m;
        auto eph = crypto::X25519KeyPair::generate();
        {
            std::lock_guard lock(pending_mutex_);
            pending_.emplace(eph.public_key, eph.secret);
            pending_order_.push_back(eph.public_key);
            while (pending_order_.size() > options_.max_pending_handshakes) {
                pending_.erase(pending_order_.front());
                pending_order_.pop_front();
            }
        }
        return encode(AttestResp{
            attestation::generate_quote(platform_key_, enclave_.measurement(), eph.public_key)});
    }
    if (auto* m = std::get_if<SessionReq>(&msg)) {
        crypto::X25519Secret secret;
        {
            std::lock_guard lock(pending_mutex_);
            auto it = pending_.find(m->enclave_session_pub);
            if (it == pending_.end()) {
                throw Error("unknown handshake");
            }
            secret = it->second;
            pending_.erase(it);
            std::erase(pending_order_, m->enclave_session_pub);
        }
        auto session = std::make_shared<Session>();
        session->keys = attestation::accept_session(secret, m->client_session_pub);
        sodium_memzero(secret.data.data(), secret.data.size());
        auto id = session->keys.session_id;
        {
            std::lock_guard lock(sessions_mutex_);
            sessions_[id] = std::move(session);
        }
        return encode(SessionResp{id});
    }
    throw Error("plaintext application message refused");
}

std::string Service::handle_envelope(const attestation::EncryptedEnvelope& env)
{
    std::shared_ptr<Session> session;
    {
        std::lock_guard lock(sessions_mutex_);
        auto it = sessions_.find(env.session_id);
        if (it == sessions_.end()) {
            throw Error("unknown session");
        }
        session = it->second;
    }

    std::lock_guard lock(session->mutex);
    Bytes plain = open_payload(session->keys, Direction::client_to_enclave, env, session->inbound,
                               options_.insecure_plaintext);

    Message reply;
    try {
        auto request = decode(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
        reply = dispatch(request);
    } catch (const Error& e) {
        reply = ErrorMsg{e.what()};
    }
    sodium_memzero(plain.data(), plain.size());

    auto encoded = encode(reply);
    auto out = protect_payload(session->keys, Direction::enclave_to_client, session->next_outbound++,
                               as_bytes(encoded), options_.insecure_plaintext);
    return encode_envelope(out);
}

Message Service::dispatch(Message& request)
{
    if (is_handshake(type_of(request))) {
        throw Error("handshake message inside envelope");
    }
    return std::visit(
        overloaded{
            [&](ReportReq& m) -> Message {
                enclave_.register_test_result(m.report);
                return Ack{};
            },
            [&](ResultReq& m) -> Message { return ResultResp{enclave_.poll_test_result(m.token)}; },
            [&](UploadReq& m) -> Message {
                enclave_.upload_contact_log(m.token, m.tuples);
                return Ack{};
            },
            [&](SecretUploadReq& m) -> Message {
                try {
                    enclave_.upload_secret(m.token, m.secret, m.from, m.to);
                } catch (...) {
                    sodium_memzero(m.secret.data.data(), m.secret.data.size());
                    throw;
                }
                sodium_memzero(m.secret.data.data(), m.secret.data.size());
                return Ack{};
            },
            [&](PollReq& m) -> Message { return PollResp{enclave_.match_poll(m.tuples)}; },
            [&](GpsUploadReq& m) -> Message {
                enclave_.upload_gps_trace(m.token, m.trace);
                return Ack{};
            },
            [&](GpsPollReq& m) -> Message {
                return GpsPollResp{enclave_.match_gps(m.trace, m.d_max, m.tau)};
            },
            [](auto&) -> Message { throw Error("unsupported request"); },
        },
        request);
}

} // namespace cct::wire
