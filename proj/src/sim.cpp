#include "cct/sim.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <optional>
#include <string_view>
#include <thread>
#include <unordered_set>

#include "cct/authority.hpp"
#include "cct/canonical_json.hpp"
#include "cct/error.hpp"

namespace cct::sim {

using canonical::Json;
using contact_log::ContactLog;
using contact_log::ContactTuple;
using ident::IntervalIndex;

std::set<std::uint32_t> SimReport::notified_devices() const
{
    std::set<std::uint32_t> out;
    for (const auto& [device, _] : notified) out.insert(device);
    return out;
}

bool SimReport::passed() const
{
    return notified_devices() == oracle_notified && transcript_leaks == 0 &&
           boundary_violations == 0 && state_digest_violations == 0 && auth_violations == 0;
}

std::string SimReport::to_json() const
{
    Json notified_json = Json::array();
    for (const auto& [device, intervals] : notified) {
        Json iv = Json::array();
        for (auto i : intervals) iv.push_back(i.value);
        notified_json.push_back({{"device", device}, {"intervals", iv}});
    }
    Json j = {
        {"auth_violations", auth_violations},
        {"boundary_violations", boundary_violations},
        {"encounters", encounters},
        {"notified", notified_json},
        {"oracle_notified", oracle_notified},
        {"passed", passed()},
        {"state_digest_violations", state_digest_violations},
        {"transcript_leaks", transcript_leaks},
    };
    return canonical::dump(j);
}

std::set<std::uint32_t> oracle_notified(const ScenarioConfig& config,
                                        const std::vector<EncounterEvent>& encounters)
{
    std::map<std::uint32_t, std::uint64_t> uploader_test;
    for (const auto& inf : config.infected) {
        if (inf.uploads) uploader_test[inf.device] = inf.test_interval;
    }
    const auto polls = poll_intervals(config);
    const std::uint64_t r = config.retention;

    std::set<std::uint32_t> notified;
    auto consider = [&](std::uint32_t device, std::uint32_t other, std::uint64_t t) {
        auto it = uploader_test.find(other);
        if (it == uploader_test.end()) return;
        const std::uint64_t test = it->second;
        if (t > test || t + r < test) return;
        for (std::uint64_t p : polls) {
            if (test <= p && t + r >= p && test + r >= p) {
                notified.insert(device);
                return;
            }
        }
    };
    for (const auto& e : encounters) {
        consider(e.device_i, e.device_j, e.interval.value);
        consider(e.device_j, e.device_i, e.interval.value);
    }
    return notified;
}

namespace {

std::string_view text_of(const Bytes& b)
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

void collect_hex_views(const Json& j, std::vector<Bytes>& out)
{
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (!s.empty()) {
            try {
                out.push_back(from_hex(s));
            } catch (const Error&) {
            }
        }
    } else if (j.is_structured()) {
        for (const auto& item : j) collect_hex_views(item, out);
    }
}

struct NeedleSet {
    std::size_t width = 0;
    std::unordered_set<std::string_view> needles;

    std::size_t count_in(std::string_view hay) const
    {
        if (width == 0 || needles.empty() || hay.size() < width) return 0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i + width <= hay.size(); ++i) {
            if (needles.count(hay.substr(i, width))) ++hits;
        }
        return hits;
    }
};

} // namespace

std::size_t audit_transcript(const std::vector<wire::TranscriptEntry>& transcript,
                             std::span<const ident::RandomIdentifier> identifiers,
                             std::span<const ident::DeviceSecret> secrets)
{
    // Backing storage for the string_view needles.
    std::vector<std::string> storage;
    storage.reserve(2 * (identifiers.size() + secrets.size()));
    auto add = [&](NeedleSet& set, std::string value) {
        storage.push_back(std::move(value));
        set.needles.insert(storage.back());
    };

    NeedleSet raw16{16, {}}, hex32{32, {}}, raw32{32, {}}, hex64{64, {}};
    for (const auto& id : identifiers) {
        add(raw16, std::string(text_of(Bytes(id.data.begin(), id.data.end()))));
        add(hex32, id.hex());
    }
    for (const auto& s : secrets) {
        add(raw32, std::string(text_of(Bytes(s.data.begin(), s.data.end()))));
        add(hex64, s.hex());
    }

    std::size_t leaks = 0;
    for (const auto& entry : transcript) {
        std::vector<Bytes> views{entry.bytes};
        try {
            auto frame = wire::decode_frame(text_of(entry.bytes));
            if (auto* msg = std::get_if<wire::Message>(&frame);
                msg && wire::is_handshake(wire::type_of(*msg))) {
                continue;
            }
            collect_hex_views(canonical::parse(text_of(entry.bytes)), views);
        } catch (const Error&) {
            // Undecodable bytes are still scanned raw.
        }
        for (const auto& v : views) {
            auto hay = text_of(v);
            leaks += raw16.count_in(hay) + hex32.count_in(hay) + raw32.count_in(hay) +
                     hex64.count_in(hay);
        }
    }
    return leaks;
}

std::size_t count_plaintext_application_messages(const std::vector<wire::TranscriptEntry>& transcript)
{
    std::size_t count = 0;
    for (const auto& entry : transcript) {
        bool from_backend = entry.direction == wire::TranscriptDirection::from_backend;
        try {
            auto frame = wire::decode_frame(text_of(entry.bytes));
            auto* msg = std::get_if<wire::Message>(&frame);
            if (!msg || wire::is_handshake(wire::type_of(*msg))) continue;
            // Envelope-layer refusals are the only plaintext the backend sends.
            if (from_backend && wire::type_of(*msg) == wire::MessageType::error) continue;
            ++count;
        } catch (const Error&) {
            ++count;
        }
    }
    return count;
}

std::size_t audit_flush(const enclave::Enclave& backend, wire::Client& client,
                        const std::vector<std::vector<ContactTuple>>& workload)
{
    std::size_t violations = 0;
    for (const auto& poll : workload) {
        auto before = backend.state_digest();
        client.poll(poll);
        if (backend.state_digest() != before) ++violations;
    }
    return violations;
}

std::vector<std::vector<ContactTuple>> random_poll_workload(std::size_t polls, std::uint64_t seed,
                                                            std::span<const ContactTuple> known)
{
    Xoshiro256 rng(seed);
    auto random_id = [&] {
        ident::RandomIdentifier id;
        for (std::size_t i = 0; i < id.data.size(); i += 8) {
            std::uint64_t v = rng.next();
            for (std::size_t b = 0; b < 8; ++b) id.data[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
        }
        return id;
    };

    std::vector<std::vector<ContactTuple>> out(polls);
    for (auto& poll : out) {
        std::size_t n = 1 + rng.next() % 8;
        for (std::size_t k = 0; k < n; ++k) {
            if (!known.empty() && rng.next() % 2 == 0) {
                const auto& t = known[rng.next() % known.size()];
                poll.push_back({t.received, t.sent, t.interval});
            } else {
                poll.push_back({random_id(), random_id(), IntervalIndex{rng.next() % 1000}});
            }
        }
    }
    return out;
}

namespace {

struct Device {
    ident::DeviceSecret secret;
    ContactLog log;
    std::unique_ptr<wire::Connection> transport;
    std::unique_ptr<wire::RecordingConnection> recorded;
    std::unique_ptr<wire::Client> client;
};

class Simulation {
public:
    Simulation(const ScenarioConfig& config, const SimOptions& options)
        : config_(config), options_(options)
    {
        config_.validate();
        platform_secret_ = crypto::random_fixed<32>();
        ha_ = std::make_unique<authority::HealthAuthorityCredential>(
            authority::HealthAuthorityCredential::generate());

        enclave::EnclaveConfig ec;
        ec.time = ident::TimeParams{0, config_.delta_t};
        ec.retention_intervals = config_.retention;
        ec.strict_intervals = config_.strict_intervals;
        ec.log_polls = options_.log_polls;
        ec.ha_verify_key = ha_->verify_key();
        expected_measurement_ = ec.measurement();

        auto clock_state = clock_;
        enclave_ = std::make_unique<enclave::Enclave>(
            ec, platform_secret_, std::make_unique<enclave::MemorySealedStorage>(),
            [clock_state] { return clock_state->load(); });
        auto platform_key = attestation::platform_signing_key(platform_secret_);
        platform_verify_key_ = platform_key.public_key();
        service_ = std::make_unique<wire::Service>(*enclave_, platform_key,
                                                   wire::ServiceOptions{options_.insecure_plaintext});
        if (options_.use_tcp) {
            server_ = std::make_unique<wire::TcpServer>(*service_, wire::Endpoint{"127.0.0.1", 0});
        }

        devices_.resize(config_.n_devices);
        for (auto& d : devices_) {
            d.secret = ident::DeviceSecret::generate();
            d.log = ContactLog(config_.retention);
        }
    }

    SimReport run()
    {
        SimReport report;
        auto encounters = generate_encounters(config_);
        report.encounters = encounters.size();
        report.oracle_notified = oracle_notified(config_, encounters);

        auto polls = poll_intervals(config_);
        std::size_t next_encounter = 0;
        for (std::uint64_t t = 0; t < config_.n_intervals; ++t) {
            set_interval(t);
            IntervalIndex now{t};
            for (; next_encounter < encounters.size() && encounters[next_encounter].interval == now;
                 ++next_encounter) {
                record(encounters[next_encounter]);
            }
            for (const auto& inf : config_.infected) {
                if (inf.test_interval == t) test_and_upload(inf, report);
            }
            if (std::binary_search(polls.begin(), polls.end(), t)) {
                poll_round(now, report);
            }
        }

        rogue_actions(report);
        flush_audit(report);

        auto transcript = transcript_.entries();
        std::vector<ident::RandomIdentifier> ids;
        std::vector<ident::DeviceSecret> secrets;
        ids.reserve(devices_.size() * config_.n_intervals);
        for (const auto& d : devices_) {
            secrets.push_back(d.secret);
            for (std::uint64_t t = 0; t < config_.n_intervals; ++t) {
                ids.push_back(ident::derive_identifier(d.secret, IntervalIndex{t}));
            }
        }
        report.transcript_leaks = audit_transcript(transcript, ids, secrets);
        report.boundary_violations = count_plaintext_application_messages(transcript);

        if (server_) server_->stop();
        return report;
    }

private:
    void set_interval(std::uint64_t t) { clock_->store(t * config_.delta_t); }

    std::unique_ptr<wire::Connection> raw_connection()
    {
        if (server_) {
            return std::make_unique<wire::TcpConnection>(wire::Endpoint{"127.0.0.1", server_->port()});
        }
        return std::make_unique<wire::InProcessConnection>(*service_);
    }

    wire::Client make_client(wire::Connection& connection)
    {
        wire::Client c(connection, expected_measurement_, platform_verify_key_,
                       wire::ClientOptions{options_.insecure_plaintext});
        c.handshake();
        return c;
    }

    wire::Client& device_client(Device& d)
    {
        if (!d.client) {
            d.transport = raw_connection();
            d.recorded = std::make_unique<wire::RecordingConnection>(*d.transport, transcript_);
            d.client = std::make_unique<wire::Client>(make_client(*d.recorded));
        }
        return *d.client;
    }

    wire::Client& ha_client()
    {
        if (!ha_client_) {
            ha_transport_ = raw_connection();
            ha_recorded_ = std::make_unique<wire::RecordingConnection>(*ha_transport_, transcript_);
            ha_client_ = std::make_unique<wire::Client>(make_client(*ha_recorded_));
        }
        return *ha_client_;
    }

    void record(const EncounterEvent& e)
    {
        auto& a = devices_[e.device_i];
        auto& b = devices_[e.device_j];
        auto id_a = ident::derive_identifier(a.secret, e.interval);
        auto id_b = ident::derive_identifier(b.secret, e.interval);
        a.log.record_contact(id_a, id_b, e.interval);
        b.log.record_contact(id_b, id_a, e.interval);
    }

    void test_and_upload(const InfectedSpec& inf, SimReport& report)
    {
        IntervalIndex now{inf.test_interval};
        auto token = authority::issue_test_token();
        ha_client().report(authority::sign_report(*ha_, authority::token_hash(token),
                                                  authority::TestResult::positive, now));

        auto& device = devices_[inf.device];
        auto& client = device_client(device);
        if (client.poll_result(token) != enclave::PollResult::positive) {
            throw Error("simulation: registered positive result not visible to the user");
        }
        if (!inf.uploads) return;

        device.log.prune_expired(now);
        std::uint64_t from = now.value > config_.retention ? now.value - config_.retention : 0;
        upload(client, token, device, inf.mode, from, now);

        if (!double_upload_checked_) {
            double_upload_checked_ = true;
            attempt(report, [&] { upload(client, token, device, UploadMode::tuple, from, now); });
            attempt(report, [&] { upload(client, token, device, UploadMode::secret, from, now); });
        }
    }

    void upload(wire::Client& client, const authority::UserToken& token, Device& device,
                UploadMode mode, std::uint64_t from, IntervalIndex now)
    {
        if (mode == UploadMode::tuple) {
            client.upload(token, device.log.export_tuples());
        } else {
            client.upload_secret(token, device.secret, IntervalIndex{from}, now);
        }
    }

    template <typename Action>
    void attempt(SimReport& report, Action&& action)
    {
        auto before = enclave_->state_digest();
        try {
            action();
            ++report.auth_violations;
        } catch (const Error&) {
        }
        if (enclave_->state_digest() != before) ++report.auth_violations;
    }

    void merge(SimReport& report, std::uint32_t device, const enclave::MatchResult& result)
    {
        if (!result.matched) return;
        auto& intervals = report.notified[device];
        std::set<IntervalIndex> merged(intervals.begin(), intervals.end());
        merged.insert(result.matched_intervals.begin(), result.matched_intervals.end());
        intervals.assign(merged.begin(), merged.end());
    }

    void poll_round(IntervalIndex now, SimReport& report)
    {
        enclave_->expire_store(now);
        for (auto& d : devices_) d.log.prune_expired(now);

        if (!server_) {
            for (std::uint32_t i = 0; i < devices_.size(); ++i) {
                auto& client = device_client(devices_[i]);
                auto before = enclave_->state_digest();
                auto result = client.poll(devices_[i].log.export_tuples());
                if (enclave_->state_digest() != before) ++report.state_digest_violations;
                merge(report, i, result);
            }
            return;
        }

        // Concurrent clients; results land in per-device slots and are merged
        // on this thread afterwards.
        std::vector<std::optional<enclave::MatchResult>> results(devices_.size());
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::string failure;
        std::mutex failure_mutex;
        auto before = enclave_->state_digest();
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < std::max(1u, options_.tcp_workers); ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < devices_.size(); i = next++) {
                    try {
                        auto& client = device_client(devices_[i]);
                        results[i] = client.poll(devices_[i].log.export_tuples());
                    } catch (const std::exception& e) {
                        std::lock_guard lock(failure_mutex);
                        failed = true;
                        failure = e.what();
                    }
                }
            });
        }
        for (auto& w : workers) w.join();
        if (failed) throw Error("simulation: concurrent poll failed: " + failure);
        if (enclave_->state_digest() != before) ++report.state_digest_violations;
        for (std::uint32_t i = 0; i < devices_.size(); ++i) {
            if (results[i]) merge(report, i, *results[i]);
        }
    }

    // Unauthorized actions over a connection that is kept out of the honest
    // transcript. Each must be rejected without touching state.
    void rogue_actions(SimReport& report)
    {
        auto transport = raw_connection();
        auto rogue = make_client(*transport);

        auto forged = authority::HealthAuthorityCredential::generate();
        auto victim = authority::issue_test_token();
        attempt(report, [&] {
            rogue.report(authority::sign_report(forged, authority::token_hash(victim),
                                                authority::TestResult::positive, IntervalIndex{0}));
        });

        auto no_record = authority::issue_test_token();
        attempt(report, [&] { rogue.upload(no_record, {}); });

        auto negative = authority::issue_test_token();
        ha_client().report(authority::sign_report(*ha_, authority::token_hash(negative),
                                                  authority::TestResult::negative,
                                                  IntervalIndex{config_.n_intervals - 1}));
        ident::RandomIdentifier a, b;
        a.data[0] = 1;
        b.data[0] = 2;
        attempt(report, [&] { rogue.upload(negative, {{a, b, IntervalIndex{0}}}); });
        attempt(report, [&] {
            rogue.upload_secret(negative, ident::DeviceSecret::generate(), IntervalIndex{0},
                                IntervalIndex{0});
        });
        attempt(report, [&] { rogue.upload_gps(negative, {{0.0, 0.0, 1}}); });

        // Application message outside an envelope.
        attempt(report, [&] {
            auto raw = transport->round_trip(as_bytes(wire::encode(wire::UploadReq{negative, {}})));
            auto reply = wire::decode(text_of(raw));
            if (auto* err = std::get_if<wire::ErrorMsg>(&reply)) throw Error(err->message);
        });
    }

    void flush_audit(SimReport& report)
    {
        if (options_.flush_audit_polls == 0) return;
        std::vector<ContactTuple> known;
        for (const auto& d : devices_) {
            auto t = d.log.export_tuples();
            known.insert(known.end(), t.begin(), t.end());
        }
        auto workload = random_poll_workload(options_.flush_audit_polls, config_.seed, known);
        auto transport = raw_connection();
        wire::RecordingConnection recorded(*transport, transcript_);
        auto auditor = make_client(recorded);
        report.state_digest_violations += audit_flush(*enclave_, auditor, workload);
    }

    ScenarioConfig config_;
    SimOptions options_;
    std::shared_ptr<std::atomic<std::uint64_t>> clock_ = std::make_shared<std::atomic<std::uint64_t>>(0);
    attestation::PlatformSecret platform_secret_;
    std::unique_ptr<authority::HealthAuthorityCredential> ha_;
    attestation::Measurement expected_measurement_;
    crypto::Ed25519Public platform_verify_key_;
    std::unique_ptr<enclave::Enclave> enclave_;
    std::unique_ptr<wire::Service> service_;
    std::unique_ptr<wire::TcpServer> server_;
    wire::Transcript transcript_;
    std::vector<Device> devices_;
    std::unique_ptr<wire::Connection> ha_transport_;
    std::unique_ptr<wire::RecordingConnection> ha_recorded_;
    std::unique_ptr<wire::Client> ha_client_;
    bool double_upload_checked_ = false;
};

} // namespace

SimReport run_scenario(const ScenarioConfig& config, const SimOptions& options)
{
    return Simulation(config, options).run();
}

} // namespace cct::sim
