#include "cct/enclave.hpp"

#include <sodium.h>

#include <chrono>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>

#include "cct/canonical_json.hpp"
#include "cct/codec.hpp"
#include "cct/error.hpp"

namespace cct::enclave {

using canonical::Json;

std::string_view to_string(PollResult result)
{
    switch (result) {
    case PollResult::positive: return "positive";
    case PollResult::negative: return "negative";
    case PollResult::unknown: return "unknown";
    }
    return "unknown";
}

PollResult parse_poll_result(std::string_view text)
{
    if (text == "positive") return PollResult::positive;
    if (text == "negative") return PollResult::negative;
    if (text == "unknown") return PollResult::unknown;
    throw Error("invalid poll result: " + std::string(text));
}

Hash32 EnclaveConfig::config_digest() const
{
    Json j = {
        {"delta_t", time.delta_t},
        {"ha_verify_key", ha_verify_key.hex()},
        {"log_polls", log_polls},
        {"max_secret_range", max_secret_range},
        {"retention_intervals", retention_intervals},
        {"strict_intervals", strict_intervals},
        {"t0", time.t0},
    };
    return crypto::sha256(as_bytes(canonical::dump(j)));
}

attestation::Measurement EnclaveConfig::measurement() const
{
    return attestation::compute_measurement(code_version, config_digest());
}

std::optional<Bytes> FileSealedStorage::load() const
{
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

void FileSealedStorage::store(ByteView sealed)
{
    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write sealed store: " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(sealed.data()),
                  static_cast<std::streamsize>(sealed.size()));
    }
    std::filesystem::rename(tmp, path_);
}

Clock system_clock()
{
    return [] {
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                              std::chrono::system_clock::now().time_since_epoch())
                                              .count());
    };
}

Enclave::Enclave(EnclaveConfig config, attestation::PlatformSecret platform_secret,
                 std::unique_ptr<SealedStorage> storage, Clock clock)
    : config_(std::move(config)),
      measurement_(config_.measurement()),
      platform_secret_(platform_secret),
      storage_(std::move(storage)),
      clock_(std::move(clock))
{
    config_.time.validate();
    std::unique_lock lock(mutex_);
    if (auto existing = storage_->load()) {
        auto plain = attestation::unseal(attestation::SealedBlob::from_bytes(*existing),
                                         measurement_, platform_secret_);
        load_locked(std::string(plain.begin(), plain.end()));
    } else {
        persist_locked();
    }
}

IntervalIndex Enclave::now_interval() const
{
    return ident::interval_index(clock_(), config_.time);
}

IntervalIndex Enclave::current_interval() const
{
    return now_interval();
}

void Enclave::register_test_result(const authority::SignedReport& report)
{
    if (!authority::verify_report(config_.ha_verify_key, report)) {
        throw Error("unauthorized reporter");
    }
    std::unique_lock lock(mutex_);
    if (auto it = records_.find(report.token_hash); it != records_.end()) {
        if (it->second.result != report.result) {
            throw Error("conflicting report");
        }
        return;
    }
    records_.emplace(report.token_hash,
                     InfectionRecord{report.token_hash, report.result, report.interval});
    persist_locked();
}

PollResult Enclave::poll_test_result(const UserToken& token) const
{
    std::shared_lock lock(mutex_);
    auto it = records_.find(authority::token_hash(token));
    if (it == records_.end()) {
        return PollResult::unknown;
    }
    return it->second.result == TestResult::positive ? PollResult::positive : PollResult::negative;
}

InfectionRecord& Enclave::authorize_upload(const UserToken& token, bool gps)
{
    auto it = records_.find(authority::token_hash(token));
    if (it == records_.end() || it->second.result != TestResult::positive) {
        throw Error("not authorized to upload");
    }
    if (gps ? it->second.gps_upload_used : it->second.upload_used) {
        throw Error("upload already used");
    }
    return it->second;
}

void Enclave::upload_contact_log(const UserToken& token, std::span<const ContactTuple> tuples)
{
    std::unique_lock lock(mutex_);
    auto& record = authorize_upload(token, false);
    for (const auto& t : tuples) {
        if (t.sent == t.received) {
            throw Error("self-contact");
        }
    }
    std::uint64_t expiry = now_interval().value + config_.retention_intervals;
    for (const auto& t : tuples) {
        auto [it, inserted] = tuples_.try_emplace(PairKey{t.sent, t.received, t.interval}, expiry);
        if (!inserted) {
            it->second = std::max(it->second, expiry);
        }
    }
    record.upload_used = true;
    persist_locked();
}

void Enclave::upload_secret(const UserToken& token, const ident::DeviceSecret& secret,
                            IntervalIndex from, IntervalIndex to)
{
    std::unique_lock lock(mutex_);
    auto& record = authorize_upload(token, false);

    auto ids = ident::derive_identifier_range(secret, from, to, config_.max_secret_range);
    auto now = now_interval();
    std::uint64_t oldest =
        now.value > config_.retention_intervals ? now.value - config_.retention_intervals : 0;
    if (from.value < oldest || to > now) {
        throw Error("range outside retention window");
    }

    std::uint64_t expiry = now.value + config_.retention_intervals;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        IntervalIndex interval{from.value + k};
        auto [it, inserted] = derived_ids_.try_emplace(ids[k], DerivedEntry{interval, expiry});
        if (!inserted) {
            it->second.expiry = std::max(it->second.expiry, expiry);
        }
    }
    record.upload_used = true;
    persist_locked();
}

void Enclave::upload_gps_trace(const UserToken& token, const gps::GpsTrace& trace)
{
    gps::validate_trace(trace);
    std::unique_lock lock(mutex_);
    auto& record = authorize_upload(token, true);
    traces_.push_back({trace, now_interval().value + config_.retention_intervals});
    record.gps_upload_used = true;
    persist_locked();
}

bool Enclave::tuple_matches(const ContactTuple& poll, std::uint64_t now) const
{
    // The infected device logged (their id, our id); the poller logged the swap.
    if (config_.strict_intervals) {
        auto it = tuples_.find(PairKey{poll.received, poll.sent, poll.interval});
        if (it != tuples_.end() && it->second >= now) {
            return true;
        }
    } else {
        for (auto it = tuples_.lower_bound(PairKey{poll.received, poll.sent, IntervalIndex{0}});
             it != tuples_.end() && it->first.sent == poll.received &&
             it->first.received == poll.sent;
             ++it) {
            if (it->second >= now) {
                return true;
            }
        }
    }

    auto d = derived_ids_.find(poll.received);
    if (d != derived_ids_.end() && d->second.expiry >= now) {
        return !config_.strict_intervals || d->second.interval == poll.interval;
    }
    return false;
}

MatchResult Enclave::match_poll(std::span<const ContactTuple> tuples)
{
    if (config_.log_polls) {
        std::unique_lock lock(mutex_);
        poll_log_.push_back(canonical::dump(codec::tuples_to_json({tuples.begin(), tuples.end()})));
        persist_locked();
    }

    std::shared_lock lock(mutex_);
    std::uint64_t now = now_interval().value;
    std::set<IntervalIndex> matched;
    for (const auto& t : tuples) {
        if (tuple_matches(t, now)) {
            matched.insert(t.interval);
        }
    }
    MatchResult result;
    result.matched_intervals.assign(matched.begin(), matched.end());
    result.matched = !result.matched_intervals.empty();
    return result;
}

std::vector<gps::GpsContact> Enclave::match_gps(const gps::GpsTrace& trace, double max_distance,
                                                std::uint64_t time_window)
{
    gps::validate_trace(trace);
    if (config_.log_polls) {
        std::unique_lock lock(mutex_);
        poll_log_.push_back(canonical::dump(codec::trace_to_json(trace)));
        persist_locked();
    }

    std::shared_lock lock(mutex_);
    std::uint64_t now = now_interval().value;
    std::vector<gps::GpsContact> events;
    for (const auto& stored : traces_) {
        if (stored.expiry < now) continue;
        auto found = gps::proximity_events(stored.points, trace, max_distance, time_window);
        events.insert(events.end(), found.begin(), found.end());
    }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    return events;
}

std::size_t Enclave::expire_store(IntervalIndex current)
{
    std::unique_lock lock(mutex_);
    std::size_t removed = 0;
    removed += std::erase_if(tuples_, [&](const auto& kv) { return kv.second < current.value; });
    removed +=
        std::erase_if(derived_ids_, [&](const auto& kv) { return kv.second.expiry < current.value; });
    removed += std::erase_if(traces_, [&](const auto& t) { return t.expiry < current.value; });
    if (removed > 0) {
        persist_locked();
    }
    return removed;
}

std::string Enclave::serialize_state() const
{
    std::shared_lock lock(mutex_);
    return serialize_locked();
}

Hash32 Enclave::state_digest() const
{
    std::shared_lock lock(mutex_);
    Bytes input;
    auto sealed = storage_->load().value_or(Bytes{});
    append_u64_be(input, sealed.size());
    append(input, sealed);
    append(input, as_bytes(serialize_locked()));
    return crypto::sha256(input);
}

std::string Enclave::serialize_locked() const
{
    Json records = Json::array();
    for (const auto& [hash, r] : records_) {
        records.push_back({
            {"gps_upload_used", r.gps_upload_used},
            {"registered_interval", r.registered_interval.value},
            {"result", std::string(authority::to_string(r.result))},
            {"token_hash", hash.hex()},
            {"upload_used", r.upload_used},
        });
    }
    Json tuples = Json::array();
    for (const auto& [key, expiry] : tuples_) {
        tuples.push_back({
            {"expiry", expiry},
            {"interval", key.interval.value},
            {"received", key.received.hex()},
            {"sent", key.sent.hex()},
        });
    }
    Json derived = Json::array();
    for (const auto& [id, entry] : derived_ids_) {
        derived.push_back({{"expiry", entry.expiry}, {"id", id.hex()}, {"interval", entry.interval.value}});
    }
    Json traces = Json::array();
    for (const auto& t : traces_) {
        traces.push_back({{"expiry", t.expiry}, {"points", codec::trace_to_json(t.points)}});
    }
    Json state = {
        {"derived_ids", derived},
        {"gps_traces", traces},
        {"poll_log", poll_log_},
        {"records", records},
        {"tuples", tuples},
    };
    return canonical::dump(state);
}

void Enclave::load_locked(std::string_view text)
{
    using namespace canonical;
    auto state = parse(text);
    require_keys(state, {"derived_ids", "gps_traces", "poll_log", "records", "tuples"});

    for (const auto& r : get_array(state, "records")) {
        require_keys(r, {"gps_upload_used", "registered_interval", "result", "token_hash", "upload_used"});
        InfectionRecord rec;
        rec.token_hash = get_fixed<Hash32>(r, "token_hash");
        rec.result = authority::parse_test_result(get_string(r, "result"));
        rec.registered_interval = IntervalIndex{get_u64(r, "registered_interval")};
        rec.upload_used = get_bool(r, "upload_used");
        rec.gps_upload_used = get_bool(r, "gps_upload_used");
        records_.emplace(rec.token_hash, rec);
    }
    for (const auto& t : get_array(state, "tuples")) {
        require_keys(t, {"expiry", "interval", "received", "sent"});
        PairKey key{get_fixed<RandomIdentifier>(t, "sent"), get_fixed<RandomIdentifier>(t, "received"),
                    IntervalIndex{get_u64(t, "interval")}};
        tuples_.emplace(key, get_u64(t, "expiry"));
    }
    for (const auto& d : get_array(state, "derived_ids")) {
        require_keys(d, {"expiry", "id", "interval"});
        derived_ids_.emplace(get_fixed<RandomIdentifier>(d, "id"),
                             DerivedEntry{IntervalIndex{get_u64(d, "interval")}, get_u64(d, "expiry")});
    }
    for (const auto& t : get_array(state, "gps_traces")) {
        require_keys(t, {"expiry", "points"});
        traces_.push_back({codec::trace_from_json(get_array(t, "points")), get_u64(t, "expiry")});
    }
    for (const auto& p : get_array(state, "poll_log")) {
        poll_log_.push_back(p.get<std::string>());
    }
}

void Enclave::persist_locked()
{
    auto plain = serialize_locked();
    auto blob = attestation::seal(as_bytes(plain), measurement_, platform_secret_);
    sodium_memzero(plain.data(), plain.size());
    storage_->store(blob.to_bytes());
}

} // namespace cct::enclave
