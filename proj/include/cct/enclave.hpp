#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "cct/attestation.hpp"
#include "cct/authority.hpp"
#include "cct/contact_log.hpp"
#include "cct/gps.hpp"
#include "cct/ident.hpp"

namespace cct::enclave {

using authority::TestResult;
using authority::UserToken;
using contact_log::ContactTuple;
using ident::IntervalIndex;
using ident::RandomIdentifier;

inline constexpr std::string_view kDefaultCodeVersion = "cct-enclave-1.0";

enum class PollResult { unknown, negative, positive };

std::string_view to_string(PollResult result);
PollResult parse_poll_result(std::string_view text);

struct InfectionRecord {
    Hash32 token_hash;
    TestResult result = TestResult::negative;
    IntervalIndex registered_interval;
    bool upload_used = false;
    bool gps_upload_used = false;
};

struct MatchResult {
    bool matched = false;
    std::vector<IntervalIndex> matched_intervals; // ascending, deduplicated

    bool operator==(const MatchResult&) const = default;
};

struct EnclaveConfig {
    std::string code_version{kDefaultCodeVersion};
    ident::TimeParams time;
    std::uint64_t retention_intervals = contact_log::kDefaultRetentionIntervals;
    std::uint64_t max_secret_range = ident::kDefaultMaxRange;
    // Also require equal intervals when matching tuples and derived ids.
    bool strict_intervals = false;
    // Negative control for the flush audit: persists every poll. Never enable
    // in a real deployment.
    bool log_polls = false;
    crypto::Ed25519Public ha_verify_key;

    // Digest over every field that changes enclave behaviour.
    Hash32 config_digest() const;
    attestation::Measurement measurement() const;
};

class SealedStorage {
public:
    virtual ~SealedStorage() = default;
    virtual std::optional<Bytes> load() const = 0;
    virtual void store(ByteView sealed) = 0;
};

class MemorySealedStorage : public SealedStorage {
public:
    std::optional<Bytes> load() const override { return data_; }
    void store(ByteView sealed) override { data_.emplace(sealed.begin(), sealed.end()); }

private:
    std::optional<Bytes> data_;
};

class FileSealedStorage : public SealedStorage {
public:
    explicit FileSealedStorage(std::filesystem::path path) : path_(std::move(path)) {}
    std::optional<Bytes> load() const override;
    // Writes to a temporary file and renames it into place.
    void store(ByteView sealed) override;

private:
    std::filesystem::path path_;
};

// Epoch seconds.
using Clock = std::function<std::uint64_t()>;

Clock system_clock();

// The confidential backend core. All long-lived state lives in this object and
// in the sealed blob it writes after every mutation. Thread-safe: mutations
// take an exclusive lock, reads a shared one.
class Enclave {
public:
    Enclave(EnclaveConfig config, attestation::PlatformSecret platform_secret,
            std::unique_ptr<SealedStorage> storage, Clock clock);

    const EnclaveConfig& config() const { return config_; }
    const attestation::Measurement& measurement() const { return measurement_; }
    IntervalIndex current_interval() const;

    void register_test_result(const authority::SignedReport& report);
    PollResult poll_test_result(const UserToken& token) const;

    void upload_contact_log(const UserToken& token, std::span<const ContactTuple> tuples);
    void upload_secret(const UserToken& token, const ident::DeviceSecret& secret,
                       IntervalIndex from, IntervalIndex to);
    void upload_gps_trace(const UserToken& token, const gps::GpsTrace& trace);

    MatchResult match_poll(std::span<const ContactTuple> tuples);
    std::vector<gps::GpsContact> match_gps(const gps::GpsTrace& trace, double max_distance,
                                           std::uint64_t time_window);

    // Removes entries whose expiry is strictly before current.
    std::size_t expire_store(IntervalIndex current);

    // Canonical JSON of the long-lived state (what gets sealed).
    std::string serialize_state() const;
    // SHA-256 over the sealed blob and the serialized state.
    Hash32 state_digest() const;

private:
    struct PairKey {
        RandomIdentifier sent;
        RandomIdentifier received;
        IntervalIndex interval;

        auto operator<=>(const PairKey&) const = default;
    };
    struct DerivedEntry {
        IntervalIndex interval;
        std::uint64_t expiry;
    };
    struct StoredTrace {
        gps::GpsTrace points;
        std::uint64_t expiry;
    };

    InfectionRecord& authorize_upload(const UserToken& token, bool gps);
    bool tuple_matches(const ContactTuple& poll, std::uint64_t now) const;
    std::string serialize_locked() const;
    void load_locked(std::string_view json);
    void persist_locked();
    IntervalIndex now_interval() const;

    EnclaveConfig config_;
    attestation::Measurement measurement_;
    attestation::PlatformSecret platform_secret_;
    std::unique_ptr<SealedStorage> storage_;
    Clock clock_;

    mutable std::shared_mutex mutex_;
    std::map<Hash32, InfectionRecord> records_;
    std::map<PairKey, std::uint64_t> tuples_; // value: expiry interval
    std::map<RandomIdentifier, DerivedEntry> derived_ids_;
    std::vector<StoredTrace> traces_;
    std::vector<std::string> poll_log_; // only populated with log_polls
};

} // namespace cct::enclave
