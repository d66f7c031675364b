#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cct/client.hpp"
#include "cct/enclave.hpp"
#include "cct/scenario.hpp"
#include "cct/transport.hpp"

namespace cct::sim {

struct SimOptions {
    // Negative control: envelopes carry plaintext. Must produce transcript leaks.
    bool insecure_plaintext = false;
    // Negative control: the backend persists every poll. Must produce flush violations.
    bool log_polls = false;
    // Run the backend behind a loopback TCP server and poll concurrently.
    bool use_tcp = false;
    unsigned tcp_workers = 8;
    // Extra random polls for the flush audit after the scenario's own polls.
    std::size_t flush_audit_polls = 1000;
};

struct SimReport {
    std::map<std::uint32_t, std::vector<ident::IntervalIndex>> notified;
    std::set<std::uint32_t> oracle_notified;
    std::uint64_t encounters = 0;
    std::uint64_t transcript_leaks = 0;
    std::uint64_t boundary_violations = 0;
    std::uint64_t state_digest_violations = 0;
    std::uint64_t auth_violations = 0;

    std::set<std::uint32_t> notified_devices() const;
    bool passed() const;
    // Canonical JSON.
    std::string to_json() const;
};

SimReport run_scenario(const ScenarioConfig& config, const SimOptions& options = {});

// Ground truth straight from the encounter list; shares no code with the
// protocol path. A device is notified iff, at some poll interval p, it shares
// an encounter at interval t with an uploader tested at T such that
// T <= p, t <= T, t + retention >= T, t + retention >= p and T + retention >= p.
std::set<std::uint32_t> oracle_notified(const ScenarioConfig& config,
                                        const std::vector<EncounterEvent>& encounters);

// Occurrences of any identifier or secret (raw bytes or lowercase hex) in a
// post-handshake message, including inside hex-encoded fields.
std::size_t audit_transcript(const std::vector<wire::TranscriptEntry>& transcript,
                             std::span<const ident::RandomIdentifier> identifiers,
                             std::span<const ident::DeviceSecret> secrets);

// Application messages that crossed the network outside an envelope.
std::size_t count_plaintext_application_messages(const std::vector<wire::TranscriptEntry>& transcript);

// Runs every poll in the workload and counts how often the backend state
// digest changed across a poll.
std::size_t audit_flush(const enclave::Enclave& backend, wire::Client& client,
                        const std::vector<std::vector<contact_log::ContactTuple>>& workload);

// Mix of random tuples and swapped copies of known ones, deterministic in seed.
std::vector<std::vector<contact_log::ContactTuple>> random_poll_workload(
    std::size_t polls, std::uint64_t seed, std::span<const contact_log::ContactTuple> known);

} // namespace cct::sim
