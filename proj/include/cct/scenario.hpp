#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cct/contact_log.hpp"
#include "cct/ident.hpp"

namespace cct::sim {

enum class UploadMode { tuple, secret };

std::string_view to_string(UploadMode mode);
UploadMode parse_upload_mode(std::string_view text);

struct InfectedSpec {
    std::uint32_t device = 0;
    std::uint64_t test_interval = 0;
    bool uploads = true;
    UploadMode mode = UploadMode::tuple;

    bool operator==(const InfectedSpec&) const = default;
};

// Symmetric: device_i < device_j after normalization.
struct EncounterEvent {
    std::uint32_t device_i = 0;
    std::uint32_t device_j = 0;
    ident::IntervalIndex interval;

    // Ordered by interval, then device pair.
    friend auto operator<=>(const EncounterEvent& a, const EncounterEvent& b)
    {
        if (auto c = a.interval <=> b.interval; c != 0) return c;
        if (auto c = a.device_i <=> b.device_i; c != 0) return c;
        return a.device_j <=> b.device_j;
    }
    friend bool operator==(const EncounterEvent&, const EncounterEvent&) = default;
};

struct ScenarioConfig {
    std::uint32_t n_devices = 0;
    std::uint64_t n_intervals = 1;
    double encounter_rate = 0.0; // expected encounters per device per interval
    std::vector<InfectedSpec> infected;
    std::uint64_t seed = 0;
    std::uint64_t delta_t = ident::kDefaultIntervalSeconds;
    std::uint64_t retention = contact_log::kDefaultRetentionIntervals;
    // Every pair meets in every interval; no random draws.
    bool force_complete_graph = false;
    // Added on top of the generated ones.
    std::vector<EncounterEvent> encounters;
    // 0: poll once at the last interval only. k: also poll whenever (t+1) % k == 0.
    std::uint64_t poll_every = 0;
    bool strict_intervals = false;

    // Throws "invalid scenario: ..." before anything runs.
    void validate() const;

    bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_scenario(std::string_view json_text);
std::string dump_scenario(const ScenarioConfig& config);

// Same scenario with every infected device switched to the given mode.
ScenarioConfig with_mode(ScenarioConfig config, UploadMode mode);

// Intervals at which every device polls, ascending.
std::vector<std::uint64_t> poll_intervals(const ScenarioConfig& config);

// xoshiro256** seeded through SplitMix64.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed);
    std::uint64_t next();
    // Uniform in [0, 1) with 53 bits of precision.
    double uniform();

private:
    std::uint64_t state_[4];
};

// Deterministic in the seed. Draw order: for each interval, for each pair
// (i, j) with i < j in lexicographic order, one uniform draw; the pair meets
// with probability 1 - exp(-rate / (n - 1)).
std::vector<EncounterEvent> generate_encounters(const ScenarioConfig& config);

} // namespace cct::sim
