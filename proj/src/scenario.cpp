#include "cct/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cct/canonical_json.hpp"
#include "cct/error.hpp"

namespace cct::sim {

using canonical::Json;

std::string_view to_string(UploadMode mode)
{
    return mode == UploadMode::tuple ? "tuple" : "secret";
}

UploadMode parse_upload_mode(std::string_view text)
{
    if (text == "tuple") return UploadMode::tuple;
    if (text == "secret") return UploadMode::secret;
    throw Error("invalid scenario: unknown mode " + std::string(text));
}

void ScenarioConfig::validate() const
{
    auto fail = [](const std::string& why) { throw Error("invalid scenario: " + why); };
    if (n_intervals == 0) fail("n_intervals must be positive");
    if (delta_t == 0) fail("delta_t must be positive");
    if (!(encounter_rate >= 0.0) || !std::isfinite(encounter_rate)) fail("encounter_rate must be >= 0");
    if (retention > ident::kDefaultMaxRange) fail("retention exceeds the secret derivation range");
    std::set<std::uint32_t> seen;
    for (const auto& inf : infected) {
        if (inf.device >= n_devices) fail("infected device index out of range");
        if (inf.test_interval >= n_intervals) fail("test interval out of range");
        if (!seen.insert(inf.device).second) fail("device listed as infected twice");
    }
    for (const auto& e : encounters) {
        if (e.device_i >= n_devices || e.device_j >= n_devices) fail("encounter device out of range");
        if (e.device_i == e.device_j) fail("self-encounter");
        if (e.interval.value >= n_intervals) fail("encounter interval out of range");
    }
}

ScenarioConfig parse_scenario(std::string_view json_text)
{
    using namespace canonical;
    auto j = parse_lenient(json_text);
    if (!j.is_object()) throw Error("invalid scenario: expected object");
    ScenarioConfig c;
    auto u64 = [&](std::string_view key, std::uint64_t& out) {
        if (j.contains(key)) out = get_u64(j, key);
    };
    std::uint64_t n = 0;
    u64("n_devices", n);
    if (n > UINT32_MAX) throw Error("invalid scenario: too many devices");
    c.n_devices = static_cast<std::uint32_t>(n);
    u64("n_intervals", c.n_intervals);
    u64("seed", c.seed);
    u64("delta_t", c.delta_t);
    u64("retention", c.retention);
    u64("poll_every", c.poll_every);
    if (j.contains("encounter_rate")) c.encounter_rate = get_double(j, "encounter_rate");
    if (j.contains("force_complete_graph")) c.force_complete_graph = get_bool(j, "force_complete_graph");
    if (j.contains("strict_intervals")) c.strict_intervals = get_bool(j, "strict_intervals");
    if (j.contains("infected")) {
        for (const auto& item : get_array(j, "infected")) {
            InfectedSpec s;
            s.device = static_cast<std::uint32_t>(get_u64(item, "device"));
            s.test_interval = get_u64(item, "test_interval");
            if (item.contains("uploads")) s.uploads = get_bool(item, "uploads");
            if (item.contains("mode")) s.mode = parse_upload_mode(get_string(item, "mode"));
            c.infected.push_back(s);
        }
    }
    if (j.contains("encounters")) {
        for (const auto& item : get_array(j, "encounters")) {
            EncounterEvent e;
            e.device_i = static_cast<std::uint32_t>(get_u64(item, "i"));
            e.device_j = static_cast<std::uint32_t>(get_u64(item, "j"));
            e.interval = ident::IntervalIndex{get_u64(item, "interval")};
            c.encounters.push_back(e);
        }
    }
    c.validate();
    return c;
}

std::string dump_scenario(const ScenarioConfig& c)
{
    Json infected = Json::array();
    for (const auto& s : c.infected) {
        infected.push_back({{"device", s.device},
                            {"mode", std::string(to_string(s.mode))},
                            {"test_interval", s.test_interval},
                            {"uploads", s.uploads}});
    }
    Json encounters = Json::array();
    for (const auto& e : c.encounters) {
        encounters.push_back({{"i", e.device_i}, {"interval", e.interval.value}, {"j", e.device_j}});
    }
    Json j = {
        {"delta_t", c.delta_t},
        {"encounter_rate", c.encounter_rate},
        {"encounters", encounters},
        {"force_complete_graph", c.force_complete_graph},
        {"infected", infected},
        {"n_devices", c.n_devices},
        {"n_intervals", c.n_intervals},
        {"poll_every", c.poll_every},
        {"retention", c.retention},
        {"seed", c.seed},
        {"strict_intervals", c.strict_intervals},
    };
    return canonical::dump(j);
}

ScenarioConfig with_mode(ScenarioConfig config, UploadMode mode)
{
    for (auto& s : config.infected) {
        s.mode = mode;
    }
    return config;
}

std::vector<std::uint64_t> poll_intervals(const ScenarioConfig& config)
{
    std::vector<std::uint64_t> out;
    if (config.poll_every > 0) {
        for (std::uint64_t t = config.poll_every - 1; t + 1 < config.n_intervals; t += config.poll_every) {
            out.push_back(t);
        }
    }
    out.push_back(config.n_intervals - 1);
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x)
{
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k)
{
    return (x << k) | (x >> (64 - k));
}

} // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed)
{
    for (auto& s : state_) {
        s = splitmix64(seed);
    }
}

std::uint64_t Xoshiro256::next()
{
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Xoshiro256::uniform()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::vector<EncounterEvent> generate_encounters(const ScenarioConfig& config)
{
    config.validate();
    std::vector<EncounterEvent> events;
    const std::uint32_t n = config.n_devices;

    if (n >= 2 && (config.force_complete_graph || config.encounter_rate > 0.0)) {
        const double p = config.force_complete_graph
                             ? 1.0
                             : 1.0 - std::exp(-config.encounter_rate / static_cast<double>(n - 1));
        Xoshiro256 rng(config.seed);
        for (std::uint64_t t = 0; t < config.n_intervals; ++t) {
            for (std::uint32_t i = 0; i < n; ++i) {
                for (std::uint32_t j = i + 1; j < n; ++j) {
                    if (config.force_complete_graph || rng.uniform() < p) {
                        events.push_back({i, j, ident::IntervalIndex{t}});
                    }
                }
            }
        }
    }

    for (auto e : config.encounters) {
        if (e.device_i > e.device_j) std::swap(e.device_i, e.device_j);
        events.push_back(e);
    }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    return events;
}

} // namespace cct::sim
