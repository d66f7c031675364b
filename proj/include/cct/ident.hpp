#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "cct/bytes.hpp"

namespace cct::ident {

inline constexpr std::uint64_t kDefaultIntervalSeconds = 900;
inline constexpr std::uint64_t kDefaultMaxRange = 4032;

struct DeviceSecret : FixedBytes<32> {
    static DeviceSecret generate();
    static DeviceSecret from(const FixedBytes<32>& b) { return DeviceSecret{b}; }
};

struct RandomIdentifier : FixedBytes<16> {
    static RandomIdentifier from(const FixedBytes<16>& b) { return RandomIdentifier{b}; }
};

struct IntervalIndex {
    std::uint64_t value = 0;

    auto operator<=>(const IntervalIndex&) const = default;
};

struct TimeParams {
    std::uint64_t t0 = 0;
    std::uint64_t delta_t = kDefaultIntervalSeconds;

    // Throws when delta_t is zero.
    void validate() const;
};

// Intervals are half-open: [t0 + k*delta_t, t0 + (k+1)*delta_t).
IntervalIndex interval_index(std::uint64_t t, const TimeParams& params);

// Start of the interval in epoch seconds.
std::uint64_t interval_start(IntervalIndex index, const TimeParams& params);

// First 16 bytes of HMAC-SHA256(secret, "CCT-ID-v1" || index as u64 big-endian).
RandomIdentifier derive_identifier(const DeviceSecret& secret, IntervalIndex index);

std::vector<RandomIdentifier> derive_identifier_range(const DeviceSecret& secret,
                                                      IntervalIndex from, IntervalIndex to,
                                                      std::uint64_t max_range = kDefaultMaxRange);

} // namespace cct::ident
