#pragma once

#include <cstdint>
#include <vector>

namespace cct::gps {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;
inline constexpr double kDefaultMaxDistanceMeters = 10.0;
inline constexpr std::uint64_t kDefaultTimeWindowSeconds = 900;

struct GpsPoint {
    double lat = 0.0; // [-90, 90]
    double lon = 0.0; // (-180, 180]
    std::uint64_t t = 0;

    bool operator==(const GpsPoint&) const = default;
};

using GpsTrace = std::vector<GpsPoint>;

struct GpsContact {
    std::uint64_t t_infected = 0;
    std::uint64_t t_poller = 0;

    auto operator<=>(const GpsContact&) const = default;
};

void validate_point(const GpsPoint& p);

// Coordinates in range and timestamps strictly increasing.
void validate_trace(const GpsTrace& trace);

// Great-circle distance in meters.
double haversine_distance(const GpsPoint& p, const GpsPoint& q);

// All (infected, poller) point pairs within max_distance meters and
// time_window seconds of each other, sorted and deduplicated.
std::vector<GpsContact> proximity_events(const GpsTrace& infected, const GpsTrace& poller,
                                         double max_distance, std::uint64_t time_window);

} // namespace cct::gps
