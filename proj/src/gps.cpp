#include "cct/gps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cct/error.hpp"

namespace cct::gps {

void validate_point(const GpsPoint& p)
{
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
        p.lon <= -180.0 || p.lon > 180.0) {
        throw Error("coordinates out of range");
    }
}

void validate_trace(const GpsTrace& trace)
{
    for (std::size_t i = 0; i < trace.size(); ++i) {
        validate_point(trace[i]);
        if (i > 0 && trace[i].t <= trace[i - 1].t) {
            throw Error("trace not time-ordered");
        }
    }
}

double haversine_distance(const GpsPoint& p, const GpsPoint& q)
{
    validate_point(p);
    validate_point(q);
    constexpr double kRad = std::numbers::pi / 180.0;
    double dlat = (q.lat - p.lat) * kRad;
    double dlon = (q.lon - p.lon) * kRad;
    double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(p.lat * kRad) * std::cos(q.lat * kRad) * std::sin(dlon / 2) *
                   std::sin(dlon / 2);
    a = std::clamp(a, 0.0, 1.0);
    return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(a));
}

std::vector<GpsContact> proximity_events(const GpsTrace& infected, const GpsTrace& poller,
                                         double max_distance, std::uint64_t time_window)
{
    std::vector<GpsContact> events;
    for (const auto& p : infected) {
        for (const auto& q : poller) {
            std::uint64_t dt = p.t > q.t ? p.t - q.t : q.t - p.t;
            if (dt <= time_window && haversine_distance(p, q) <= max_distance) {
                events.push_back({p.t, q.t});
            }
        }
    }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    return events;
}

} // namespace cct::gps
