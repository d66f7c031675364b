#include "cct/codec.hpp"

#include "cct/error.hpp"

namespace cct::codec {

using namespace canonical;

Json tuple_to_json(const contact_log::ContactTuple& t)
{
    return {{"interval", t.interval.value}, {"received", t.received.hex()}, {"sent", t.sent.hex()}};
}

contact_log::ContactTuple tuple_from_json(const Json& j)
{
    require_keys(j, {"interval", "received", "sent"});
    contact_log::ContactTuple t;
    t.interval = ident::IntervalIndex{get_u64(j, "interval")};
    t.received = get_fixed<ident::RandomIdentifier>(j, "received");
    t.sent = get_fixed<ident::RandomIdentifier>(j, "sent");
    return t;
}

Json tuples_to_json(const std::vector<contact_log::ContactTuple>& tuples)
{
    Json arr = Json::array();
    for (const auto& t : tuples) {
        arr.push_back(tuple_to_json(t));
    }
    return arr;
}

std::vector<contact_log::ContactTuple> tuples_from_json(const Json& j)
{
    if (!j.is_array()) {
        throw Error("expected array of tuples");
    }
    std::vector<contact_log::ContactTuple> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        out.push_back(tuple_from_json(item));
    }
    return out;
}

Json point_to_json(const gps::GpsPoint& p)
{
    return {{"lat", p.lat}, {"lon", p.lon}, {"t", p.t}};
}

gps::GpsPoint point_from_json(const Json& j)
{
    require_keys(j, {"lat", "lon", "t"});
    return {get_double(j, "lat"), get_double(j, "lon"), get_u64(j, "t")};
}

Json trace_to_json(const gps::GpsTrace& trace)
{
    Json arr = Json::array();
    for (const auto& p : trace) {
        arr.push_back(point_to_json(p));
    }
    return arr;
}

gps::GpsTrace trace_from_json(const Json& j)
{
    if (!j.is_array()) {
        throw Error("expected array of points");
    }
    gps::GpsTrace out;
    out.reserve(j.size());
    for (const auto& item : j) {
        out.push_back(point_from_json(item));
    }
    return out;
}

} // namespace cct::codec
