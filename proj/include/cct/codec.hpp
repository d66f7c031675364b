#pragma once

#include <vector>

#include "cct/canonical_json.hpp"
#include "cct/contact_log.hpp"
#include "cct/gps.hpp"

// Canonical JSON codecs for domain values shared by sealed state, wire
// messages and on-disk contact logs.
namespace cct::codec {

using canonical::Json;

Json tuple_to_json(const contact_log::ContactTuple& t);
contact_log::ContactTuple tuple_from_json(const Json& j);

Json tuples_to_json(const std::vector<contact_log::ContactTuple>& tuples);
std::vector<contact_log::ContactTuple> tuples_from_json(const Json& j);

Json point_to_json(const gps::GpsPoint& p);
gps::GpsPoint point_from_json(const Json& j);

Json trace_to_json(const gps::GpsTrace& trace);
gps::GpsTrace trace_from_json(const Json& j);

} // namespace cct::codec
