#pragma once

// Reference implementations backed by OpenSSL, kept apart from the
// libsodium-based production path so the two can check each other.

#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Bytes = std::vector<std::uint8_t>;

Bytes sha256(const Bytes& data);
Bytes hmac_sha256(const Bytes& key, const Bytes& message);
Bytes hkdf_sha256(const Bytes& ikm, const Bytes& salt, const Bytes& info, std::size_t length);

// HMAC-SHA256(secret, "CCT-ID-v1" || be64(index)) truncated to 16 bytes.
Bytes rolling_identifier(const Bytes& secret, std::uint64_t index);

// Great-circle distance by the spherical law of cosines with a Vincenty-style
// atan2 form (numerically different route than haversine).
double great_circle_meters(double lat1, double lon1, double lat2, double lon2);

std::string hex(const Bytes& b);
Bytes unhex(const std::string& h);

} // namespace oracle
