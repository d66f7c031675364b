#include "cct/ident.hpp"

#include <string_view>

#include "cct/crypto.hpp"
#include "cct/error.hpp"

namespace cct::ident {

namespace {
constexpr std::string_view kIdentifierLabel = "CCT-ID-v1";
}

DeviceSecret DeviceSecret::generate()
{
    return DeviceSecret{crypto::random_fixed<32>()};
}

void TimeParams::validate() const
{
    if (delta_t == 0) {
        throw Error("interval length must be positive");
    }
}

IntervalIndex interval_index(std::uint64_t t, const TimeParams& params)
{
    params.validate();
    if (t < params.t0) {
        throw Error("time before epoch origin");
    }
    return IntervalIndex{(t - params.t0) / params.delta_t};
}

std::uint64_t interval_start(IntervalIndex index, const TimeParams& params)
{
    return params.t0 + index.value * params.delta_t;
}

RandomIdentifier derive_identifier(const DeviceSecret& secret, IntervalIndex index)
{
    Bytes message = to_bytes(kIdentifierLabel);
    append_u64_be(message, index.value);
    auto mac = crypto::hmac_sha256(secret.view(), message);

    RandomIdentifier id;
    std::copy_n(mac.data.begin(), id.data.size(), id.data.begin());
    return id;
}

std::vector<RandomIdentifier> derive_identifier_range(const DeviceSecret& secret,
                                                      IntervalIndex from, IntervalIndex to,
                                                      std::uint64_t max_range)
{
    if (from > to) {
        throw Error("inverted range");
    }
    if (to.value - from.value > max_range) {
        throw Error("range too large");
    }
    std::vector<RandomIdentifier> ids;
    ids.reserve(to.value - from.value + 1);
    for (std::uint64_t i = from.value;; ++i) {
        ids.push_back(derive_identifier(secret, IntervalIndex{i}));
        if (i == to.value) break;
    }
    return ids;
}

} // namespace cct::ident
