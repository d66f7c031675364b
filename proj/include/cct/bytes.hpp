#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cct {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);

// Accepts lowercase hex only, which is what the canonical encoding emits.
Bytes from_hex(std::string_view hex);

ByteView as_bytes(std::string_view s);
Bytes to_bytes(std::string_view s);
void append(Bytes& out, ByteView data);
void append_u64_be(Bytes& out, std::uint64_t value);

// Fixed-width byte string used for keys, identifiers and digests.
template <std::size_t N>
struct FixedBytes {
    std::array<std::uint8_t, N> data{};

    static constexpr std::size_t size() { return N; }
    ByteView view() const { return {data.data(), N}; }
    std::string hex() const { return to_hex(view()); }

    static FixedBytes from_view(ByteView v);
    static FixedBytes from_hex_string(std::string_view h) { return from_view(from_hex(h)); }

    auto operator<=>(const FixedBytes&) const = default;
    bool operator==(const FixedBytes&) const = default;
};

void throw_length_mismatch(std::size_t expected, std::size_t got);

template <std::size_t N>
FixedBytes<N> FixedBytes<N>::from_view(ByteView v)
{
    if (v.size() != N) {
        throw_length_mismatch(N, v.size());
    }
    FixedBytes out;
    std::copy(v.begin(), v.end(), out.data.begin());
    return out;
}

using Hash32 = FixedBytes<32>;

// Number of (possibly overlapping) occurrences of needle inside haystack.
std::size_t count_occurrences(ByteView haystack, ByteView needle);

} // namespace cct
