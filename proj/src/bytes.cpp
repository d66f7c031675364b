#include "cct/bytes.hpp"

#include <algorithm>

#include "cct/error.hpp"

namespace cct {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

} // namespace

std::string to_hex(ByteView data)
{
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw Error("invalid hex: odd length");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error("invalid hex: bad digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Bytes to_bytes(std::string_view s)
{
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

void append(Bytes& out, ByteView data)
{
    out.insert(out.end(), data.begin(), data.end());
}

void append_u64_be(Bytes& out, std::uint64_t value)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void throw_length_mismatch(std::size_t expected, std::size_t got)
{
    throw Error("invalid length: expected " + std::to_string(expected) + " bytes, got " +
                std::to_string(got));
}

std::size_t count_occurrences(ByteView haystack, ByteView needle)
{
    if (needle.empty() || haystack.size() < needle.size()) {
        return 0;
    }
    std::size_t count = 0;
    auto it = haystack.begin();
    while (true) {
        it = std::search(it, haystack.end(), needle.begin(), needle.end());
        if (it == haystack.end()) break;
        ++count;
        ++it;
    }
    return count;
}

} // namespace cct
