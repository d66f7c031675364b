#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cct/bytes.hpp"

// Canonical form: keys sorted bytewise ascending, no insignificant
// whitespace, byte strings as lowercase hex, integers in base 10.
namespace cct::canonical {

using Json = nlohmann::json;

std::string dump(const Json& value);

// Strict: the input must be byte-identical to its own canonical re-encoding.
// Throws "malformed json" or "non-canonical".
Json parse(std::string_view text);

// For hand-written config files, where formatting is not enforced.
Json parse_lenient(std::string_view text);

[[noreturn]] void throw_invalid_field(std::string_view key);

// Field accessors for decoding. All throw cct::Error naming the field.
void require_keys(const Json& obj, std::initializer_list<std::string_view> keys);
const Json& field(const Json& obj, std::string_view key);
std::uint64_t get_u64(const Json& obj, std::string_view key);
double get_double(const Json& obj, std::string_view key);
bool get_bool(const Json& obj, std::string_view key);
std::string get_string(const Json& obj, std::string_view key);
Bytes get_hex(const Json& obj, std::string_view key);
const Json& get_array(const Json& obj, std::string_view key);

template <typename Fixed>
Fixed get_fixed(const Json& obj, std::string_view key)
{
    Bytes raw = get_hex(obj, key);
    if (raw.size() != Fixed::size()) {
        throw_invalid_field(key);
    }
    Fixed out;
    std::copy(raw.begin(), raw.end(), out.data.begin());
    return out;
}

} // namespace cct::canonical
