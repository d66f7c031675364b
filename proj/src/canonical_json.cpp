#include "cct/canonical_json.hpp"

#include <algorithm>
#include <string>

#include "cct/error.hpp"

namespace cct::canonical {

std::string dump(const Json& value)
{
    return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json parse(std::string_view text)
{
    Json value = parse_lenient(text);
    std::string again;
    try {
        again = dump(value);
    } catch (const Json::exception&) {
        throw Error("malformed json");
    }
    if (again != text) {
        throw Error("non-canonical");
    }
    return value;
}

Json parse_lenient(std::string_view text)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::exception&) {
        throw Error("malformed json");
    }
}

void throw_invalid_field(std::string_view key)
{
    throw Error("invalid field: " + std::string(key));
}

void require_keys(const Json& obj, std::initializer_list<std::string_view> keys)
{
    if (!obj.is_object()) {
        throw Error("expected object");
    }
    for (auto key : keys) {
        if (!obj.contains(key)) {
            throw Error("missing field: " + std::string(key));
        }
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw Error("unexpected field: " + key);
        }
    }
}

const Json& field(const Json& obj, std::string_view key)
{
    if (!obj.is_object()) {
        throw Error("expected object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error("missing field: " + std::string(key));
    }
    return *it;
}

std::uint64_t get_u64(const Json& obj, std::string_view key)
{
    const auto& v = field(obj, key);
    if (!v.is_number_unsigned()) {
        // nlohmann parses non-negative literals as unsigned; anything else is invalid.
        throw_invalid_field(key);
    }
    return v.get<std::uint64_t>();
}

double get_double(const Json& obj, std::string_view key)
{
    const auto& v = field(obj, key);
    if (!v.is_number()) {
        throw_invalid_field(key);
    }
    return v.get<double>();
}

bool get_bool(const Json& obj, std::string_view key)
{
    const auto& v = field(obj, key);
    if (!v.is_boolean()) {
        throw_invalid_field(key);
    }
    return v.get<bool>();
}

std::string get_string(const Json& obj, std::string_view key)
{
    const auto& v = field(obj, key);
    if (!v.is_string()) {
        throw_invalid_field(key);
    }
    return v.get<std::string>();
}

Bytes get_hex(const Json& obj, std::string_view key)
{
    auto s = get_string(obj, key);
    try {
        return from_hex(s);
    } catch (const Error&) {
        throw_invalid_field(key);
    }
}

const Json& get_array(const Json& obj, std::string_view key)
{
    const auto& v = field(obj, key);
    if (!v.is_array()) {
        throw_invalid_field(key);
    }
    return v;
}

} // namespace cct::canonical
