#include "cct/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cct/canonical_json.hpp"
#include "cct/error.hpp"

namespace cct::config {

using canonical::Json;

enclave::EnclaveConfig ServiceConfig::enclave_config() const
{
    enclave::EnclaveConfig c;
    c.code_version = code_version;
    c.time = time;
    c.retention_intervals = retention_intervals;
    c.strict_intervals = strict_intervals;
    c.ha_verify_key = ha_verify_key;
    return c;
}

ServiceConfig parse_service_config(std::string_view json_text)
{
    using namespace canonical;
    auto j = parse_lenient(json_text);
    ServiceConfig c;
    c.platform_verify_key = get_fixed<crypto::Ed25519Public>(j, "platform_verify_key");
    c.ha_verify_key = get_fixed<crypto::Ed25519Public>(j, "ha_verify_key");
    if (j.contains("delta_t")) c.time.delta_t = get_u64(j, "delta_t");
    if (j.contains("t0")) c.time.t0 = get_u64(j, "t0");
    if (j.contains("retention")) c.retention_intervals = get_u64(j, "retention");
    if (j.contains("strict_intervals")) c.strict_intervals = get_bool(j, "strict_intervals");
    if (j.contains("code_version")) c.code_version = get_string(j, "code_version");
    if (j.contains("sealed_store_path")) c.sealed_store_path = get_string(j, "sealed_store_path");
    if (j.contains("listen")) c.listen = wire::Endpoint::parse(get_string(j, "listen"));
    c.time.validate();
    return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path)
{
    return parse_service_config(read_file(path));
}

std::string dump_service_config(const ServiceConfig& c)
{
    Json j = {
        {"code_version", c.code_version},
        {"delta_t", c.time.delta_t},
        {"ha_verify_key", c.ha_verify_key.hex()},
        {"listen", c.listen.host + ":" + std::to_string(c.listen.port)},
        {"platform_verify_key", c.platform_verify_key.hex()},
        {"retention", c.retention_intervals},
        {"sealed_store_path", c.sealed_store_path.string()},
        {"strict_intervals", c.strict_intervals},
        {"t0", c.time.t0},
    };
    return canonical::dump(j);
}

FixedBytes<32> secret_from_env(const char* name)
{
    const char* value = std::getenv(name);
    if (!value || !*value) {
        throw Error(std::string(name) + " is not set");
    }
    try {
        return FixedBytes<32>::from_hex_string(value);
    } catch (const Error&) {
        throw Error(std::string(name) + " must be 64 lowercase hex characters");
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

} // namespace cct::config
