#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cct/attestation.hpp"
#include "cct/enclave.hpp"
#include "cct/transport.hpp"

namespace cct::config {

inline constexpr const char* kPlatformSecretEnv = "CCT_PLATFORM_SECRET";
inline constexpr const char* kHaSigningKeyEnv = "CCT_HA_SIGNING_KEY";

// Shared by the service and its clients; clients use it to compute the
// measurement they expect.
struct ServiceConfig {
    crypto::Ed25519Public platform_verify_key;
    crypto::Ed25519Public ha_verify_key;
    ident::TimeParams time;
    std::uint64_t retention_intervals = contact_log::kDefaultRetentionIntervals;
    bool strict_intervals = false;
    std::string code_version{enclave::kDefaultCodeVersion};
    std::filesystem::path sealed_store_path = "cct-sealed.bin";
    wire::Endpoint listen;

    enclave::EnclaveConfig enclave_config() const;
};

ServiceConfig parse_service_config(std::string_view json_text);
ServiceConfig load_service_config(const std::filesystem::path& path);
std::string dump_service_config(const ServiceConfig& config);

// Reads a 64-hex-char value from the environment. Throws when unset or malformed.
FixedBytes<32> secret_from_env(const char* name);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace cct::config
