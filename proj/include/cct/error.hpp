#pragma once

#include <stdexcept>
#include <string>

namespace cct {

// Every protocol-level failure surfaces as this type; what() carries the
// stable, wire-visible reason string (e.g. "replay", "upload already used").
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& reason) : std::runtime_error(reason) {}
};

} // namespace cct
