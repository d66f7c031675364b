#pragma once

#include <string>
#include <string_view>

#include "cct/bytes.hpp"
#include "cct/crypto.hpp"
#include "cct/ident.hpp"

namespace cct::authority {

enum class TestResult { negative, positive };

std::string_view to_string(TestResult result);
// Throws on anything other than "positive" / "negative".
TestResult parse_test_result(std::string_view text);

// Handed to the tested user out of band. Only its hash travels to the backend
// on the reporting path.
struct UserToken : FixedBytes<32> {
    static UserToken from(const FixedBytes<32>& b) { return UserToken{b}; }
};

Hash32 token_hash(const UserToken& token);

UserToken issue_test_token();

class HealthAuthorityCredential {
public:
    static HealthAuthorityCredential generate();
    static HealthAuthorityCredential from_seed(const crypto::Ed25519Seed& seed);

    const crypto::Ed25519Public& verify_key() const { return key_.public_key(); }
    const crypto::Ed25519KeyPair& signing_key() const { return key_; }

private:
    explicit HealthAuthorityCredential(crypto::Ed25519KeyPair key) : key_(std::move(key)) {}

    crypto::Ed25519KeyPair key_;
};

struct SignedReport {
    Hash32 token_hash;
    TestResult result = TestResult::negative;
    ident::IntervalIndex interval;
    crypto::Ed25519Signature signature;

    bool operator==(const SignedReport&) const = default;
};

// Canonical JSON of {interval, result, token_hash}; this is what gets signed.
std::string report_body(const Hash32& token_hash, TestResult result, ident::IntervalIndex interval);

SignedReport sign_report(const HealthAuthorityCredential& cred, const Hash32& token_hash,
                         TestResult result, ident::IntervalIndex interval);

bool verify_report(const crypto::Ed25519Public& verify_key, const SignedReport& report);

// Verifies a report given its encoded body. Bodies that do not decode as a
// canonical report are rejected.
bool verify_encoded_report(const crypto::Ed25519Public& verify_key, std::string_view body,
                           const crypto::Ed25519Signature& signature);

SignedReport decode_report_body(std::string_view body, const crypto::Ed25519Signature& signature);

} // namespace cct::authority
