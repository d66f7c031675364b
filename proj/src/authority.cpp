#include "cct/authority.hpp"

#include "cct/canonical_json.hpp"
#include "cct/error.hpp"

namespace cct::authority {

namespace {
constexpr std::string_view kReportLabel = "CCT-REPORT-v1";

Bytes signing_input(std::string_view body)
{
    Bytes msg = to_bytes(kReportLabel);
    append(msg, as_bytes(body));
    return msg;
}
} // namespace

std::string_view to_string(TestResult result)
{
    return result == TestResult::positive ? "positive" : "negative";
}

TestResult parse_test_result(std::string_view text)
{
    if (text == "positive") return TestResult::positive;
    if (text == "negative") return TestResult::negative;
    throw Error("invalid test result: " + std::string(text));
}

Hash32 token_hash(const UserToken& token)
{
    return crypto::sha256(token.view());
}

UserToken issue_test_token()
{
    return UserToken{crypto::random_fixed<32>()};
}

HealthAuthorityCredential HealthAuthorityCredential::generate()
{
    return HealthAuthorityCredential(crypto::Ed25519KeyPair::generate());
}

HealthAuthorityCredential HealthAuthorityCredential::from_seed(const crypto::Ed25519Seed& seed)
{
    return HealthAuthorityCredential(crypto::Ed25519KeyPair::from_seed(seed));
}

std::string report_body(const Hash32& token_hash, TestResult result, ident::IntervalIndex interval)
{
    canonical::Json body = {
        {"interval", interval.value},
        {"result", std::string(to_string(result))},
        {"token_hash", token_hash.hex()},
    };
    return canonical::dump(body);
}

SignedReport sign_report(const HealthAuthorityCredential& cred, const Hash32& token_hash,
                         TestResult result, ident::IntervalIndex interval)
{
    SignedReport report{token_hash, result, interval, {}};
    report.signature = cred.signing_key().sign(signing_input(report_body(token_hash, result, interval)));
    return report;
}

bool verify_report(const crypto::Ed25519Public& verify_key, const SignedReport& report)
{
    auto body = report_body(report.token_hash, report.result, report.interval);
    return crypto::ed25519_verify(verify_key, signing_input(body), report.signature);
}

SignedReport decode_report_body(std::string_view body, const crypto::Ed25519Signature& signature)
{
    auto json = canonical::parse(body);
    canonical::require_keys(json, {"interval", "result", "token_hash"});
    SignedReport report;
    report.interval = ident::IntervalIndex{canonical::get_u64(json, "interval")};
    report.result = parse_test_result(canonical::get_string(json, "result"));
    report.token_hash = canonical::get_fixed<Hash32>(json, "token_hash");
    report.signature = signature;
    return report;
}

bool verify_encoded_report(const crypto::Ed25519Public& verify_key, std::string_view body,
                           const crypto::Ed25519Signature& signature)
{
    try {
        auto report = decode_report_body(body, signature);
        return verify_report(verify_key, report);
    } catch (const Error&) {
        return false;
    }
}

} // namespace cct::authority
