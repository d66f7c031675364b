// cct: contact-tracing backend, health-authority and device tooling, and the
// scenario simulator in one binary.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <pthread.h>

#include "CLI11.hpp"

#include "cct/authority.hpp"
#include "cct/canonical_json.hpp"
#include "cct/client.hpp"
#include "cct/codec.hpp"
#include "cct/config.hpp"
#include "cct/enclave.hpp"
#include "cct/error.hpp"
#include "cct/scenario.hpp"
#include "cct/service.hpp"
#include "cct/sim.hpp"
#include "cct/transport.hpp"

namespace {

using namespace cct;
using canonical::Json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ClientArgs {
    std::string config_path;
    std::string connect;
};

void add_client_flags(CLI::App* cmd, ClientArgs& args)
{
    cmd->add_option("--config", args.config_path, "Service config file (JSON)")->required();
    cmd->add_option("--connect", args.connect, "Backend address host:port (default: config listen)");
}

struct Session {
    std::unique_ptr<wire::TcpConnection> connection;
    std::unique_ptr<wire::Client> client;
};

Session open_session(const ClientArgs& args)
{
    auto cfg = config::load_service_config(args.config_path);
    auto endpoint = args.connect.empty() ? cfg.listen : wire::Endpoint::parse(args.connect);
    Session s;
    s.connection = std::make_unique<wire::TcpConnection>(endpoint);
    s.client = std::make_unique<wire::Client>(*s.connection, cfg.enclave_config().measurement(),
                                              cfg.platform_verify_key);
    s.client->handshake();
    return s;
}

std::vector<contact_log::ContactTuple> read_log(const std::string& path)
{
    if (!std::filesystem::exists(path)) return {};
    return codec::tuples_from_json(canonical::parse_lenient(config::read_file(path)));
}

void write_log(const std::string& path, const std::vector<contact_log::ContactTuple>& tuples)
{
    config::write_file(path, canonical::dump(codec::tuples_to_json(tuples)) + "\n");
}

int run_keygen()
{
    auto platform_secret = crypto::random_fixed<32>();
    auto platform_key = attestation::platform_signing_key(platform_secret);
    auto ha = authority::HealthAuthorityCredential::generate();
    Json out = {
        {"ha_signing_key", ha.signing_key().seed().hex()},
        {"ha_verify_key", ha.verify_key().hex()},
        {"platform_secret", platform_secret.hex()},
        {"platform_verify_key", platform_key.public_key().hex()},
    };
    std::cout << canonical::dump(out) << "\n";
    return kExitOk;
}

int run_serve(const std::string& config_path, const std::string& listen)
{
    auto cfg = config::load_service_config(config_path);
    if (!listen.empty()) cfg.listen = wire::Endpoint::parse(listen);
    auto platform_secret = config::secret_from_env(config::kPlatformSecretEnv);
    auto platform_key = attestation::platform_signing_key(platform_secret);
    if (platform_key.public_key() != cfg.platform_verify_key) {
        throw Error("platform secret does not match platform_verify_key in config");
    }

    // Block termination signals before any thread starts so sigtimedwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    enclave::Enclave enclave(cfg.enclave_config(), platform_secret,
                             std::make_unique<enclave::FileSealedStorage>(cfg.sealed_store_path),
                             enclave::system_clock());
    wire::Service service(enclave, platform_key);
    wire::TcpServer server(service, cfg.listen);
    std::cerr << "measurement " << enclave.measurement().hex() << "\n";
    std::cerr << "listening on " << cfg.listen.host << ":" << server.port() << std::endl;

    timespec period{60, 0};
    while (true) {
        int sig = sigtimedwait(&signals, nullptr, &period);
        if (sig == SIGINT || sig == SIGTERM) break;
        enclave.expire_store(enclave.current_interval());
    }
    server.stop();
    return kExitOk;
}

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> poll_every;
    std::string mode;
    bool insecure_plaintext = false;
    bool poll_logging = false;
    bool tcp = false;
    std::size_t flush_polls = 1000;
};

int run_simulate(const SimulateArgs& args)
{
    auto scenario = sim::parse_scenario(config::read_file(args.scenario));
    if (args.seed) scenario.seed = *args.seed;
    if (args.poll_every) scenario.poll_every = *args.poll_every;
    if (!args.mode.empty()) scenario = sim::with_mode(scenario, sim::parse_upload_mode(args.mode));

    sim::SimOptions options;
    options.insecure_plaintext = args.insecure_plaintext;
    options.log_polls = args.poll_logging;
    options.use_tcp = args.tcp;
    options.flush_audit_polls = args.flush_polls;

    auto report = sim::run_scenario(scenario, options);
    auto json = report.to_json();
    if (args.out.empty()) {
        std::cout << json << "\n";
    } else {
        config::write_file(args.out, json + "\n");
    }
    return report.passed() ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Confidential contact-tracing backend and simulator"};
    app.require_subcommand(1);

    auto* keygen = app.add_subcommand("keygen", "Emit platform and health-authority key pairs as hex");

    std::string serve_config, serve_listen;
    auto* serve = app.add_subcommand("serve", "Run the backend service");
    serve->add_option("--config", serve_config, "Service config file (JSON)")->required();
    serve->add_option("--listen", serve_listen, "Listen address host:port");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and print the audited report");
    simulate->add_option("--scenario", sim_args.scenario, "Scenario file (JSON)")->required();
    simulate->add_option("--out", sim_args.out, "Write the report here instead of stdout");
    simulate->add_option("--seed", sim_args.seed, "Override the scenario seed");
    simulate->add_option("--poll-every", sim_args.poll_every, "Also poll every k intervals");
    simulate->add_option("--mode", sim_args.mode, "Force every upload to tuple or secret mode")
        ->check(CLI::IsMember({"tuple", "secret"}));
    simulate->add_option("--flush-polls", sim_args.flush_polls, "Random polls for the flush audit");
    simulate->add_flag("--insecure-plaintext", sim_args.insecure_plaintext,
                       "Negative control: send envelope payloads in plaintext");
    simulate->add_flag("--poll-logging", sim_args.poll_logging,
                       "Negative control: backend persists every poll");
    simulate->add_flag("--tcp", sim_args.tcp, "Drive the backend over loopback TCP, concurrently");

    auto* ha = app.add_subcommand("ha", "Health-authority actions");
    ha->require_subcommand(1);
    auto* ha_token = ha->add_subcommand("issue-token", "Issue a fresh test token");
    ClientArgs ha_client;
    std::string report_hash, report_result;
    std::uint64_t report_interval = 0;
    auto* ha_report = ha->add_subcommand("report", "Submit a signed test result (key from CCT_HA_SIGNING_KEY)");
    add_client_flags(ha_report, ha_client);
    ha_report->add_option("--token-hash", report_hash, "SHA-256 of the user token, hex")->required();
    ha_report->add_option("--result", report_result, "positive or negative")
        ->required()
        ->check(CLI::IsMember({"positive", "negative"}));
    ha_report->add_option("--interval", report_interval, "Interval index of the test")->required();

    auto* device = app.add_subcommand("device", "Device actions");
    device->require_subcommand(1);
    auto* dev_secret = device->add_subcommand("new-secret", "Generate a device secret");
    std::string derive_secret;
    std::uint64_t derive_interval = 0;
    auto* dev_derive = device->add_subcommand("derive", "Print the identifier for an interval");
    dev_derive->add_option("--secret", derive_secret, "Device secret, hex")->required();
    dev_derive->add_option("--interval", derive_interval, "Interval index")->required();

    std::string log_path, sent_hex, received_hex;
    std::uint64_t record_interval = 0;
    auto* dev_record = device->add_subcommand("record", "Append a contact tuple to a log file");
    dev_record->add_option("--log", log_path, "Contact log file")->required();
    dev_record->add_option("--sent", sent_hex, "Identifier sent, hex")->required();
    dev_record->add_option("--received", received_hex, "Identifier received, hex")->required();
    dev_record->add_option("--interval", record_interval, "Interval index")->required();

    ClientArgs dev_client;
    std::string token_hex, secret_hex;
    std::uint64_t from = 0, to = 0;
    auto* dev_result = device->add_subcommand("result", "Poll for a test result");
    add_client_flags(dev_result, dev_client);
    dev_result->add_option("--token", token_hex, "User token, hex")->required();

    auto* dev_upload = device->add_subcommand("upload", "Upload the contact log after a positive test");
    add_client_flags(dev_upload, dev_client);
    dev_upload->add_option("--token", token_hex, "User token, hex")->required();
    dev_upload->add_option("--log", log_path, "Contact log file")->required();

    auto* dev_upload_secret = device->add_subcommand("upload-secret", "Upload the device secret for a range");
    add_client_flags(dev_upload_secret, dev_client);
    dev_upload_secret->add_option("--token", token_hex, "User token, hex")->required();
    dev_upload_secret->add_option("--secret", secret_hex, "Device secret, hex")->required();
    dev_upload_secret->add_option("--from", from, "First interval")->required();
    dev_upload_secret->add_option("--to", to, "Last interval")->required();

    auto* dev_poll = device->add_subcommand("poll", "Poll for matches with the contact log");
    add_client_flags(dev_poll, dev_client);
    dev_poll->add_option("--log", log_path, "Contact log file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (keygen->parsed()) return run_keygen();
        if (serve->parsed()) return run_serve(serve_config, serve_listen);
        if (simulate->parsed()) return run_simulate(sim_args);

        if (ha_token->parsed()) {
            auto token = authority::issue_test_token();
            Json out = {{"token", token.hex()}, {"token_hash", authority::token_hash(token).hex()}};
            std::cout << canonical::dump(out) << "\n";
            return kExitOk;
        }
        if (ha_report->parsed()) {
            auto cred = authority::HealthAuthorityCredential::from_seed(
                config::secret_from_env(config::kHaSigningKeyEnv));
            auto report = authority::sign_report(cred, Hash32::from_hex_string(report_hash),
                                                 authority::parse_test_result(report_result),
                                                 ident::IntervalIndex{report_interval});
            auto s = open_session(ha_client);
            s.client->report(report);
            std::cout << "{\"status\":\"ack\"}\n";
            return kExitOk;
        }

        if (dev_secret->parsed()) {
            std::cout << ident::DeviceSecret::generate().hex() << "\n";
            return kExitOk;
        }
        if (dev_derive->parsed()) {
            auto secret = ident::DeviceSecret::from(FixedBytes<32>::from_hex_string(derive_secret));
            std::cout << ident::derive_identifier(secret, ident::IntervalIndex{derive_interval}).hex() << "\n";
            return kExitOk;
        }
        if (dev_record->parsed()) {
            auto log = contact_log::ContactLog::from_tuples(read_log(log_path));
            log.record_contact(ident::RandomIdentifier::from(FixedBytes<16>::from_hex_string(sent_hex)),
                               ident::RandomIdentifier::from(FixedBytes<16>::from_hex_string(received_hex)),
                               ident::IntervalIndex{record_interval});
            write_log(log_path, log.export_tuples());
            return kExitOk;
        }

        auto token = [&] { return authority::UserToken::from(FixedBytes<32>::from_hex_string(token_hex)); };
        if (dev_result->parsed()) {
            auto s = open_session(dev_client);
            Json out = {{"result", std::string(enclave::to_string(s.client->poll_result(token())))}};
            std::cout << canonical::dump(out) << "\n";
            return kExitOk;
        }
        if (dev_upload->parsed()) {
            auto s = open_session(dev_client);
            s.client->upload(token(), read_log(log_path));
            std::cout << "{\"status\":\"ack\"}\n";
            return kExitOk;
        }
        if (dev_upload_secret->parsed()) {
            auto s = open_session(dev_client);
            s.client->upload_secret(token(),
                                    ident::DeviceSecret::from(FixedBytes<32>::from_hex_string(secret_hex)),
                                    ident::IntervalIndex{from}, ident::IntervalIndex{to});
            std::cout << "{\"status\":\"ack\"}\n";
            return kExitOk;
        }
        if (dev_poll->parsed()) {
            auto s = open_session(dev_client);
            auto result = s.client->poll(read_log(log_path));
            std::cout << wire::encode(wire::PollResp{result}) << "\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
