// permesh: analyze manifests, run scenarios, benchmark mediation, serve the
// control API. Exit codes: 0 pass, 1 scenario failure, 2 usage or input error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "permesh/analyze.hpp"
#include "permesh/bench.hpp"
#include "permesh/control_api.hpp"
#include "permesh/error.hpp"
#include "permesh/scenario.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::int64_t seed_from_env() {
    const char* raw = std::getenv("PERMESH_SEED");
    if (raw == nullptr || *raw == '\0') return 0;
    std::size_t used = 0;
    const long long v = std::stoll(raw, &used);
    if (used != std::strlen(raw)) throw std::invalid_argument("PERMESH_SEED must be an integer");
    return v;
}

int cmd_analyze(const std::string& manifest_path, const std::string& compare_path,
                const std::vector<std::string>& domains, const std::vector<std::string>& proxy_files,
                const std::string& format) {
    permesh::AnalyzeOptions options;
    for (const std::string& f : proxy_files) {
        options.extra_proxies.push_back(permesh::load_descriptor_file(f));
    }
    if (!compare_path.empty()) {
        options.compare = permesh::load_manifest_file(compare_path);
    }
    options.domains = domains;
    const permesh::Analysis a = permesh::analyze_manifest(permesh::load_manifest_file(manifest_path), options);
    if (format == "json") {
        std::cout << a.to_json().dump(2) << '\n';
    } else {
        std::cout << a.to_text();
    }
    return kPass;
}

int cmd_run(const std::string& path, const std::string& format, const std::string& log_path,
            const std::string& pinning) {
    const permesh::Scenario scenario = permesh::load_scenario(path);
    permesh::RunOptions options;
    if (pinning == "on") options.pinning = true;
    if (pinning == "off") options.pinning = false;
    options.start_time_ms = seed_from_env();
    const permesh::Report report = permesh::run_scenario(scenario, options);
    if (!log_path.empty()) {
        std::ofstream out(log_path, std::ios::binary);
        if (!out) {
            std::cerr << "permesh: cannot write " << log_path << '\n';
            return kUsage;
        }
        out << report.event_log;
    }
    if (format == "json") {
        permesh::Report trimmed = report;
        trimmed.event_log.clear();
        std::cout << trimmed.to_json().dump(2) << '\n';
    } else {
        std::cout << report.to_text();
    }
    return report.pass ? kPass : kFail;
}

int cmd_bench(std::size_t n, double latency_ms, const std::string& format) {
    const permesh::BenchReport r = permesh::run_bench(n, latency_ms);
    if (format == "json") {
        std::cout << r.to_json().dump(2) << '\n';
    } else {
        std::cout << r.to_table();
    }
    return kPass;
}

int cmd_serve(const std::string& host, int port, const std::string& token, const std::string& static_dir,
              const std::string& scenario) {
    permesh::ControlApiOptions options;
    options.host = host;
    options.port = port;
    options.token = token;
    options.static_dir = static_dir;
    options.run.start_time_ms = seed_from_env();
    permesh::ControlApi api(options);
    if (!api.bind()) {
        std::cerr << "permesh: cannot listen on " << host << ":" << port << " (address in use?)\n";
        return kUsage;
    }
    if (!scenario.empty()) {
        api.load_scenario_file(scenario);
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    api.start();
    std::cerr << "permesh: control API on http://" << host << ":" << api.port() << "\n";
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    api.stop();
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"permesh: permission proxy simulator"};
    app.require_subcommand(1);

    std::string format = "text";
    const auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
    };

    auto* analyze = app.add_subcommand("analyze", "Install prompt, native footprint, least-privilege diff");
    std::string manifest;
    std::string compare;
    std::vector<std::string> domains;
    std::vector<std::string> proxy_files;
    analyze->add_option("manifest", manifest, "Manifest JSON")->required();
    analyze->add_option("--compare", compare, "Proxied counterpart manifest to diff against");
    analyze->add_option("--domains", domains, "Domains for the derived counterpart")->delimiter(',');
    analyze->add_option("--proxy", proxy_files, "Extra proxy descriptor JSON (repeatable)");
    add_format(analyze);

    auto* run = app.add_subcommand("run", "Run a scenario headless");
    std::string scenario;
    std::string log_path;
    std::string pinning;
    run->add_option("scenario", scenario, "Scenario JSON")->required();
    run->add_option("--log", log_path, "Write the event log as JSONL");
    run->add_option("--pinning", pinning, "Override DNS pinning")->check(CLI::IsMember({"on", "off"}));
    add_format(run);

    auto* bench = app.add_subcommand("bench", "POST benchmark, direct vs proxied");
    std::size_t n = 32;
    double latency_ms = 1.0;
    bench->add_option("--n", n, "Requests per mode");
    bench->add_option("--latency-ms", latency_ms, "Simulated network latency per request")
        ->check(CLI::NonNegativeNumber);
    add_format(bench);

    auto* serve = app.add_subcommand("serve", "Start the control API");
    std::string host = "127.0.0.1";
    int port = 7750;
    std::string token;
    std::string static_dir;
    std::string serve_scenario;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--token", token, "Shared secret for X-Permesh-Token");
    serve->add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);
    serve->add_option("--scenario", serve_scenario, "Scenario to load at startup");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kPass;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return kPass;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*analyze) return cmd_analyze(manifest, compare, domains, proxy_files, format);
        if (*run) return cmd_run(scenario, format, log_path, pinning);
        if (*bench) return cmd_bench(n, latency_ms, format);
        if (*serve) return cmd_serve(host, port, token, static_dir, serve_scenario);
    } catch (const permesh::Error& e) {
        std::cerr << "permesh: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "permesh: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
