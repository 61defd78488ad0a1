#include "permesh/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <fmt/format.h>

#include "permesh/catalog.hpp"
#include "permesh/device.hpp"

namespace permesh {

using nlohmann::json;

namespace {

constexpr const char* kBenchHost = "api.bench.example";
constexpr const char* kBenchPackage = "org.permesh.bench";

AppManifest bench_manifest(bool via_proxy) {
    AppManifest m;
    m.package = kBenchPackage;
    if (via_proxy) {
        m.permissions.push_back({std::string(catalog::kDomainSelective), ParamValues{"*.bench.example"}});
    } else {
        m.legacy = true;
        m.permissions.push_back({std::string(catalog::kInternet), std::nullopt});
    }
    return m;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

BenchSeries bench_http(std::size_t n, bool via_proxy, double latency_ms) {
    DeviceConfig cfg;
    cfg.latency_ms = latency_ms;
    Device device(cfg);
    device.dns().add_record(kBenchHost, Ipv4{{10, 0, 0, 80}});
    device.network().add_server(Ipv4{{10, 0, 0, 80}}, StubServer{"bench", 201, "created"});
    device.install(bench_manifest(via_proxy));

    BenchSeries s;
    s.via_proxy = via_proxy;
    s.latency_ms = latency_ms;
    s.pipeline_ms.reserve(n);
    const std::string url = std::string("http://") + kBenchHost + "/post";
    for (std::size_t i = 0; i < n; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const HttpOutcome out = device.http_request(kBenchPackage, HttpMethod::post, url, "payload");
        const auto t1 = std::chrono::steady_clock::now();
        device.tick();
        const double real = std::chrono::duration<double, std::milli>(t1 - t0).count();
        s.pipeline_ms.push_back(real);
        s.request_ms.push_back(real + out.timing_ms);
    }
    s.median_pipeline_ms = median(s.pipeline_ms);
    s.median_ms = median(s.request_ms);
    s.total_ms = std::accumulate(s.request_ms.begin(), s.request_ms.end(), 0.0);
    return s;
}

BenchReport run_bench(std::size_t n, double latency_ms) {
    BenchReport r;
    r.n = n;
    r.latency_ms = latency_ms;
    r.direct = bench_http(n, false, latency_ms);
    r.proxy = bench_http(n, true, latency_ms);
    r.overhead_ms = r.proxy.median_pipeline_ms - r.direct.median_pipeline_ms;
    return r;
}

json BenchReport::to_json() const {
    const auto series = [](const BenchSeries& s) {
        return json{{"pipelineMs", s.pipeline_ms},
                    {"requestMs", s.request_ms},
                    {"medianPipelineMs", s.median_pipeline_ms},
                    {"medianMs", s.median_ms},
                    {"totalMs", s.total_ms}};
    };
    return json{{"n", n}, {"latencyMs", latency_ms}, {"direct", series(direct)}, {"proxy", series(proxy)},
                {"overheadMs", overhead_ms}};
}

std::string BenchReport::to_table() const {
    std::string out = fmt::format("POST benchmark: n={} simulated latency={:.3f} ms\n", n, latency_ms);
    out += fmt::format("{:<8} {:>14} {:>14} {:>12}\n", "mode", "median ms", "pipeline ms", "total ms");
    if (n == 0) {
        return out;
    }
    for (const BenchSeries* s : {&direct, &proxy}) {
        out += fmt::format("{:<8} {:>14.4f} {:>14.4f} {:>12.3f}\n", s->via_proxy ? "proxy" : "direct", s->median_ms,
                           s->median_pipeline_ms, s->total_ms);
    }
    out += fmt::format("overhead (proxy - direct, median pipeline): {:.4f} ms\n", overhead_ms);
    return out;
}

}  // namespace permesh
