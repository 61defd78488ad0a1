#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace permesh {

// One mode of the POST benchmark. Each request costs its measured pipeline
// time plus the configured simulated latency.
struct BenchSeries {
    bool via_proxy = false;
    double latency_ms = 0.0;
    std::vector<double> pipeline_ms;  // real time spent in mediation, per request
    std::vector<double> request_ms;   // pipeline_ms + latency_ms
    double median_pipeline_ms = 0.0;
    double median_ms = 0.0;
    double total_ms = 0.0;
};

BenchSeries bench_http(std::size_t n = 32, bool via_proxy = true, double latency_ms = 1.0);

struct BenchReport {
    std::size_t n = 0;
    double latency_ms = 0.0;
    BenchSeries direct;
    BenchSeries proxy;
    // Median pipeline cost of the proxy route minus the direct route.
    double overhead_ms = 0.0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

BenchReport run_bench(std::size_t n = 32, double latency_ms = 1.0);

double median(std::vector<double> values);

}  // namespace permesh
