#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vvccs::net {

enum class LatencyMode { Zero, Fixed, LogNormal };

struct NetParams {
    double msg_size = 4096.0;      // bytes per update
    double update_period = 0.1;    // s
    LatencyMode latency_mode = LatencyMode::Fixed;
    double sync_latency = 0.0086;  // s; fixed value, or p90 target in log-normal mode
    double lognormal_sigma = 0.5;
    double capacity = 30720000.0;  // bytes/s; 30 MB/s with 1 MB = 1000 KiB
    double loss_prob = 0.0;
    double overhead_fraction = 0.0;
};

/// Total store-synchronization traffic for n vehicles, bytes/s.
double aggregate_bandwidth(int n_vehicles, const NetParams& params);

/// Largest vehicle count whose aggregate bandwidth fits the configured capacity.
int max_supported_vehicles(const NetParams& params);

/// One synchronization-latency draw in seconds. In log-normal mode the
/// distribution is parameterized so its 90th percentile equals sync_latency.
double sample_latency(const NetParams& params, std::mt19937_64& rng);

LatencyMode parse_latency_mode(const std::string& name);

} // namespace vvccs::net
