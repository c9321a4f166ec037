#include "vvccs/net.hpp"

#include <cmath>
#include <stdexcept>

namespace vvccs::net {

double aggregate_bandwidth(int n_vehicles, const NetParams& params) {
    if (n_vehicles < 0) throw std::invalid_argument("n_vehicles must be >= 0");
    double base = n_vehicles * params.msg_size / params.update_period;
    return base * (1.0 + params.overhead_fraction);
}

int max_supported_vehicles(const NetParams& params) {
    double per_vehicle = params.msg_size / params.update_period * (1.0 + params.overhead_fraction);
    if (per_vehicle <= 0) return 0;
    double n = std::floor(params.capacity / per_vehicle + 1e-9);
    return n < 0 ? 0 : static_cast<int>(n);
}

double sample_latency(const NetParams& params, std::mt19937_64& rng) {
    switch (params.latency_mode) {
        case LatencyMode::Zero:
            return 0.0;
        case LatencyMode::Fixed:
            return params.sync_latency;
        case LatencyMode::LogNormal: {
            // exp(mu + sigma * z90) == sync_latency with z90 the standard normal p90.
            constexpr double z90 = 1.2815515655446004;
            double mu = std::log(params.sync_latency) - params.lognormal_sigma * z90;
            std::lognormal_distribution<double> dist(mu, params.lognormal_sigma);
            return dist(rng);
        }
    }
    return 0.0;
}

LatencyMode parse_latency_mode(const std::string& name) {
    if (name == "zero") return LatencyMode::Zero;
    if (name == "fixed") return LatencyMode::Fixed;
    if (name == "lognormal") return LatencyMode::LogNormal;
    throw std::invalid_argument("unknown latency mode '" + name + "'");
}

} // namespace vvccs::net
