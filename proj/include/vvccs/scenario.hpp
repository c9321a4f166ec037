#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vvccs/dynamics.hpp"
#include "vvccs/geometry.hpp"
#include "vvccs/lease.hpp"
#include "vvccs/net.hpp"
#include "vvccs/perception.hpp"

namespace vvccs::sim {

enum class Algorithm { Lease, Lock };

Algorithm parse_algorithm(const std::string& name);
const char* algorithm_name(Algorithm a);

struct VehicleSpec {
    std::string id;
    std::string path_id;
    double spawn_time = 0.0;
    double initial_s = 0.0;
    double initial_speed = 0.0;
    bool is_v2v = true;
    dyn::VehicleParams params;
};

/// Static rectangle on a path; visible to perception while active.
struct ObstacleSpec {
    std::string path_id;
    double s = 0.0;
    double appear_time = 0.0;
    double clear_time = 0.0;
    double radius = 0.15;
};

struct Scenario {
    std::string name;
    geom::GeometryConfig geometry;
    std::vector<VehicleSpec> vehicles;
    std::vector<ObstacleSpec> obstacles;
    std::vector<geom::Rect> occluders;
    Algorithm algorithm = Algorithm::Lease;
    net::NetParams net;
    lease::SchedulerParams sched;
    percep::SensorParams sensors;
    std::uint64_t seed = 0;
    double duration = 20.0;
    double spawn_jitter = 0.0; // uniform +/- s, drawn per vehicle from the seed
    double speed_jitter = 0.0; // uniform +/- m/s
    std::vector<std::string> no_v2v; // vehicles with coordination disabled
    bool debug_invariants = true;
};

/// Parses and validates a scenario document; throws std::invalid_argument.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

} // namespace vvccs::sim
