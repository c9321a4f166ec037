#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vvccs/scenario.hpp"
#include "vvccs/store.hpp"

namespace vvccs::sim {

enum class TraceLevel { None, Events, Full };

TraceLevel parse_trace_level(const std::string& name);

struct CollisionRecord {
    double t = 0.0;
    std::string a;
    std::string b;
};

struct VehicleMetrics {
    double spawn_time = 0.0;
    double enter_time = -1.0;    // center crossed the first block boundary
    double complete_time = -1.0; // center crossed the last block boundary
    double crossing_time = -1.0;
    int stops = 0;
    double energy = 0.0; // sum of |dv| over the run
    double distance = 0.0;
    bool crossed = false;
    bool crashed = false;
};

struct RunMetrics {
    std::string scenario;
    std::string algorithm;
    std::uint64_t seed = 0;
    double duration = 0.0;
    std::map<std::string, VehicleMetrics> vehicles;
    std::vector<CollisionRecord> collisions;
    bool all_crossed = false;
    /// Last crossing completion minus first spawn; run duration when a
    /// vehicle never completed its crossing.
    double total_completion_time = 0.0;
    double max_state_staleness = 0.0;
    int lease_applications = 0;
    int lease_bring_forwards = 0;
    int lease_cancellations = 0;
    int lease_extensions = 0;
    int lease_releases = 0;
    int proxy_upserts = 0;
    int proxy_drops = 0;
    int store_commits_audited = 0;
    std::vector<std::string> invariant_violations;
};

std::string metrics_to_json(const RunMetrics& m);

struct RunOptions {
    TraceLevel trace = TraceLevel::None;
    std::ostream* trace_out = nullptr;
    /// Extra per-vehicle ids forced out of coordination (merged with the
    /// scenario's no_v2v list). Such vehicles keep their sensors.
    std::vector<std::string> extra_no_v2v;
};

/// Runs a scenario to completion with a fixed 10 ms physics step; agents make
/// decisions once per network update period on staggered slots, in
/// lexicographic id order within a tick. Deterministic for a given scenario.
RunMetrics run_scenario(const Scenario& sc, const RunOptions& opts = {});

struct CompareResult {
    RunMetrics lease;
    RunMetrics lock;
    double completion_ratio = 0.0; // lease total / lock total
};

/// Runs the scenario under both coordination algorithms with identical seeds.
CompareResult compare_algorithms(const Scenario& sc, const RunOptions& opts = {});

struct AuditResult {
    int commits_audited = 0;
    std::vector<std::string> violations;
};

/// Replays the store operation log and checks, after every committed write,
/// that no two active leases on one block with conflicting paths overlap in
/// time. Transactions are audited at their commit boundary.
AuditResult audit_lease_log(const std::vector<store::OpRecord>& log,
                            const geom::IntersectionModel& model);

} // namespace vvccs::sim
