#pragma once

#include <optional>
#include <string>

#include "vvccs/dynamics.hpp"
#include "vvccs/lease.hpp"

namespace vvccs::plan {

enum class Phase { Planning, Crossing, PostCrossing };

enum class Reason {
    NoLeaseCruise,
    MeetLease,
    StopAtLine,
    CrossAdvised,
    PostCrossAdvised,
    EmergencyStop,
    PreemptedHold,
};

const char* reason_name(Reason r);

struct PlanDirective {
    double v_target = 0.0;
    Reason reason = Reason::NoLeaseCruise;
};

/// Braking distance v^2 / (2|a_min|).
double stopping_distance(double v, double a_min);

/// Constant-speed-then-accelerate profile that reaches the entry line at
/// t_start moving at v_advised; falls back to distance/time when the exact
/// profile is infeasible.
double pace_speed(double dist, double time_remaining, double v_advised, double a_max,
                  double v_max);

struct PlanInput {
    Phase phase = Phase::Planning;
    double s = 0.0;
    double speed = 0.0;
    std::optional<lease::Interval> lease_window; // first-block window
    bool lease_preempted = false;                // window pushed past `now` while crossing
    double enter_s = 0.0;                        // first block entry arc length
    double stop_line_s = 0.0;                    // halt point for lease-less vehicles
    std::optional<double> obstacle_ahead;        // distance along path to nearest obstacle
    double v_advised = 0.9;
    double now = 0.0;
};

/// Enforcement rules, in precedence order: emergency stop, then the
/// phase-specific lease rules.
PlanDirective plan_speed(const PlanInput& in, const dyn::VehicleParams& params);

} // namespace vvccs::plan
