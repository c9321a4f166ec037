#include "vvccs/planner.hpp"

#include <algorithm>
#include <cmath>

namespace vvccs::plan {

namespace {
constexpr double kEmergencyBuffer = 0.1; // m beyond the braking distance
constexpr double kLineMargin = 0.02;     // m held back from a hold line when waiting
constexpr double kImminentWindow = 0.6;  // s before t_start at which the stop-line hold releases
// Inside this horizon the window can no longer move (extensions fire half a
// second out and reach peers within a decision period), so the approach only
// needs to guarantee it cannot reach the entry before t_start.
constexpr double kCommitWindow = 0.3;

/// Speed that still allows halting within dist. The motor lag makes the
/// final approach exponential: below a*tau the deceleration is only v/tau,
/// so the stop distance is v*tau there and v^2/(2a) + a*tau^2/2 above it.
double stop_envelope(double dist, double a_min, double tau) {
    if (dist <= 0) return 0.0;
    double a = std::abs(a_min);
    if (dist <= a * tau * tau) return dist / tau;
    return std::sqrt(2.0 * a * dist - a * a * tau * tau);
}
} // namespace

const char* reason_name(Reason r) {
    switch (r) {
        case Reason::NoLeaseCruise: return "no_lease_cruise";
        case Reason::MeetLease: return "meet_lease";
        case Reason::StopAtLine: return "stop_at_line";
        case Reason::CrossAdvised: return "cross_advised";
        case Reason::PostCrossAdvised: return "post_cross_advised";
        case Reason::EmergencyStop: return "emergency_stop";
        case Reason::PreemptedHold: return "preempted_hold";
    }
    return "unknown";
}

double stopping_distance(double v, double a_min) {
    return v * v / (2.0 * std::abs(a_min));
}

double pace_speed(double dist, double time_remaining, double v_advised, double a_max,
                  double v_max) {
    if (dist <= 0) return v_advised;
    if (time_remaining <= 1e-9) return std::min(v_advised, v_max);
    // cruise at v_c, then accelerate at a_max to arrive at v_advised:
    //   v_c * T + (v_advised - v_c)^2 / (2 a) = dist, with u = v_advised - v_c
    double disc = time_remaining * time_remaining -
                  2.0 * (v_advised * time_remaining - dist) / a_max;
    if (disc >= 0) {
        double u = a_max * (time_remaining - std::sqrt(disc));
        double v_c = v_advised - u;
        if (v_c >= 0 && v_c <= v_advised + 1e-9) return std::clamp(v_c, 0.0, v_max);
    }
    // behind schedule (or no feasible profile): aim for the mean speed
    return std::clamp(dist / time_remaining, 0.0, v_max);
}

PlanDirective plan_speed(const PlanInput& in, const dyn::VehicleParams& params) {
    // emergency stop preempts everything
    if (in.obstacle_ahead.has_value() &&
        *in.obstacle_ahead <= stopping_distance(in.speed, params.a_min) + kEmergencyBuffer)
        return {0.0, Reason::EmergencyStop};

    switch (in.phase) {
        case Phase::Crossing:
            if (in.lease_preempted) return {0.0, Reason::PreemptedHold};
            return {std::min(in.v_advised, params.v_max), Reason::CrossAdvised};
        case Phase::PostCrossing:
            return {std::min(in.v_advised, params.v_max), Reason::PostCrossAdvised};
        case Phase::Planning:
            break;
    }

    if (in.lease_window.has_value()) {
        double t_to_start = in.lease_window->start - in.now;
        double dist = in.enter_s - in.s;
        double v = (t_to_start <= 0) ? in.v_advised
                                     : pace_speed(dist, t_to_start, in.v_advised, params.a_max,
                                                  params.v_max);
        if (t_to_start > kImminentWindow) {
            // window far out: hold at the stop line
            v = std::min(v, stop_envelope(in.stop_line_s - in.s - kLineMargin, params.a_min,
                                          params.motor_lag_tau));
        } else if (t_to_start > kCommitWindow) {
            // approach, but stay able to stop short of the entry in case the
            // window is postponed
            v = std::min(v, stop_envelope(dist - kLineMargin, params.a_min,
                                          params.motor_lag_tau));
        } else if (t_to_start > 0) {
            // committed: cap so the entry cannot be reached before t_start
            v = std::min(v, std::max(0.0, dist - kLineMargin) / t_to_start);
        }
        return {std::clamp(v, 0.0, params.v_max), Reason::MeetLease};
    }

    double d_line = in.stop_line_s - in.s;
    double cruise = std::min(in.v_advised, params.v_max);
    double cap = stop_envelope(d_line - kLineMargin, params.a_min, params.motor_lag_tau);
    if (cap < cruise) return {std::max(cap, 0.0), Reason::StopAtLine};
    return {cruise, Reason::NoLeaseCruise};
}

} // namespace vvccs::plan
