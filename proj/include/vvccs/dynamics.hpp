#pragma once

#include <string>

namespace vvccs::dyn {

struct VehicleParams {
    double k_ff = 0.1;  // duty cycle per (m/s)
    double k_p = 0.15;
    // Small: the slew-limited ramp winds the integrator up, and the
    // resulting overshoot must stay inside a 5% settling band.
    double k_i = 0.01;
    double v_max = 2.0;          // m/s
    double a_max = 1.0;          // m/s^2
    double a_min = -2.0;         // m/s^2, braking
    double motor_lag_tau = 0.3;  // s
    double length = 0.425;       // m
    double width = 0.192;        // m
};

struct MotorState {
    double v_current = 0.0;
    double integral_error = 0.0; // accumulated e * dt
    double odometer_s = 0.0;     // integrated distance
    double duty_cycle = 0.0;
};

struct ControlResult {
    MotorState motor;
    double duty_cycle = 0.0;
};

/// Feedforward + PI speed controller. duty = k_ff*v_target + k_p*e + k_i*integral,
/// clamped to [0, 1]; integral anti-windup keeps k_i*integral within [-0.5, 0.5].
/// Throws std::invalid_argument on non-finite inputs or dt <= 0.
ControlResult controller_step(const VehicleParams& params, const MotorState& motor,
                              double v_target, double dt);

/// Simulated motor: speed tracks duty_cycle/k_ff through a first-order lag,
/// slew-limited by [a_min, a_max] and capped at [0, v_max]; integrates distance.
MotorState plant_step(const VehicleParams& params, const MotorState& motor, double duty_cycle,
                      double dt);

/// Position by speed integration from a hard-coded initial position.
double localize(const MotorState& motor, double initial_s);

} // namespace vvccs::dyn
