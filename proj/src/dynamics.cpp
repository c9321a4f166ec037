#include "vvccs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vvccs::dyn {

namespace {
constexpr double kIntegralClamp = 0.5; // bound on k_i * integral contribution
}

ControlResult controller_step(const VehicleParams& params, const MotorState& motor,
                              double v_target, double dt) {
    if (!std::isfinite(v_target) || !std::isfinite(motor.v_current) || !std::isfinite(dt))
        throw std::invalid_argument("controller_step: non-finite input");
    if (dt <= 0) throw std::invalid_argument("controller_step: dt must be positive");
    if (v_target < 0) throw std::invalid_argument("controller_step: v_target must be >= 0");

    MotorState next = motor;
    double e = v_target - motor.v_current;
    next.integral_error += e * dt;
    if (params.k_i > 0) {
        double bound = kIntegralClamp / params.k_i;
        next.integral_error = std::clamp(next.integral_error, -bound, bound);
    }
    double duty = params.k_ff * v_target + params.k_p * e + params.k_i * next.integral_error;
    duty = std::clamp(duty, 0.0, 1.0);
    next.duty_cycle = duty;
    return {next, duty};
}

MotorState plant_step(const VehicleParams& params, const MotorState& motor, double duty_cycle,
                      double dt) {
    if (!std::isfinite(duty_cycle) || !std::isfinite(dt) || dt <= 0)
        throw std::invalid_argument("plant_step: bad input");
    if (duty_cycle < 0 || duty_cycle > 1)
        throw std::invalid_argument("plant_step: duty_cycle outside [0, 1]");

    MotorState next = motor;
    double v_implied = duty_cycle / params.k_ff;
    double dv = (v_implied - motor.v_current) * (dt / params.motor_lag_tau);
    dv = std::clamp(dv, params.a_min * dt, params.a_max * dt);
    next.v_current = std::clamp(motor.v_current + dv, 0.0, params.v_max);
    // static friction: an idle motor cannot sustain a crawl
    if (v_implied < 0.02 && next.v_current < 0.02) next.v_current = 0.0;
    next.duty_cycle = duty_cycle;
    next.odometer_s += next.v_current * dt;
    return next;
}

double localize(const MotorState& motor, double initial_s) {
    return initial_s + motor.odometer_s;
}

} // namespace vvccs::dyn
