#include "doctest.h"
#include "vvccs/planner.hpp"

using namespace vvccs;
using namespace vvccs::plan;

namespace {
PlanInput base_input() {
    PlanInput in;
    in.phase = Phase::Planning;
    in.s = 0.5;
    in.speed = 0.9;
    in.enter_s = 1.8;
    in.stop_line_s = 1.5;
    in.v_advised = 0.9;
    in.now = 10.0;
    return in;
}
} // namespace

TEST_CASE("stopping distance") {
    CHECK(stopping_distance(0.9, -2.0) == doctest::Approx(0.2025));
    CHECK(stopping_distance(0.0, -2.0) == 0.0);
}

TEST_CASE("pace speed reaches the line on time") {
    // 1 m in 2 s arriving at 0.9 m/s: cruise slower, then accelerate
    double v_c = pace_speed(1.0, 2.0, 0.9, 1.0, 2.0);
    CHECK(v_c < 0.9);
    CHECK(v_c > 0.0);
    // verify the profile actually covers the distance
    double u = 0.9 - v_c;
    double d = v_c * 2.0 + u * u / 2.0;
    CHECK(d == doctest::Approx(1.0).epsilon(1e-6));
    // behind schedule: falls back to mean speed, clamped to v_max
    CHECK(pace_speed(10.0, 1.0, 0.9, 1.0, 2.0) == doctest::Approx(2.0));
    CHECK(pace_speed(0.0, 5.0, 0.9, 1.0, 2.0) == doctest::Approx(0.9));
}

TEST_CASE("emergency stop preempts every other rule") {
    dyn::VehicleParams p;
    auto in = base_input();
    in.phase = Phase::Crossing;
    in.obstacle_ahead = 0.25; // within braking distance + buffer at 0.9 m/s
    auto d = plan_speed(in, p);
    CHECK(d.v_target == 0.0);
    CHECK(d.reason == Reason::EmergencyStop);

    in.obstacle_ahead = 2.0; // far away: crossing continues
    d = plan_speed(in, p);
    CHECK(d.reason == Reason::CrossAdvised);
    CHECK(d.v_target == doctest::Approx(0.9));
}

TEST_CASE("phases map to their speed rules") {
    dyn::VehicleParams p;
    auto in = base_input();

    in.phase = Phase::Crossing;
    CHECK(plan_speed(in, p).reason == Reason::CrossAdvised);
    in.lease_preempted = true;
    auto d = plan_speed(in, p);
    CHECK(d.reason == Reason::PreemptedHold);
    CHECK(d.v_target == 0.0);

    in.lease_preempted = false;
    in.phase = Phase::PostCrossing;
    d = plan_speed(in, p);
    CHECK(d.reason == Reason::PostCrossAdvised);
    CHECK(d.v_target == doctest::Approx(0.9));
}

TEST_CASE("without a lease the vehicle cruises and holds at the stop line") {
    dyn::VehicleParams p;
    auto in = base_input();
    auto d = plan_speed(in, p);
    CHECK(d.reason == Reason::NoLeaseCruise);
    CHECK(d.v_target == doctest::Approx(0.9));

    in.s = 1.45; // 5 cm before the line
    d = plan_speed(in, p);
    CHECK(d.reason == Reason::StopAtLine);
    CHECK(d.v_target < 0.4);
    in.s = 1.55; // past the line: stay put
    d = plan_speed(in, p);
    CHECK(d.v_target == 0.0);
}

TEST_CASE("lease holder paces toward its window") {
    dyn::VehicleParams p;
    auto in = base_input();

    SUBCASE("window open: advised speed") {
        in.lease_window = lease::Interval{9.0, 12.0};
        auto d = plan_speed(in, p);
        CHECK(d.reason == Reason::MeetLease);
        CHECK(d.v_target == doctest::Approx(0.9));
    }
    SUBCASE("window far out: held at the stop line") {
        in.lease_window = lease::Interval{30.0, 33.0};
        in.s = 1.48;
        auto d = plan_speed(in, p);
        CHECK(d.reason == Reason::MeetLease);
        CHECK(d.v_target < 1e-6);
    }
    SUBCASE("window imminent: rolls on but stays able to stop short of the entry") {
        in.lease_window = lease::Interval{10.4, 13.0};
        in.s = 1.6; // between stop line and entry
        auto d = plan_speed(in, p);
        CHECK(d.v_target > 0.0);
        // 0.18 m to the margin point, all inside the lag-dominated regime
        CHECK(d.v_target <= 0.18 / p.motor_lag_tau + 1e-9);
    }
    SUBCASE("committed: cannot reach the entry before the window opens") {
        in.lease_window = lease::Interval{10.2, 13.0};
        in.s = 1.6;
        auto d = plan_speed(in, p);
        CHECK(d.v_target <= (1.8 - 1.6 - 0.02) / 0.2 + 1e-9);
        in.s = 1.79; // past the margin point: wait for the window
        d = plan_speed(in, p);
        CHECK(d.v_target == 0.0);
    }
    SUBCASE("far from the line the pace profile governs") {
        in.lease_window = lease::Interval{13.0, 16.0};
        in.s = 0.0;
        in.speed = 0.9;
        auto d = plan_speed(in, p);
        CHECK(d.reason == Reason::MeetLease);
        CHECK(d.v_target < 0.9);
        CHECK(d.v_target == doctest::Approx(pace_speed(1.8, 3.0, 0.9, 1.0, 2.0)));
    }
}
