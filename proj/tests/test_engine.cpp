#include <sstream>

#include "doctest.h"
#include "vvccs/engine.hpp"

using namespace vvccs;
using namespace vvccs::sim;

namespace {
Scenario load(const char* name) {
    return load_scenario(std::string(VVCCS_SCENARIO_DIR) + "/" + name);
}
} // namespace

TEST_CASE("trace level parsing") {
    CHECK(parse_trace_level("none") == TraceLevel::None);
    CHECK(parse_trace_level("events") == TraceLevel::Events);
    CHECK(parse_trace_level("full") == TraceLevel::Full);
    CHECK_THROWS(parse_trace_level("verbose"));
}

TEST_CASE("scenario parsing rejects malformed documents") {
    CHECK_THROWS(parse_scenario("{"));
    CHECK_THROWS(parse_scenario(R"({"name":"x","vehicles":[]})")); // no vehicles
    CHECK_THROWS(parse_scenario(
        R"({"name":"x","duration":5,"vehicles":[{"id":"a","path":"nowhere"}]})"));
    CHECK_THROWS(parse_algorithm("roundabout"));
    CHECK(parse_algorithm("lease") == Algorithm::Lease);
    CHECK(parse_algorithm("lock") == Algorithm::Lock);
}

TEST_CASE("two-vehicle crossing completes safely under leases") {
    Scenario sc = load("experiment1.json");
    sc.seed = 7;
    RunMetrics m = run_scenario(sc);
    CHECK(m.collisions.empty());
    CHECK(m.all_crossed);
    CHECK(m.invariant_violations.empty());
    CHECK(m.store_commits_audited > 0);
    CHECK(m.lease_applications >= 2);
    CHECK(m.lease_releases >= 2);
    CHECK(m.total_completion_time > 0.0);
    CHECK(m.total_completion_time < sc.duration);
    for (const auto& [id, vm] : m.vehicles) {
        CHECK(vm.crossed);
        CHECK(vm.crossing_time > 0.0);
        CHECK(vm.distance > 0.0);
    }
}

TEST_CASE("published state never goes stale beyond latency plus period") {
    Scenario sc = load("experiment2.json");
    sc.seed = 3;
    RunMetrics m = run_scenario(sc);
    double bound = sc.net.sync_latency + sc.net.update_period;
    CHECK(m.max_state_staleness > 0.0);
    CHECK(m.max_state_staleness <= bound + 1e-9);
}

TEST_CASE("identical seeds give byte-identical traces") {
    Scenario sc = load("experiment1.json");
    sc.seed = 42;
    auto run_traced = [&] {
        std::ostringstream out;
        RunOptions opts;
        opts.trace = TraceLevel::Full;
        opts.trace_out = &out;
        run_scenario(sc, opts);
        return out.str();
    };
    std::string first = run_traced();
    std::string second = run_traced();
    CHECK(!first.empty());
    CHECK(first == second);
}

TEST_CASE("lock baseline crosses safely but slower than leases") {
    Scenario sc = load("experiment1.json");
    sc.seed = 5;
    CompareResult cmp = compare_algorithms(sc);
    CHECK(cmp.lease.collisions.empty());
    CHECK(cmp.lock.collisions.empty());
    CHECK(cmp.lease.all_crossed);
    CHECK(cmp.lock.all_crossed);
    CHECK(cmp.completion_ratio ==
          doctest::Approx(cmp.lease.total_completion_time / cmp.lock.total_completion_time));
    CHECK(cmp.completion_ratio < 1.0);
}

TEST_CASE("metrics serialize to parseable json") {
    Scenario sc = load("experiment1.json");
    sc.seed = 1;
    RunMetrics m = run_scenario(sc);
    std::string js = metrics_to_json(m);
    CHECK(js.find("\"scenario\"") != std::string::npos);
    CHECK(js.find("\"all_crossed\": true") != std::string::npos);
    CHECK(js.find("\"collisions\"") != std::string::npos);
    CHECK(js.find(m.algorithm) != std::string::npos);
}

TEST_CASE("lease audit flags overlapping registrations") {
    auto model = geom::IntersectionModel::build(geom::GeometryConfig{});
    store::Store st;
    auto put_lease = [&](const std::string& holder, const std::string& path, double t0,
                         double t1) {
        lease::Lease l;
        l.lease_id = holder + "@main";
        l.holder_id = holder;
        l.path_id = path;
        l.block_id = "main";
        l.t_start = t0;
        l.t_end = t1;
        st.put(lease::lease_key(l), lease::serialize(l), holder, t0);
    };
    put_lease("a", "nb_straight", 1.0, 2.0);
    put_lease("b", "eb_straight", 2.0, 3.0); // half-open: touching is fine
    auto clean = audit_lease_log(st.op_log(), model);
    CHECK(clean.violations.empty());
    CHECK(clean.commits_audited == 2);

    put_lease("c", "wb_straight", 2.5, 3.5); // overlaps b on conflicting paths
    auto dirty = audit_lease_log(st.op_log(), model);
    CHECK(dirty.violations.size() == 1);

    // non-conflicting paths may overlap freely on a 2x2 grid
    geom::GeometryConfig cfg;
    cfg.grid = 2;
    auto model2 = geom::IntersectionModel::build(cfg);
    store::Store st2;
    lease::Lease l1, l2;
    l1.lease_id = "n@b01";
    l1.holder_id = "n";
    l1.path_id = "nb_straight";
    l1.block_id = "b01";
    l1.t_start = 1.0;
    l1.t_end = 2.0;
    l2 = l1;
    l2.lease_id = "s@b01";
    l2.holder_id = "s";
    l2.path_id = "sb_straight";
    st2.put(lease::lease_key(l1), lease::serialize(l1), "n", 1.0);
    st2.put(lease::lease_key(l2), lease::serialize(l2), "s", 1.0);
    CHECK(audit_lease_log(st2.op_log(), model2).violations.empty());
}

TEST_CASE("events-only trace skips tick states") {
    Scenario sc = load("experiment1.json");
    sc.seed = 9;
    std::ostringstream out;
    RunOptions opts;
    opts.trace = TraceLevel::Events;
    opts.trace_out = &out;
    run_scenario(sc, opts);
    std::string tr = out.str();
    CHECK(tr.find("\"lease-event\"") != std::string::npos);
    CHECK(tr.find("\"store-op\"") != std::string::npos);
    CHECK(tr.find("\"tick-state\"") == std::string::npos);
}
